#pragma once

namespace testsupport {

/// Calls to socket()/connect() made by this process so far.
long socket_calls();
long connect_calls();

}  // namespace testsupport
