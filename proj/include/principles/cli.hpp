#pragma once

#include "principles/dialogue.hpp"

#include <filesystem>
#include <iosfwd>

namespace principles {

/// Entry point for the `principles` tool. Returns the process exit status;
/// failures print one line "error: <code>: <message>" to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Transcript file for one-shot planning: {"seed": {...}, "turns": [{"agent": "...", "user": "..."}]}.
DialogueState load_transcript(const std::filesystem::path& path);

}  // namespace principles
