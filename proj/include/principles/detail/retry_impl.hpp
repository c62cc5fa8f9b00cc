#pragma once

#include "principles/error.hpp"

namespace principles {

template <typename F>
auto with_retries(const RetryPolicy& policy, F&& call,
                  const std::function<void(std::chrono::milliseconds)>& sleep) -> decltype(call()) {
  for (int attempt = 0;; ++attempt) {
    try {
      return call();
    } catch (const Error& e) {
      if (!e.retryable() || attempt >= policy.max_retries) throw;
      sleep(policy.backoff_for(attempt));
    }
  }
}

}  // namespace principles
