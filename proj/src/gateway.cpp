#include "principles/gateway.hpp"

#include "principles/error.hpp"
#include "principles/text.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace principles {

void validate_embedding(const EmbeddingVector& v, Eigen::Index expected_dimension) {
  require(v.size() > 0, "embedding must have a positive dimension");
  if (!v.allFinite()) fail(ErrorCode::precondition, "embedding contains non-finite values");
  if (expected_dimension > 0 && v.size() != expected_dimension)
    fail(ErrorCode::dimension_mismatch, "embedding dimension " + std::to_string(v.size()) +
                                            " does not match expected " + std::to_string(expected_dimension));
}

void validate_request(const GenerationRequest& request) {
  require(!request.prompt_text.empty(), "prompt_text must be non-empty");
  require(request.sample_count >= 1, "sample_count must be >= 1");
  require(request.temperature >= 0.0 && std::isfinite(request.temperature), "temperature must be >= 0");
}

std::string complete_one(Gateway& gateway, GenerationRequest request) {
  request.sample_count = 1;
  auto out = gateway.complete(request);
  if (out.empty() || text::trim(out.front()).empty())
    fail(ErrorCode::empty_completion, "empty completion for '" + request.purpose + "' prompt");
  return text::trim(out.front());
}

RateLimiter::RateLimiter(double requests_per_minute, double burst)
    : rate_per_second_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, burst)),
      tokens_(capacity_),
      last_(Clock::now()) {}

void RateLimiter::refill(Clock::time_point now) {
  if (now <= last_) return;
  std::chrono::duration<double> elapsed = now - last_;
  tokens_ = std::min(capacity_, tokens_ + elapsed.count() * rate_per_second_);
  last_ = now;
}

bool RateLimiter::try_acquire(Clock::time_point now) {
  if (rate_per_second_ <= 0.0) return true;
  std::lock_guard lock(mutex_);
  refill(now);
  if (tokens_ < 1.0) return false;
  tokens_ -= 1.0;
  return true;
}

void RateLimiter::acquire() {
  if (rate_per_second_ <= 0.0) return;
  for (;;) {
    std::chrono::duration<double> wait{0};
    {
      std::lock_guard lock(mutex_);
      refill(Clock::now());
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_second_);
    }
    std::this_thread::sleep_for(wait);
  }
}

std::chrono::milliseconds RetryPolicy::backoff_for(int attempt) const {
  double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, attempt);
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

}  // namespace principles
