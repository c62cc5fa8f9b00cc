#pragma once

#include <Eigen/Core>

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace principles {

template <typename Scalar>
using Embedding = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using EmbeddingVector = Embedding<double>;

/// Throws dimension_mismatch / precondition when the vector is not a valid
/// embedding of the expected dimension (pass 0 to skip the dimension check).
void validate_embedding(const EmbeddingVector& v, Eigen::Index expected_dimension = 0);

struct GenerationRequest {
  std::string prompt_text;
  double temperature = 1.0;
  int sample_count = 1;
  std::optional<int> max_output_tokens;
  std::vector<std::string> stop_markers;
  // Which role issued the call ("strategy", "agent", "critic", ...). Not sent
  // to remote providers; scripted rules can key on it.
  std::string purpose;
};

class Gateway {
 public:
  virtual ~Gateway() = default;

  /// Returns exactly request.sample_count completions.
  virtual std::vector<std::string> complete(const GenerationRequest& request) = 0;
  virtual EmbeddingVector embed(std::string_view text) = 0;

  virtual Eigen::Index embedding_dimension() const = 0;
  virtual std::string provider_tag() const = 0;
};

void validate_request(const GenerationRequest& request);

/// First completion of a single-sample request; empty completions are errors.
std::string complete_one(Gateway& gateway, GenerationRequest request);

/// Token bucket shared by every call to one provider.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double requests_per_minute, double burst = 1.0);

  /// Blocks until a token is available. A non-positive rate disables limiting.
  void acquire();

  /// Non-blocking variant; used by tests with an explicit time point.
  bool try_acquire(Clock::time_point now);

 private:
  void refill(Clock::time_point now);

  double rate_per_second_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mutex_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;

  std::chrono::milliseconds backoff_for(int attempt) const;
};

/// Runs `call`, retrying retryable principles::Error failures per `policy`.
template <typename F>
auto with_retries(const RetryPolicy& policy, F&& call,
                  const std::function<void(std::chrono::milliseconds)>& sleep) -> decltype(call());

}  // namespace principles

#include "principles/detail/retry_impl.hpp"
