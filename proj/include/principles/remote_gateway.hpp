#pragma once

#include "principles/gateway.hpp"

#include <memory>

namespace principles {

struct RemoteGatewayConfig {
  std::string endpoint = "https://api.openai.com/v1";
  std::string chat_model = "gpt-4o";
  std::string embedding_model = "text-embedding-ada-002";
  Eigen::Index embedding_dimension = 1536;
  std::string api_key;
  double requests_per_minute = 60.0;
  RetryPolicy retry;
  int timeout_seconds = 60;
};

/// Chat-completion / embedding client for OpenAI-compatible HTTP endpoints.
class RemoteGateway final : public Gateway {
 public:
  explicit RemoteGateway(RemoteGatewayConfig config);
  ~RemoteGateway() override;

  std::vector<std::string> complete(const GenerationRequest& request) override;
  EmbeddingVector embed(std::string_view text) override;

  Eigen::Index embedding_dimension() const override { return config_.embedding_dimension; }
  std::string provider_tag() const override { return "remote:" + config_.embedding_model; }

 private:
  std::string post_json(const std::string& route, const std::string& body);

  RemoteGatewayConfig config_;
  RateLimiter limiter_;
};

}  // namespace principles
