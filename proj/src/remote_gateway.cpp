#include "principles/remote_gateway.hpp"

#include "principles/error.hpp"
#include "principles/text.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <thread>

namespace principles {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::config, "endpoint must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  return e;
}

void sleep_for(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

}  // namespace

RemoteGateway::RemoteGateway(RemoteGatewayConfig config)
    : config_(std::move(config)), limiter_(config_.requests_per_minute) {
  if (config_.api_key.empty()) fail(ErrorCode::config, "LLM_API_KEY is not set");
}

RemoteGateway::~RemoteGateway() = default;

std::string RemoteGateway::post_json(const std::string& route, const std::string& body) {
  auto endpoint = split_endpoint(config_.endpoint);
  return with_retries(
      config_.retry,
      [&]() -> std::string {
        limiter_.acquire();
        httplib::Client client(endpoint.origin);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};
        auto res = client.Post(endpoint.path + route, headers, body, "application/json");
        if (!res) fail(ErrorCode::transport, "request to " + route + " failed: " + httplib::to_string(res.error()));
        if (res->status == 429 || res->status >= 500)
          fail(ErrorCode::transport, "HTTP " + std::to_string(res->status) + " from " + route);
        if (res->status != 200)
          fail(ErrorCode::rejected, "HTTP " + std::to_string(res->status) + " from " + route + ": " + res->body);
        return res->body;
      },
      sleep_for);
}

std::vector<std::string> RemoteGateway::complete(const GenerationRequest& request) {
  validate_request(request);
  std::vector<std::string> out;
  // Some compatible servers ignore n > 1; keep asking until enough choices arrive.
  while (static_cast<int>(out.size()) < request.sample_count) {
    int wanted = request.sample_count - static_cast<int>(out.size());
    nlohmann::json body = {
        {"model", config_.chat_model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt_text}}})},
        {"temperature", request.temperature},
        {"n", wanted},
    };
    if (request.max_output_tokens) body["max_tokens"] = *request.max_output_tokens;
    if (!request.stop_markers.empty()) body["stop"] = request.stop_markers;

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(post_json("/chat/completions", body.dump()));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::rejected, std::string("malformed chat completion response: ") + e.what());
    }
    const auto& choices = reply.value("choices", nlohmann::json::array());
    if (choices.empty()) fail(ErrorCode::empty_completion, "provider returned no choices");
    for (const auto& choice : choices) {
      if (static_cast<int>(out.size()) == request.sample_count) break;
      auto content = choice.value("message", nlohmann::json::object()).value("content", std::string());
      if (text::trim(content).empty()) fail(ErrorCode::empty_completion, "provider returned an empty completion");
      out.push_back(std::move(content));
    }
  }
  return out;
}

EmbeddingVector RemoteGateway::embed(std::string_view text) {
  require(!text.empty(), "embed: text must be non-empty");
  nlohmann::json body = {{"model", config_.embedding_model}, {"input", std::string(text)}};
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(post_json("/embeddings", body.dump()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::rejected, std::string("malformed embedding response: ") + e.what());
  }
  const auto& data = reply.at("data").at(0).at("embedding");
  EmbeddingVector v(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) v[static_cast<Eigen::Index>(i)] = data[i].get<double>();
  validate_embedding(v, config_.embedding_dimension);
  return v;
}

}  // namespace principles
