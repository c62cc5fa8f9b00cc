#include "principles/scripted_gateway.hpp"

#include "principles/error.hpp"
#include "principles/text.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <fstream>

namespace principles {

namespace {

std::string expand_captures(const std::string& tmpl, const std::smatch& m) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '$' && i + 1 < tmpl.size()) {
      char next = tmpl[i + 1];
      if (next == '$') {
        out.push_back('$');
        ++i;
        continue;
      }
      if (next >= '1' && next <= '9') {
        auto group = static_cast<std::size_t>(next - '0');
        if (group < m.size()) out += m[group].str();
        ++i;
        continue;
      }
    }
    out.push_back(tmpl[i]);
  }
  return out;
}

double unit_interval(std::uint64_t bits) {
  // 53 random mantissa bits mapped to [-1, 1)
  return static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
}

}  // namespace

EmbeddingVector hash_embedding(std::string_view text, Eigen::Index dimension, std::uint64_t seed) {
  std::uint64_t state = text::fnv1a64(text) ^ (seed * 0x9e3779b97f4a7c15ULL);
  EmbeddingVector v(dimension);
  for (Eigen::Index i = 0; i < dimension; ++i) v[i] = unit_interval(text::splitmix64(state));
  return v;
}

EmbeddingVector bag_of_words_embedding(std::string_view text, Eigen::Index dimension, std::uint64_t seed) {
  EmbeddingVector v = EmbeddingVector::Zero(dimension);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    std::uint64_t state = text::fnv1a64(token) ^ seed;
    std::uint64_t h = text::splitmix64(state);
    auto slot = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dimension));
    v[slot] += (h >> 63) ? -1.0 : 1.0;
    token.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    else
      flush();
  }
  flush();
  double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

ScriptedGateway::ScriptedGateway(ScriptedProviderConfig config) : config_(std::move(config)) {
  require(config_.embedding_dimension > 0, "scripted embedding dimension must be positive");
  patterns_.reserve(config_.rules.size());
  for (const auto& rule : config_.rules) {
    try {
      patterns_.emplace_back(rule.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      fail(ErrorCode::config, "invalid scripted rule pattern '" + rule.pattern + "': " + e.what());
    }
    if (!rule.handler && rule.responses.empty())
      fail(ErrorCode::config, "scripted rule '" + rule.pattern + "' has neither responses nor handler");
  }
}

std::string ScriptedGateway::provider_tag() const {
  return std::string("scripted:") +
         (config_.embedding_rule == EmbeddingRule::whole_text ? "whole_text" : "bag_of_words") + ":" +
         std::to_string(config_.embedding_dimension) + ":" + std::to_string(config_.rng_seed);
}

std::vector<std::string> ScriptedGateway::complete(const GenerationRequest& request) {
  validate_request(request);
  std::uint64_t base = text::fnv1a64(request.prompt_text, text::fnv1a64(request.purpose)) ^ config_.rng_seed;

  for (std::size_t r = 0; r < config_.rules.size(); ++r) {
    const auto& rule = config_.rules[r];
    if (!rule.purpose.empty() && rule.purpose != request.purpose) continue;
    std::smatch match;
    if (!std::regex_search(request.prompt_text, match, patterns_[r])) continue;

    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(request.sample_count));
    for (int i = 0; i < request.sample_count; ++i) {
      std::uint64_t state = base + static_cast<std::uint64_t>(i) * 0x632be59bd9b4e019ULL;
      std::uint64_t sample_seed = text::splitmix64(state);
      std::string reply;
      if (rule.handler) {
        reply = rule.handler(request, i, sample_seed);
      } else {
        std::size_t pick = rule.selection == ResponseSelection::cycle
                               ? static_cast<std::size_t>(i) % rule.responses.size()
                               : static_cast<std::size_t>(sample_seed % rule.responses.size());
        reply = expand_captures(rule.responses[pick], match);
      }
      if (text::trim(reply).empty())
        fail(ErrorCode::empty_completion, "scripted rule '" + rule.pattern + "' produced an empty completion");
      out.push_back(std::move(reply));
    }
    return out;
  }
  fail(ErrorCode::rejected, "no scripted rule matches '" + request.purpose + "' prompt");
}

EmbeddingVector ScriptedGateway::embed(std::string_view text) {
  require(!text.empty(), "embed: text must be non-empty");
  if (config_.embedding_rule == EmbeddingRule::bag_of_words)
    return bag_of_words_embedding(text, config_.embedding_dimension, config_.rng_seed);
  return hash_embedding(text, config_.embedding_dimension, config_.rng_seed);
}

ScriptedProviderConfig load_scripted_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open scripted config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, path.string() + ": " + e.what());
  }

  ScriptedProviderConfig cfg;
  for (auto& [key, value] : j.items()) {
    if (key == "rng_seed") cfg.rng_seed = value.get<std::uint64_t>();
    else if (key == "embedding_dimension") cfg.embedding_dimension = value.get<Eigen::Index>();
    else if (key == "embedding_rule") {
      auto rule = value.get<std::string>();
      if (rule == "whole_text") cfg.embedding_rule = EmbeddingRule::whole_text;
      else if (rule == "bag_of_words") cfg.embedding_rule = EmbeddingRule::bag_of_words;
      else fail(ErrorCode::config, "unknown embedding_rule '" + rule + "'");
    } else if (key == "rules") {
      for (const auto& r : value) {
        ScriptedRule rule;
        for (auto& [rk, rv] : r.items()) {
          if (rk == "purpose") rule.purpose = rv.get<std::string>();
          else if (rk == "pattern") rule.pattern = rv.get<std::string>();
          else if (rk == "responses") rule.responses = rv.get<std::vector<std::string>>();
          else if (rk == "selection") {
            auto sel = rv.get<std::string>();
            if (sel == "cycle") rule.selection = ResponseSelection::cycle;
            else if (sel == "random") rule.selection = ResponseSelection::random;
            else fail(ErrorCode::config, "unknown selection '" + sel + "'");
          } else {
            fail(ErrorCode::config, "unknown scripted rule key '" + rk + "'");
          }
        }
        cfg.rules.push_back(std::move(rule));
      }
    } else {
      fail(ErrorCode::config, "unknown scripted config key '" + key + "'");
    }
  }
  return cfg;
}

}  // namespace principles
