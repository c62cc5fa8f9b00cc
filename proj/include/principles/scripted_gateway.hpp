#pragma once

#include "principles/gateway.hpp"

#include <filesystem>
#include <regex>

namespace principles {

/// Produces one completion for (request, sample index). `sample_seed` is a
/// deterministic function of the provider seed, the prompt, and the index.
using ScriptedHandler =
    std::function<std::string(const GenerationRequest& request, int sample_index, std::uint64_t sample_seed)>;

enum class ResponseSelection { cycle, random };

struct ScriptedRule {
  std::string purpose;  // empty matches any purpose
  std::string pattern;  // ECMAScript regex, searched in the prompt text
  std::vector<std::string> responses;  // may reference capture groups as $1..$9
  ResponseSelection selection = ResponseSelection::cycle;
  ScriptedHandler handler;  // takes precedence over `responses` when set
};

enum class EmbeddingRule {
  whole_text,    // seeded hash of the full string expanded to the dimension
  bag_of_words,  // signed feature hashing of lowercase word tokens, unit norm
};

struct ScriptedProviderConfig {
  std::vector<ScriptedRule> rules;
  Eigen::Index embedding_dimension = 32;
  EmbeddingRule embedding_rule = EmbeddingRule::whole_text;
  std::uint64_t rng_seed = 0;
};

/// JSON: {"rng_seed":7,"embedding_dimension":32,"embedding_rule":"whole_text",
///        "rules":[{"purpose":"critic","pattern":"...","responses":[...],"selection":"random"}]}
ScriptedProviderConfig load_scripted_config(const std::filesystem::path& path);

/// Deterministic, network-free backend. Rules are tried in order; the first
/// whose purpose and pattern match answers the request.
class ScriptedGateway final : public Gateway {
 public:
  explicit ScriptedGateway(ScriptedProviderConfig config);

  std::vector<std::string> complete(const GenerationRequest& request) override;
  EmbeddingVector embed(std::string_view text) override;

  Eigen::Index embedding_dimension() const override { return config_.embedding_dimension; }
  std::string provider_tag() const override;

  const ScriptedProviderConfig& config() const { return config_; }

 private:
  ScriptedProviderConfig config_;
  std::vector<std::regex> patterns_;
};

EmbeddingVector hash_embedding(std::string_view text, Eigen::Index dimension, std::uint64_t seed);
EmbeddingVector bag_of_words_embedding(std::string_view text, Eigen::Index dimension, std::uint64_t seed);

}  // namespace principles
