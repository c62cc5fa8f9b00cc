#pragma once

#include "principles/constructor.hpp"
#include "principles/evaluator.hpp"
#include "principles/remote_gateway.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <optional>

namespace principles {

enum class Backend { scripted, remote };

/// Everything a command needs, with defaults filled and paths resolved
/// against the config file's directory.
struct RunConfig {
  Backend backend = Backend::scripted;
  std::optional<std::filesystem::path> scripted;  // scripted-provider JSON
  RemoteGatewayConfig remote;

  std::optional<std::filesystem::path> prompts;
  std::optional<std::filesystem::path> seeds;
  std::optional<std::filesystem::path> eval_seeds;
  std::optional<std::filesystem::path> store;
  std::optional<std::filesystem::path> logs;
  std::filesystem::path catalogs_dir = "data/catalogs";

  std::uint64_t rng_seed = 0;
  int workers = 1;
  GenerationSettings generation;
  std::vector<FeedbackScale> extra_scales;
  ConstructionConfig construction;
  EvalConfig evaluation;
};

/// YAML. Unknown keys are errors; an empty document yields the defaults.
/// `LLM_API_KEY` is read (and required) only for the remote backend.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& yaml, const std::filesystem::path& base_dir = ".");

/// Built-in defaults, used when no config file is given.
RunConfig default_config();

/// Resolved settings as JSON (API key omitted).
nlohmann::json to_json(const RunConfig& cfg);

/// Writes `run-manifest.json` next to a command's outputs: code version,
/// command line and resolved configuration. Contains no timestamps so that
/// reruns stay byte-identical.
void write_run_manifest(const std::filesystem::path& path, const RunConfig& cfg, const std::string& command,
                        const nlohmann::json& arguments);

std::unique_ptr<Gateway> make_gateway(const RunConfig& cfg);
CriticScales make_scales(const RunConfig& cfg);

std::string_view version();

}  // namespace principles
