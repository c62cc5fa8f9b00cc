#include "principles/config.hpp"

#include "principles/error.hpp"
#include "principles/scripted_gateway.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#ifndef PRINCIPLES_VERSION
#define PRINCIPLES_VERSION "0.0.0"
#endif

namespace principles {

std::string_view version() { return PRINCIPLES_VERSION; }

namespace {

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  if (!node.IsMap()) fail(ErrorCode::config, where + " must be a mapping");
  for (const auto& kv : node) {
    auto key = kv.first.as<std::string>();
    if (!allowed.contains(key))
      fail(ErrorCode::config, "unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  if (!node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::config, "invalid value for '" + (where.empty() ? "" : where + ".") + key + "': " + e.msg);
  }
}

void read_path(const YAML::Node& node, const char* key, std::optional<std::filesystem::path>& out,
               const std::filesystem::path& base) {
  if (!node[key]) return;
  std::filesystem::path p(node[key].as<std::string>());
  out = p.is_absolute() ? p : base / p;
}

void require_exists(const std::optional<std::filesystem::path>& p, const char* key) {
  if (p && !std::filesystem::exists(*p))
    fail(ErrorCode::config, std::string("path for '") + key + "' does not exist: " + p->string());
}

void read_role(const YAML::Node& node, RoleSettings& role, const std::string& where) {
  check_keys(node, {"temperature", "max_tokens"}, where);
  read(node, "temperature", role.temperature, where);
  if (node["max_tokens"]) {
    int v = 0;
    read(node, "max_tokens", v, where);
    role.max_output_tokens = v;
  }
}

std::vector<FeedbackScale> read_scales(const YAML::Node& node) {
  if (!node.IsMap()) fail(ErrorCode::config, "critic_scales must map domains to level lists");
  std::vector<FeedbackScale> scales;
  for (const auto& kv : node) {
    auto domain = kv.first.as<std::string>();
    std::vector<FeedbackLevel> levels;
    for (const auto& lv : kv.second) {
      auto where = "critic_scales." + domain;
      check_keys(lv, {"name", "value", "phrases"}, where);
      FeedbackLevel level;
      read(lv, "name", level.name, where);
      read(lv, "value", level.value, where);
      read(lv, "phrases", level.phrases, where);
      levels.push_back(std::move(level));
    }
    try {
      scales.emplace_back(Domain(domain), std::move(levels));
    } catch (const Error& e) {
      fail(ErrorCode::config, "critic_scales." + domain + ": " + e.what());
    }
  }
  return scales;
}

std::optional<StrategyCatalog> read_catalog(const YAML::Node& node, const char* key, const RunConfig& cfg,
                                            const std::filesystem::path& base) {
  if (!node[key]) return std::nullopt;
  auto name = node[key].as<std::string>();
  const auto& dir = cfg.catalogs_dir;  // already resolved
  auto direct = std::filesystem::path(name);
  if (!direct.is_absolute() && direct.has_extension()) name = (base / direct).string();
  return load_catalog(name, dir);
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  cfg.construction.workers = cfg.workers;
  cfg.evaluation.workers = cfg.workers;
  cfg.evaluation.critic = cfg.construction.critic;
  return cfg;
}

RunConfig parse_config(const std::string& yaml, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::parse, std::string("config: ") + e.what());
  }
  RunConfig cfg = default_config();
  if (root.IsNull()) return cfg;

  check_keys(root,
             {"backend", "scripted", "remote", "prompts", "seeds", "eval_seeds", "store", "logs", "catalogs_dir",
              "rng_seed", "workers", "generation", "critic", "critic_scales", "construction", "planner",
              "evaluation"},
             "");

  if (root["backend"]) {
    auto b = root["backend"].as<std::string>();
    if (b == "scripted") cfg.backend = Backend::scripted;
    else if (b == "remote") cfg.backend = Backend::remote;
    else fail(ErrorCode::config, "unknown backend '" + b + "' (expected scripted or remote)");
  }
  read_path(root, "scripted", cfg.scripted, base_dir);
  read_path(root, "prompts", cfg.prompts, base_dir);
  read_path(root, "seeds", cfg.seeds, base_dir);
  read_path(root, "eval_seeds", cfg.eval_seeds, base_dir);
  read_path(root, "store", cfg.store, base_dir);
  read_path(root, "logs", cfg.logs, base_dir);
  if (root["catalogs_dir"]) cfg.catalogs_dir = base_dir / root["catalogs_dir"].as<std::string>();
  read(root, "rng_seed", cfg.rng_seed, "");
  read(root, "workers", cfg.workers, "");

  if (auto r = root["remote"]) {
    check_keys(r, {"endpoint", "chat_model", "embedding_model", "embedding_dimension", "requests_per_minute",
                   "timeout_seconds", "max_retries"},
               "remote");
    read(r, "endpoint", cfg.remote.endpoint, "remote");
    read(r, "chat_model", cfg.remote.chat_model, "remote");
    read(r, "embedding_model", cfg.remote.embedding_model, "remote");
    read(r, "embedding_dimension", cfg.remote.embedding_dimension, "remote");
    read(r, "requests_per_minute", cfg.remote.requests_per_minute, "remote");
    read(r, "timeout_seconds", cfg.remote.timeout_seconds, "remote");
    read(r, "max_retries", cfg.remote.retry.max_retries, "remote");
  }

  if (auto g = root["generation"]) {
    check_keys(g, {"strategy", "agent", "user", "derivation", "planner"}, "generation");
    if (g["strategy"]) read_role(g["strategy"], cfg.generation.strategy, "generation.strategy");
    if (g["agent"]) read_role(g["agent"], cfg.generation.agent, "generation.agent");
    if (g["user"]) read_role(g["user"], cfg.generation.user, "generation.user");
    if (g["derivation"]) read_role(g["derivation"], cfg.generation.derivation, "generation.derivation");
    if (g["planner"]) read_role(g["planner"], cfg.generation.planner, "generation.planner");
  }

  CriticConfig& critic = cfg.construction.critic;
  if (auto c = root["critic"]) {
    check_keys(c, {"samples", "temperature", "success_threshold", "initial_reward", "max_turns"}, "critic");
    read(c, "samples", critic.sample_count, "critic");
    read(c, "temperature", critic.temperature, "critic");
    read(c, "success_threshold", critic.success_threshold, "critic");
    read(c, "initial_reward", critic.initial_reward, "critic");
    read(c, "max_turns", critic.max_turns, "critic");
  }
  if (root["critic_scales"]) cfg.extra_scales = read_scales(root["critic_scales"]);

  if (auto c = root["construction"]) {
    check_keys(c, {"episode_budget", "max_revisions", "sample_with_replacement", "deduplicate"}, "construction");
    read(c, "episode_budget", cfg.construction.episode_budget, "construction");
    read(c, "max_revisions", cfg.construction.max_revisions, "construction");
    read(c, "sample_with_replacement", cfg.construction.sample_with_replacement, "construction");
    read(c, "deduplicate", cfg.construction.deduplicate, "construction");
  }

  PlannerConfig& planner = cfg.evaluation.planner;
  if (auto p = root["planner"]) {
    check_keys(p, {"mode", "k", "reinterpret", "retrieval_window", "mi_prompt", "catalog", "select_by_llm",
                   "selection_cap", "icl_aif_refresh", "principle_format"},
               "planner");
    if (p["mode"]) planner.mode = planner_mode_from_string(p["mode"].as<std::string>());
    read(p, "k", planner.k, "planner");
    read(p, "reinterpret", planner.reinterpret, "planner");
    if (p["retrieval_window"]) {
      auto w = p["retrieval_window"].as<std::string>();
      if (w == "all") planner.retrieval_window.reset();
      else {
        int v = 0;
        read(p, "retrieval_window", v, "planner");
        planner.retrieval_window = v;
      }
    }
    read(p, "mi_prompt", planner.mi_prompt, "planner");
    read(p, "select_by_llm", planner.select_by_llm, "planner");
    read(p, "selection_cap", planner.selection_cap, "planner");
    read(p, "icl_aif_refresh", planner.icl_aif_refresh, "planner");
    if (p["principle_format"]) planner.principle_format = principle_format_from_string(p["principle_format"].as<std::string>());
    planner.catalog = read_catalog(p, "catalog", cfg, base_dir);
  }

  if (auto e = root["evaluation"]) {
    check_keys(e, {"online_construction", "label_catalog", "entropy_base"}, "evaluation");
    read(e, "online_construction", cfg.evaluation.online_construction, "evaluation");
    if (e["entropy_base"]) {
      auto b = e["entropy_base"].as<std::string>();
      if (b == "e") cfg.evaluation.entropy_base = std::exp(1.0);
      else read(e, "entropy_base", cfg.evaluation.entropy_base, "evaluation");
    }
    cfg.evaluation.label_catalog = read_catalog(e, "label_catalog", cfg, base_dir);
  }

  cfg.construction.rng_seed = cfg.rng_seed;
  cfg.construction.workers = cfg.workers;
  cfg.evaluation.workers = cfg.workers;
  cfg.evaluation.planner.rng_seed = cfg.rng_seed;
  cfg.evaluation.critic = critic;

  cfg.construction.validate();
  cfg.evaluation.validate();
  if (!(cfg.evaluation.entropy_base > 0) || cfg.evaluation.entropy_base == 1)
    fail(ErrorCode::config, "evaluation.entropy_base must be positive and not 1");

  require_exists(cfg.scripted, "scripted");
  require_exists(cfg.prompts, "prompts");
  require_exists(cfg.seeds, "seeds");
  require_exists(cfg.eval_seeds, "eval_seeds");

  if (cfg.backend == Backend::remote) {
    const char* key = std::getenv("LLM_API_KEY");
    if (!key || !*key) fail(ErrorCode::config, "the remote backend needs LLM_API_KEY in the environment");
    cfg.remote.api_key = key;
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto base = path.parent_path();
  return parse_config(buf.str(), base.empty() ? std::filesystem::path(".") : base);
}

nlohmann::json to_json(const RunConfig& cfg) {
  auto path = [](const std::optional<std::filesystem::path>& p) -> nlohmann::json {
    return p ? nlohmann::json(p->lexically_normal().generic_string()) : nlohmann::json(nullptr);
  };
  auto role = [](const RoleSettings& r) {
    nlohmann::json j{{"temperature", r.temperature}};
    if (r.max_output_tokens) j["max_tokens"] = *r.max_output_tokens;
    return j;
  };
  const auto& c = cfg.construction.critic;
  const auto& p = cfg.evaluation.planner;
  nlohmann::json j;
  j["backend"] = cfg.backend == Backend::scripted ? "scripted" : "remote";
  j["scripted"] = path(cfg.scripted);
  if (cfg.backend == Backend::remote)
    j["remote"] = {{"endpoint", cfg.remote.endpoint},
                   {"chat_model", cfg.remote.chat_model},
                   {"embedding_model", cfg.remote.embedding_model},
                   {"embedding_dimension", cfg.remote.embedding_dimension},
                   {"requests_per_minute", cfg.remote.requests_per_minute},
                   {"timeout_seconds", cfg.remote.timeout_seconds},
                   {"max_retries", cfg.remote.retry.max_retries}};
  j["prompts"] = path(cfg.prompts);
  j["seeds"] = path(cfg.seeds);
  j["eval_seeds"] = path(cfg.eval_seeds);
  j["store"] = path(cfg.store);
  j["logs"] = path(cfg.logs);
  j["rng_seed"] = cfg.rng_seed;
  j["workers"] = cfg.workers;
  j["generation"] = {{"strategy", role(cfg.generation.strategy)},
                     {"agent", role(cfg.generation.agent)},
                     {"user", role(cfg.generation.user)},
                     {"derivation", role(cfg.generation.derivation)},
                     {"planner", role(cfg.generation.planner)}};
  j["critic"] = {{"samples", c.sample_count},
                 {"temperature", c.temperature},
                 {"success_threshold", c.success_threshold},
                 {"initial_reward", c.initial_reward},
                 {"max_turns", c.max_turns}};
  j["construction"] = {{"episode_budget", cfg.construction.episode_budget},
                       {"max_revisions", cfg.construction.max_revisions},
                       {"sample_with_replacement", cfg.construction.sample_with_replacement},
                       {"deduplicate", cfg.construction.deduplicate}};
  j["planner"] = {{"mode", std::string(to_string(p.mode))},
                  {"k", p.k},
                  {"reinterpret", p.reinterpret},
                  {"retrieval_window", p.retrieval_window ? nlohmann::json(*p.retrieval_window) : nlohmann::json("all")},
                  {"mi_prompt", p.mi_prompt},
                  {"catalog", p.catalog ? nlohmann::json(p.catalog->name()) : nlohmann::json(nullptr)},
                  {"select_by_llm", p.select_by_llm},
                  {"selection_cap", p.selection_cap},
                  {"icl_aif_refresh", p.icl_aif_refresh},
                  {"principle_format", std::string(to_string(p.principle_format))}};
  const auto& e = cfg.evaluation;
  j["evaluation"] = {{"online_construction", e.online_construction},
                     {"label_catalog", e.label_catalog ? nlohmann::json(e.label_catalog->name()) : nlohmann::json(nullptr)},
                     {"entropy_base", e.entropy_base}};
  return j;
}

void write_run_manifest(const std::filesystem::path& path, const RunConfig& cfg, const std::string& command,
                        const nlohmann::json& arguments) {
  nlohmann::json j{{"version", std::string(version())},
                   {"command", command},
                   {"arguments", arguments},
                   {"config", to_json(cfg)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& cfg) {
  if (cfg.backend == Backend::remote) return std::make_unique<RemoteGateway>(cfg.remote);
  if (!cfg.scripted) fail(ErrorCode::config, "the scripted backend needs a 'scripted' provider file");
  return std::make_unique<ScriptedGateway>(load_scripted_config(*cfg.scripted));
}

CriticScales make_scales(const RunConfig& cfg) {
  CriticScales scales;
  for (const auto& s : cfg.extra_scales) scales.set(s);
  return scales;
}

}  // namespace principles
