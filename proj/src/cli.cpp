#include "principles/cli.hpp"

#include "principles/config.hpp"
#include "principles/error.hpp"
#include "principles/text.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace principles {

namespace fs = std::filesystem;

DialogueState load_transcript(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open transcript " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("seed")) fail(ErrorCode::parse, path.string() + ": expected an object with 'seed'");
  DialogueState state(seed_from_json_line(j.at("seed").dump()));
  for (const auto& t : j.value("turns", nlohmann::json::array())) {
    try {
      int turn = state.current_turn();
      state = append_turn(state, Utterance(Role::agent, t.at("agent").get<std::string>(), turn),
                          Utterance(Role::user, t.at("user").get<std::string>(), turn));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse, path.string() + ": turn " + std::to_string(state.current_turn()) + ": " + e.what());
    }
  }
  return state;
}

namespace {

struct CommonOptions {
  std::string config;
  std::string scripted;
  std::string prompts;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "YAML run configuration");
  cmd->add_option("--scripted", o.scripted, "scripted provider file (overrides config)");
  cmd->add_option("--prompts", o.prompts, "prompt template directory (overrides config)");
  cmd->add_option("--seed", o.seed, "rng seed (overrides config)");
  cmd->add_option("--workers", o.workers, "parallel episodes")->check(CLI::PositiveNumber);
}

RunConfig resolve(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? default_config() : load_config(o.config);
  if (!o.scripted.empty()) cfg.scripted = o.scripted;
  if (!o.prompts.empty()) cfg.prompts = o.prompts;
  if (o.seed) {
    cfg.rng_seed = *o.seed;
    cfg.construction.rng_seed = *o.seed;
    cfg.evaluation.planner.rng_seed = *o.seed;
  }
  if (o.workers) {
    cfg.workers = *o.workers;
    cfg.construction.workers = *o.workers;
    cfg.evaluation.workers = *o.workers;
  }
  for (const auto* p : {&cfg.scripted, &cfg.prompts})
    if (*p && !fs::exists(**p)) fail(ErrorCode::config, "path does not exist: " + (*p)->string());
  return cfg;
}

fs::path pick(const std::string& flag, const std::optional<fs::path>& configured, const char* what) {
  if (!flag.empty()) return flag;
  if (configured) return *configured;
  fail(ErrorCode::config, std::string("no ") + what + " given (flag or config)");
}

PromptLibrary load_prompts(const RunConfig& cfg) {
  if (!cfg.prompts) fail(ErrorCode::config, "no prompt directory given (--prompts or config 'prompts')");
  return PromptLibrary::load(*cfg.prompts);
}

std::vector<ScenarioSeed> load_seed_file(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::config, "seed file does not exist: " + path.string());
  auto seeds = load_seeds(path);
  if (seeds.empty()) fail(ErrorCode::config, "seed file is empty: " + path.string());
  return seeds;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void print_trial(std::ostream& out, const char* label, const Trial& t) {
  out << "  " << label << " reward=" << t.reward << "\n"
      << "    strategy: " << (t.strategy.empty() ? "(none)" : text::normalize_whitespace(t.strategy)) << "\n"
      << "    agent: " << t.agent_utt.text << "\n"
      << "    user: " << t.user_utt.text << "\n";
}

void print_episode(std::ostream& out, const EpisodeLog& log, const PrincipleStore* store) {
  out << "episode " << log.seed_id << " (" << log.domain.name() << ", " << log.mode << ")\n";
  for (const auto& t : log.turns) {
    out << "turn " << t.turn_index << " previous=" << t.previous_reward << " status=" << t.status << "\n";
    if (t.initial) print_trial(out, "initial", *t.initial);
    for (std::size_t i = 0; i < t.failed_trials.size(); ++i)
      print_trial(out, ("revision " + std::to_string(i + 1) + " (failed)").c_str(), t.failed_trials[i]);
    print_trial(out, "accepted", t.accepted);
    if (t.derived_principle_id) {
      out << "  principle " << *t.derived_principle_id;
      if (store) {
        for (const auto& p : store->snapshot())
          if (p.id == *t.derived_principle_id) out << ": " << render_principle(p);
      }
      out << "\n";
    }
    if (t.note) out << "  note: " << *t.note << "\n";
  }
  out << "outcome " << to_string(log.outcome);
  if (log.error) out << " (" << *log.error << ")";
  out << " after " << log.total_turns() << " turn(s)\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Strategy-principle construction, planning and evaluation"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  CommonOptions common;

  auto* construct_cmd = app.add_subcommand("construct", "build a principle store by self-play");
  add_common(construct_cmd, common);
  std::string seeds_path, store_path, logs_dir;
  construct_cmd->add_option("--seeds", seeds_path, "training seeds (JSONL)");
  construct_cmd->add_option("--out", store_path, "output store (JSONL)");
  construct_cmd->add_option("--logs", logs_dir, "episode log directory");
  std::optional<int> budget;
  construct_cmd->add_option("--budget", budget, "episode budget")->check(CLI::PositiveNumber);

  auto* simulate_cmd = app.add_subcommand("simulate", "run one episode with a verbose trace");
  add_common(simulate_cmd, common);
  std::string seed_id, mode_flag, log_out;
  simulate_cmd->add_option("--seeds", seeds_path, "seed file (JSONL)");
  simulate_cmd->add_option("--seed-id", seed_id, "seed to run (default: first)");
  simulate_cmd->add_option("--mode", mode_flag, "'construct' or a planner mode");
  simulate_cmd->add_option("--store", store_path, "principle store for principles mode");
  simulate_cmd->add_option("--log", log_out, "write the episode log here");

  auto* plan_cmd = app.add_subcommand("plan", "plan one turn for a transcript");
  add_common(plan_cmd, common);
  std::string transcript_path;
  plan_cmd->add_option("--transcript", transcript_path, "transcript JSON")->required();
  plan_cmd->add_option("--store", store_path, "principle store");
  plan_cmd->add_option("--mode", mode_flag, "planner mode (overrides config)");

  auto* eval_cmd = app.add_subcommand("evaluate", "run evaluation episodes and report metrics");
  add_common(eval_cmd, common);
  std::string metrics_out, store_out;
  bool online = false;
  eval_cmd->add_option("--seeds", seeds_path, "evaluation seeds (JSONL)");
  eval_cmd->add_option("--store", store_path, "principle store");
  eval_cmd->add_option("--mode", mode_flag, "planner mode (overrides config)");
  eval_cmd->add_option("--out", metrics_out, "metrics JSON output");
  eval_cmd->add_option("--logs", logs_dir, "episode log directory");
  eval_cmd->add_flag("--online", online, "derive success principles during evaluation");
  eval_cmd->add_option("--store-out", store_out, "write the live store (online mode)");

  auto* metrics_cmd = app.add_subcommand("metrics", "recompute metrics from saved episode logs");
  std::string metrics_logs;
  std::string entropy_base = "e";
  metrics_cmd->add_option("--logs", metrics_logs, "episode log directory")->required();
  metrics_cmd->add_option("--out", metrics_out, "metrics JSON output");
  metrics_cmd->add_option("--entropy-base", entropy_base, "'e' or a number");

  auto* inspect_cmd = app.add_subcommand("inspect", "print the principles in a store");
  std::string inspect_path;
  inspect_cmd->add_option("store", inspect_path, "store file")->required();

  auto* project_cmd = app.add_subcommand("project", "PCA projection of principle embeddings to CSV");
  std::string csv_out;
  int dims = 2;
  project_cmd->add_option("--store", store_path, "store file")->required();
  project_cmd->add_option("--out", csv_out, "CSV output")->required();
  project_cmd->add_option("--dims", dims, "projection dimensions")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*construct_cmd) {
      auto cfg = resolve(common);
      if (budget) cfg.construction.episode_budget = *budget;
      auto seeds = load_seed_file(pick(seeds_path, cfg.seeds, "seed file"));
      auto out_store = pick(store_path, cfg.store, "output store");
      auto prompts = load_prompts(cfg);
      auto gateway = make_gateway(cfg);
      auto scales = make_scales(cfg);
      Environment env{*gateway, prompts, scales, cfg.generation};
      auto result = construct(env, seeds, cfg.construction);
      if (out_store.has_parent_path()) fs::create_directories(out_store.parent_path());
      result.store.save(out_store);
      fs::path manifest_dir = out_store.parent_path();
      if (!logs_dir.empty() || cfg.logs) {
        fs::path dir = logs_dir.empty() ? *cfg.logs : fs::path(logs_dir);
        write_episode_logs(result.logs, dir);
        manifest_dir = dir;
      }
      write_run_manifest(manifest_dir / "run-manifest.json", cfg, "construct",
                         {{"seeds", seeds_path}, {"out", out_store.generic_string()}});
      out << result.summary.to_line() << '\n';
      return 0;
    }

    if (*simulate_cmd) {
      auto cfg = resolve(common);
      auto seeds = load_seed_file(pick(seeds_path, cfg.seeds, "seed file"));
      const ScenarioSeed* seed = &seeds.front();
      if (!seed_id.empty()) {
        seed = nullptr;
        for (const auto& s : seeds)
          if (s.seed_id == seed_id) seed = &s;
        if (!seed) fail(ErrorCode::config, "no seed with id '" + seed_id + "'");
      }
      auto prompts = load_prompts(cfg);
      auto gateway = make_gateway(cfg);
      auto scales = make_scales(cfg);
      Environment env{*gateway, prompts, scales, cfg.generation};
      EpisodeLog log;
      std::optional<PrincipleStore> store;
      std::optional<PrincipleStore> loaded;
      if (mode_flag.empty() || mode_flag == "construct") {
        auto r = run_construction_episode(env, *seed, cfg.construction);
        store.emplace(gateway->embedding_dimension(), gateway->provider_tag());
        auto clock = logical_clock();
        for (auto& [pos, p] : r.principles) {
          p.created_at = clock();
          r.log.turns[pos].derived_principle_id = store->add(std::move(p));
        }
        log = std::move(r.log);
      } else {
        auto ecfg = cfg.evaluation;
        ecfg.planner.mode = planner_mode_from_string(mode_flag);
        if (!store_path.empty()) loaded.emplace(PrincipleStore::load(store_path));
        auto r = run_eval(env, {*seed}, ecfg, loaded ? &*loaded : nullptr);
        log = std::move(r.logs.front());
      }
      const PrincipleStore* shown = store ? &*store : loaded ? &*loaded : nullptr;
      print_episode(out, log, shown);
      if (!log_out.empty()) write_episode_log(log, log_out);
      return log.outcome == EpisodeOutcome::aborted ? 1 : 0;
    }

    if (*plan_cmd) {
      auto cfg = resolve(common);
      auto pcfg = cfg.evaluation.planner;
      if (!mode_flag.empty()) pcfg.mode = planner_mode_from_string(mode_flag);
      auto state = load_transcript(transcript_path);
      auto prompts = load_prompts(cfg);
      auto gateway = make_gateway(cfg);
      std::optional<PrincipleStore> store;
      if (!store_path.empty() || cfg.store) store.emplace(PrincipleStore::load(pick(store_path, cfg.store, "store")));
      if (pcfg.mode == PlannerMode::principles && !store)
        fail(ErrorCode::config, "principles mode needs a store (--store)");
      SimulationContext ctx{*gateway, prompts.for_domain(state.seed().domain), cfg.generation};
      auto result = plan(ctx, state, store ? &*store : nullptr, pcfg);
      const auto& trace = result.trace;
      if (trace.contains("retrieved")) {
        out << "retrieved:\n";
        for (const auto& h : trace["retrieved"]) {
          std::string sentence;
          for (const auto& p : store->snapshot())
            if (p.id == h["id"].get<std::string>()) sentence = render_principle(p);
          out << "  " << h["id"].get<std::string>() << " d=" << h["distance"].get<double>() << "  " << sentence << "\n";
        }
      }
      if (trace.contains("reinterpreted") && !trace["reinterpreted"].empty()) {
        out << "reinterpreted:\n";
        for (const auto& r : trace["reinterpreted"])
          out << "  " << r["id"].get<std::string>() << (r["flagged"].get<bool>() ? " [original kept]" : "") << "  "
              << r["text"].get<std::string>() << "\n";
      }
      if (result.fallback) out << "fallback: store returned nothing; responding without guidance\n";
      if (result.label) out << "label: " << *result.label << "\n";
      out << "strategy block:\n" << (result.strategy_block.empty() ? "(empty)" : result.strategy_block) << "\n";
      return 0;
    }

    if (*eval_cmd) {
      auto cfg = resolve(common);
      auto ecfg = cfg.evaluation;
      if (!mode_flag.empty()) ecfg.planner.mode = planner_mode_from_string(mode_flag);
      if (online) ecfg.online_construction = true;
      auto seeds = load_seed_file(pick(seeds_path, cfg.eval_seeds ? cfg.eval_seeds : cfg.seeds, "evaluation seeds"));
      std::optional<PrincipleStore> store;
      if (!store_path.empty()) store.emplace(PrincipleStore::load(store_path));
      else if (cfg.store && fs::exists(*cfg.store)) store.emplace(PrincipleStore::load(*cfg.store));
      if (ecfg.planner.mode == PlannerMode::principles && !store && !ecfg.online_construction)
        fail(ErrorCode::config, "principles mode needs a store (--store) unless --online is set");
      auto prompts = load_prompts(cfg);
      auto gateway = make_gateway(cfg);
      auto scales = make_scales(cfg);
      Environment env{*gateway, prompts, scales, cfg.generation};
      auto result = run_eval(env, seeds, ecfg, store ? &*store : nullptr);
      auto metrics = to_json(result.report);
      if (!metrics_out.empty()) write_json_file(metrics_out, metrics);
      fs::path manifest_dir = metrics_out.empty() ? fs::path() : fs::path(metrics_out).parent_path();
      if (!logs_dir.empty()) {
        write_episode_logs(result.logs, logs_dir);
        manifest_dir = logs_dir;
      }
      if (!store_out.empty() && result.live_store) result.live_store->save(store_out);
      if (!metrics_out.empty() || !logs_dir.empty())
        write_run_manifest(manifest_dir / "run-manifest.json", cfg, "evaluate",
                           {{"mode", std::string(to_string(ecfg.planner.mode))}, {"online", ecfg.online_construction}});
      out << metrics.dump() << '\n' << format_table(result.report);
      return 0;
    }

    if (*metrics_cmd) {
      MetricsOptions opts;
      if (entropy_base != "e") {
        try {
          opts.entropy_base = std::stod(entropy_base);
        } catch (const std::exception&) {
          fail(ErrorCode::config, "invalid entropy base '" + entropy_base + "'");
        }
      }
      auto report = compute_metrics(read_episode_logs(metrics_logs), opts);
      auto metrics = to_json(report);
      if (!metrics_out.empty()) write_json_file(metrics_out, metrics);
      out << metrics.dump() << '\n' << format_table(report);
      return 0;
    }

    if (*inspect_cmd) {
      auto store = PrincipleStore::load(inspect_path);
      out << "# " << store.size() << " principle(s), dimension " << store.dimension() << ", provider "
          << store.provider_tag() << "\n";
      for (const auto& p : store.snapshot())
        out << p.id << " [" << to_string(p.provenance) << "] " << render_principle(p) << "\n";
      return 0;
    }

    if (*project_cmd) {
      auto store = PrincipleStore::load(store_path);
      auto projection = pca_project(store, dims);
      write_projection_csv(projection, csv_out);
      out << "wrote " << projection.points.size() << " point(s) on " << projection.axes << " axis/axes to " << csv_out
          << '\n';
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << text::normalize_whitespace(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << text::normalize_whitespace(e.what()) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace principles
