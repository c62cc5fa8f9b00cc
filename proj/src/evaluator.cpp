#include "principles/evaluator.hpp"

#include "principles/error.hpp"
#include "principles/pca.hpp"
#include "principles/text.hpp"

#include <atomic>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

namespace principles {

void EvalConfig::validate() const {
  planner.validate();
  critic.validate();
  if (workers < 1) fail(ErrorCode::config, "workers must be >= 1");
}

LabelMapping map_strategy_to_label(const SimulationContext& ctx, std::string_view strategy_text,
                                   const StrategyCatalog& catalog) {
  require(catalog.size() > 0, "map_strategy_to_label: empty catalog");
  if (const auto* e = catalog.find(strategy_text)) return {e->label, false};
  if (ctx.prompts.label_mapping.empty()) fail(ErrorCode::config, "label mapping needs the rho_label template");

  PromptArgs args{{"domain", catalog.domain().name()},
                  {"strategy", text::normalize_whitespace(strategy_text)},
                  {"catalog", catalog.render(false)}};
  auto prompt = ctx.prompts.label_mapping.render(args);
  for (int attempt = 0; attempt < 2; ++attempt) {
    GenerationRequest req;
    req.prompt_text = attempt == 0 ? prompt : prompt + "\n\nAnswer with exactly one label from the list.";
    req.temperature = ctx.settings.planner.temperature;
    req.purpose = "label_mapping";
    auto reply = complete_one(ctx.gateway, req);
    for (const auto& line : text::split_lines(reply)) {
      auto s = strip_list_marker(line);
      while (!s.empty() && s.back() == '.') s.pop_back();
      if (const auto* e = catalog.find(s)) return {e->label, false};
    }
  }
  return {catalog.fallback_label(), true};
}

namespace {

struct EpisodeRun {
  EpisodeLog log;
  std::vector<std::pair<std::size_t, Principle>> derived;  // (turn position, principle)
};

EpisodeRun run_eval_episode(const Environment& env, const ScenarioSeed& seed, const EvalConfig& cfg,
                            const PrincipleStore* store) {
  EpisodeRun run;
  run.log.seed_id = seed.seed_id;
  run.log.domain = seed.domain;
  run.log.mode = std::string(to_string(cfg.planner.mode));
  try {
    const SimulationContext ctx{env.gateway, env.prompts.for_domain(seed.domain), env.settings};
    const FeedbackScale& scale = env.scales.for_domain(seed.domain);
    Planner planner(cfg.planner, store);
    DialogueState state(seed);
    double previous = cfg.critic.initial_reward;

    for (int turn = 1;; ++turn) {
      auto planned = planner.plan(ctx, state);
      auto agent = planned.strategy_block.empty() ? agent_respond_unguided(ctx, state)
                                                  : agent_respond(ctx, state, planned.strategy_block);
      auto user = user_respond(ctx, state, agent);
      double reward = turn_reward(ctx, scale, state, agent, user, cfg.critic);
      Trial trial{planned.strategy_block, agent, user, reward};
      TurnRecord record{turn,         previous,     trial,        turn_status(reward, previous),
                        {},           std::nullopt, std::nullopt, std::nullopt,
                        std::nullopt, std::nullopt, planned.trace};

      if (cfg.label_catalog) {
        if (planned.label) {
          record.predicted_label = planned.label;
        } else {
          auto mapped = map_strategy_to_label(ctx, agent.text, *cfg.label_catalog);
          record.predicted_label = mapped.label;
          if (mapped.flagged) record.note = "label mapping fell back to '" + mapped.label + "'";
        }
        if (static_cast<std::size_t>(turn) <= seed.gold_strategies.size())
          record.gold_label = seed.gold_strategies[static_cast<std::size_t>(turn) - 1];
      }

      if (cfg.online_construction && record.status) {
        try {
          // An unguided turn has no planner text; the utterance itself is what worked.
          Trial basis = trial;
          if (basis.strategy.empty()) basis.strategy = agent.text;
          auto d = derive_success_principle(ctx, state, basis);
          run.derived.emplace_back(run.log.turns.size(), std::move(d.principle));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::parse) throw;
          record.note = std::string("principle derivation failed: ") + e.what();
        }
      }

      state = append_turn(state, agent, user);
      previous = reward;
      run.log.turns.push_back(std::move(record));

      auto goal = goal_check(previous, turn, cfg.critic);
      if (goal == GoalStatus::goal_completed) {
        run.log.outcome = EpisodeOutcome::goal_completed;
        break;
      }
      if (goal == GoalStatus::exhausted) {
        run.log.outcome = EpisodeOutcome::exhausted;
        break;
      }
    }
  } catch (const Error& e) {
    run.log.outcome = EpisodeOutcome::aborted;
    run.log.error = std::string(to_string(e.code())) + ": " + e.what();
    std::clog << "[warn] episode " << seed.seed_id << " aborted: " << *run.log.error << '\n';
  }
  return run;
}

}  // namespace

EvalResult run_eval(const Environment& env, const std::vector<ScenarioSeed>& seeds, const EvalConfig& cfg,
                    const PrincipleStore* store, const TimestampSource& clock) {
  cfg.validate();
  EvalResult result;

  if (cfg.online_construction) {
    result.live_store.emplace(store ? PrincipleStore(*store)
                                    : PrincipleStore(env.gateway.embedding_dimension(), env.gateway.provider_tag()));
    for (const auto& seed : seeds) {
      auto run = run_eval_episode(env, seed, cfg, &*result.live_store);
      for (auto& [turn_pos, p] : run.derived) {
        p.created_at = clock();
        run.log.turns[turn_pos].derived_principle_id = result.live_store->add(std::move(p));
      }
      result.logs.push_back(std::move(run.log));
    }
  } else {
    std::vector<EpisodeRun> runs(seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < seeds.size(); i = next++) runs[i] = run_eval_episode(env, seeds[i], cfg, store);
    };
    auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), seeds.size());
    if (workers <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (auto& r : runs) result.logs.push_back(std::move(r.log));
  }

  result.report = compute_metrics(result.logs, {cfg.entropy_base, cfg.critic.max_turns});
  return result;
}

Projection pca_project(const PrincipleStore& store, int dims) {
  require(dims >= 1, "pca_project: dims must be >= 1");
  auto principles = store.snapshot();
  require(principles.size() >= static_cast<std::size_t>(dims) + 1,
          "pca_project: need at least dims+1 principles, have " + std::to_string(principles.size()));
  Eigen::MatrixXd points(static_cast<Eigen::Index>(principles.size()), store.dimension());
  for (std::size_t i = 0; i < principles.size(); ++i)
    points.row(static_cast<Eigen::Index>(i)) = principles[i].when_embedding.transpose();

  auto r = pca(points, dims);
  if (r.rank_deficient(dims))
    std::clog << "[warn] embedding corpus has rank " << r.rank << "; projecting onto " << r.axes << " axes\n";

  Projection out;
  out.axes = r.axes;
  out.eigenvalues = r.eigenvalues;
  for (std::size_t i = 0; i < principles.size(); ++i) {
    std::vector<double> coords(static_cast<std::size_t>(dims));
    for (int j = 0; j < dims; ++j) coords[static_cast<std::size_t>(j)] = r.projected(static_cast<Eigen::Index>(i), j);
    out.points.push_back({principles[i].id, std::move(coords), principles[i].provenance});
  }
  return out;
}

void write_projection_csv(const Projection& projection, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  auto dims = projection.points.empty() ? 2 : projection.points.front().coordinates.size();
  out << "id";
  if (dims == 2) {
    out << ",x,y";
  } else {
    for (std::size_t j = 0; j < dims; ++j) out << ",x" << j + 1;
  }
  out << ",provenance\n" << std::setprecision(17);
  for (const auto& p : projection.points) {
    out << p.id;
    for (double c : p.coordinates) out << ',' << c;
    out << ',' << to_string(p.provenance) << '\n';
  }
}

}  // namespace principles
