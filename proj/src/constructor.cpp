#include "principles/constructor.hpp"

#include "principles/error.hpp"
#include "principles/text.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

namespace principles {

void ConstructionConfig::validate() const {
  if (episode_budget < 1) fail(ErrorCode::config, "episode_budget must be >= 1");
  if (max_revisions < 0) fail(ErrorCode::config, "max_revisions must be >= 0");
  if (workers < 1) fail(ErrorCode::config, "workers must be >= 1");
  critic.validate();
}

TimestampSource wall_clock() {
  return [] {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
  };
}

TimestampSource logical_clock() {
  auto counter = std::make_shared<std::atomic<long long>>(0);
  return [counter] {
    std::time_t t = static_cast<std::time_t>(++*counter);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
  };
}

namespace {

GenerationRequest make_request(std::string prompt, const RoleSettings& settings, std::string purpose) {
  GenerationRequest req;
  req.prompt_text = std::move(prompt);
  req.temperature = settings.temperature;
  req.max_output_tokens = settings.max_output_tokens;
  req.purpose = std::move(purpose);
  return req;
}

std::string render_trials(const std::vector<Trial>& trials) {
  std::ostringstream out;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    out << "Attempt " << i + 1 << "\n"
        << "Strategy: " << trials[i].strategy << "\n"
        << agent_tag << ' ' << trials[i].agent_utt.text << "\n"
        << user_tag << ' ' << trials[i].user_utt.text << "\n";
  }
  return out.str();
}

PromptArgs trial_args(const DialogueState& state, const Trial& trial) {
  auto args = base_prompt_args(state);
  args["strategy"] = trial.strategy;
  args["agent_utterance"] = trial.agent_utt.text;
  args["user_utterance"] = trial.user_utt.text;
  return args;
}

// Asks for a principle, re-asking once with an explicit format reminder when
// the first reply does not parse.
PrincipleClauses request_principle(const SimulationContext& ctx, const std::string& prompt, bool want_rather_than,
                                   const char* purpose) {
  const std::string reminder =
      want_rather_than ? "\n\nRespond with one sentence of the form: When [situation], you should [successful "
                         "strategy], rather than [failed strategy], because [reason]."
                       : "\n\nRespond with one sentence of the form: When [situation], you should [successful "
                         "strategy], because [reason].";
  auto attempt = [&](const std::string& p) -> std::optional<PrincipleClauses> {
    auto reply = complete_one(ctx.gateway, make_request(p, ctx.settings.derivation, purpose));
    try {
      auto clauses = parse_principle(find_principle_sentence(reply));
      if (want_rather_than && !clauses.rather_than) return std::nullopt;
      return clauses;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::parse) throw;
      return std::nullopt;
    }
  };
  if (auto c = attempt(prompt)) return *c;
  if (auto c = attempt(prompt + reminder)) return *c;
  fail(ErrorCode::parse, want_rather_than ? "derived principle lacks a 'rather than' clause after re-ask"
                                          : "derived principle could not be parsed after re-ask");
}

}  // namespace

std::string propose_strategy(const SimulationContext& ctx, const DialogueState& state) {
  auto prompt = ctx.prompts.strategy.render(base_prompt_args(state));
  return text::normalize_whitespace(complete_one(ctx.gateway, make_request(prompt, ctx.settings.strategy, "strategy")));
}

std::string revise_strategy(const SimulationContext& ctx, const DialogueState& state,
                            const std::vector<Trial>& failed_trials) {
  require(!failed_trials.empty(), "revise_strategy: failed_trials must be non-empty");
  auto args = base_prompt_args(state);
  args["failed_trials"] = render_trials(failed_trials);
  auto prompt = ctx.prompts.revision.render(args);
  return text::normalize_whitespace(complete_one(ctx.gateway, make_request(prompt, ctx.settings.strategy, "revision")));
}

Derivation derive_success_principle(const SimulationContext& ctx, const DialogueState& state, const Trial& trial) {
  auto prompt = ctx.prompts.success_principle.render(trial_args(state, trial));
  Derivation d;
  d.principle.clauses = request_principle(ctx, prompt, false, "success_principle");
  if (d.principle.clauses.rather_than) {
    d.principle.clauses.rather_than.reset();
    d.warnings.push_back("success principle carried a 'rather than' clause; dropped");
  }
  d.principle.provenance = Provenance::success;
  d.principle.source = {state.seed().seed_id, trial.agent_utt.turn_index};
  d.principle.when_embedding = ctx.gateway.embed(when_text(d.principle.clauses));
  return d;
}

Derivation derive_failure_principle(const SimulationContext& ctx, const DialogueState& state,
                                    const Trial& success_trial, const std::vector<Trial>& failed_trials,
                                    double previous_reward) {
  require(!failed_trials.empty(), "derive_failure_principle: failed_trials must be non-empty");
  require(success_trial.reward > previous_reward,
          "derive_failure_principle: the successful trial must improve on the previous reward");
  auto args = trial_args(state, success_trial);
  args["failed_trials"] = render_trials(failed_trials);
  auto prompt = ctx.prompts.failure_principle.render(args);
  Derivation d;
  d.principle.clauses = request_principle(ctx, prompt, true, "failure_principle");
  d.principle.provenance = Provenance::revision;
  d.principle.source = {state.seed().seed_id, success_trial.agent_utt.turn_index};
  d.principle.when_embedding = ctx.gateway.embed(when_text(d.principle.clauses));
  return d;
}

std::vector<std::size_t> sample_episodes(std::size_t seed_count, int budget, std::uint64_t rng_seed,
                                         bool with_replacement) {
  require(seed_count > 0, "sample_episodes: no seeds");
  require(budget >= 1, "sample_episodes: budget must be >= 1");
  std::mt19937_64 rng(rng_seed);
  std::vector<std::size_t> picks;
  auto wanted = static_cast<std::size_t>(budget);
  if (with_replacement) {
    for (std::size_t i = 0; i < wanted; ++i) picks.push_back(static_cast<std::size_t>(rng() % seed_count));
    return picks;
  }
  if (wanted > seed_count)
    fail(ErrorCode::config, "episode budget " + std::to_string(budget) + " exceeds " + std::to_string(seed_count) +
                                " seeds; enable sample_with_replacement");
  std::vector<std::size_t> order(seed_count);
  for (std::size_t i = 0; i < seed_count; ++i) order[i] = i;
  // Fisher-Yates on raw engine output so the order does not depend on the
  // standard library's distribution implementations.
  for (std::size_t i = seed_count - 1; i > 0; --i) std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
  order.resize(wanted);
  return order;
}

EpisodeResult run_construction_episode(const Environment& env, const ScenarioSeed& seed,
                                       const ConstructionConfig& cfg) {
  EpisodeResult result;
  result.log.seed_id = seed.seed_id;
  result.log.domain = seed.domain;
  result.log.mode = "construct";

  try {
    const SimulationContext ctx{env.gateway, env.prompts.for_domain(seed.domain), env.settings};
    const FeedbackScale& scale = env.scales.for_domain(seed.domain);
    DialogueState state(seed);
    double previous = cfg.critic.initial_reward;

    auto simulate = [&](const std::string& strategy) {
      auto agent = agent_respond(ctx, state, strategy);
      auto user = user_respond(ctx, state, agent);
      double reward = turn_reward(ctx, scale, state, agent, user, cfg.critic);
      return Trial{strategy, agent, user, reward};
    };

    for (int turn = 1;; ++turn) {
      Trial first = simulate(propose_strategy(ctx, state));
      TurnRecord record{turn, previous, first, false, {}, std::nullopt, std::nullopt, std::nullopt,
                        std::nullopt, std::nullopt, nullptr};
      std::optional<Derivation> derived;

      try {
        if (turn_status(first.reward, previous)) {
          record.status = true;
          derived = derive_success_principle(ctx, state, first);
        } else {
          // Every revision re-simulates from `state`, the pre-failure s_t.
          std::vector<Trial> failures{first};
          std::optional<Trial> success;
          while (static_cast<int>(record.failed_trials.size()) < cfg.max_revisions) {
            Trial revised = simulate(revise_strategy(ctx, state, failures));
            if (turn_status(revised.reward, previous)) {
              success = std::move(revised);
              break;
            }
            record.failed_trials.push_back(revised);
            failures.push_back(std::move(revised));
          }
          if (success) {
            record.status = true;
            record.initial = first;
            record.accepted = *success;
            derived = derive_failure_principle(ctx, state, *success, failures, previous);
          }
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::parse) throw;
        record.note = std::string("principle derivation failed: ") + e.what();
        std::clog << "[warn] " << seed.seed_id << " turn " << turn << ": " << *record.note << '\n';
      }
      if (derived) {
        if (!derived->warnings.empty()) record.note = text::join(derived->warnings, "; ");
        result.principles.emplace_back(result.log.turns.size(), std::move(derived->principle));
      }

      state = append_turn(state, record.accepted.agent_utt, record.accepted.user_utt);
      previous = record.accepted.reward;
      result.log.turns.push_back(std::move(record));

      auto goal = goal_check(previous, turn, cfg.critic);
      if (goal == GoalStatus::goal_completed) {
        result.log.outcome = EpisodeOutcome::goal_completed;
        break;
      }
      if (goal == GoalStatus::exhausted) {
        result.log.outcome = EpisodeOutcome::exhausted;
        break;
      }
    }
  } catch (const Error& e) {
    result.log.outcome = EpisodeOutcome::aborted;
    result.log.error = std::string(to_string(e.code())) + ": " + e.what();
    std::clog << "[warn] episode " << seed.seed_id << " aborted: " << *result.log.error << '\n';
  }
  return result;
}

std::string ConstructionSummary::to_line() const {
  std::ostringstream out;
  out << "episodes=" << episodes << " turns=" << turns << " revisions=" << revisions
      << " principles=" << success_principles + revision_principles << " success=" << success_principles
      << " revision=" << revision_principles << " goal_completed=" << goal_completed << " aborted=" << aborted;
  return out.str();
}

ConstructionResult construct(const Environment& env, const std::vector<ScenarioSeed>& seeds,
                             const ConstructionConfig& cfg, const TimestampSource& clock) {
  cfg.validate();
  require(!seeds.empty(), "construct: seeds must be non-empty");
  auto picks = sample_episodes(seeds.size(), cfg.episode_budget, cfg.rng_seed, cfg.sample_with_replacement);

  std::vector<EpisodeResult> episodes(picks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < picks.size(); i = next++)
      episodes[i] = run_construction_episode(env, seeds[picks[i]], cfg);
  };
  auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), picks.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  ConstructionResult result{
      PrincipleStore(env.gateway.embedding_dimension(), env.gateway.provider_tag(), {cfg.deduplicate}), {}, {}};
  auto& s = result.summary;
  for (auto& ep : episodes) {
    for (auto& [turn_pos, principle] : ep.principles) {
      principle.created_at = clock();
      auto provenance = principle.provenance;
      ep.log.turns[turn_pos].derived_principle_id = result.store.add(std::move(principle));
      ++(provenance == Provenance::success ? s.success_principles : s.revision_principles);
    }
    ++s.episodes;
    s.turns += ep.log.total_turns();
    for (const auto& t : ep.log.turns)
      s.revisions += static_cast<int>(t.failed_trials.size()) + (t.initial ? 1 : 0);
    if (ep.log.outcome == EpisodeOutcome::goal_completed) ++s.goal_completed;
    if (ep.log.outcome == EpisodeOutcome::aborted) ++s.aborted;
    result.logs.push_back(std::move(ep.log));
  }
  return result;
}

}  // namespace principles
