#pragma once

#include "principles/critic.hpp"
#include "principles/episode.hpp"
#include "principles/store.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace principles {

struct ConstructionConfig {
  int episode_budget = 50;   // E
  int max_revisions = 3;     // n_max
  CriticConfig critic;
  std::uint64_t rng_seed = 0;
  bool sample_with_replacement = false;
  bool deduplicate = false;
  int workers = 1;

  void validate() const;
};

/// Produces created_at stamps for new principles.
using TimestampSource = std::function<std::string()>;

/// UTC wall-clock ISO-8601 stamps.
TimestampSource wall_clock();
/// 1970-01-01T00:00:01Z, ...:02Z, ... for byte-reproducible runs.
TimestampSource logical_clock();

/// The collaborators shared by every episode of a run.
struct Environment {
  Gateway& gateway;
  const PromptLibrary& prompts;
  const CriticScales& scales;
  GenerationSettings settings = {};
};

/// sigma_t: one free-form strategy for the next agent turn.
std::string propose_strategy(const SimulationContext& ctx, const DialogueState& state);

/// sigma'_t conditioned on every failed attempt at this turn (must be non-empty).
std::string revise_strategy(const SimulationContext& ctx, const DialogueState& state,
                            const std::vector<Trial>& failed_trials);

struct Derivation {
  Principle principle;  // id empty until stored
  std::vector<std::string> warnings;
};

/// Three-clause principle from a successful first attempt. A four-clause
/// reply is normalized by dropping rather_than, with a warning.
Derivation derive_success_principle(const SimulationContext& ctx, const DialogueState& state, const Trial& trial);

/// Four-clause principle contrasting the successful revision with the failed
/// attempts. A reply without rather_than is a derivation error.
Derivation derive_failure_principle(const SimulationContext& ctx, const DialogueState& state,
                                    const Trial& success_trial, const std::vector<Trial>& failed_trials,
                                    double previous_reward);

/// Deterministic episode selection: a seeded shuffle of the seed indices,
/// truncated to `budget` (or seeded draws with replacement when allowed).
std::vector<std::size_t> sample_episodes(std::size_t seed_count, int budget, std::uint64_t rng_seed,
                                         bool with_replacement);

struct EpisodeResult {
  EpisodeLog log;
  // Principles in derivation order, paired with the turn (index into log.turns) that produced them.
  std::vector<std::pair<std::size_t, Principle>> principles;
};

/// One self-play episode with success detection, bounded revision with
/// backtracking, and principle derivation.
EpisodeResult run_construction_episode(const Environment& env, const ScenarioSeed& seed, const ConstructionConfig& cfg);

struct ConstructionSummary {
  int episodes = 0;
  int turns = 0;
  int revisions = 0;
  int success_principles = 0;
  int revision_principles = 0;
  int goal_completed = 0;
  int aborted = 0;

  std::string to_line() const;
};

struct ConstructionResult {
  PrincipleStore store;
  std::vector<EpisodeLog> logs;
  ConstructionSummary summary;
};

/// Runs the episode budget and collects every derived principle into a new
/// store. Principles enter the store in episode order regardless of workers.
ConstructionResult construct(const Environment& env, const std::vector<ScenarioSeed>& seeds,
                             const ConstructionConfig& cfg, const TimestampSource& clock = logical_clock());

}  // namespace principles
