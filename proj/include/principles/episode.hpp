#pragma once

#include "principles/critic.hpp"
#include "principles/dialogue.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace principles {

/// One simulated attempt at a turn: (strategy, agent utterance, user reply) and its reward.
struct Trial {
  std::string strategy;
  Utterance agent_utt;
  Utterance user_utt;
  double reward;
};

struct TurnRecord {
  int turn_index;
  double previous_reward;
  Trial accepted;  // the trial whose utterances were appended to the state
  bool status;
  std::vector<Trial> failed_trials;  // failed revision attempts at this turn
  std::optional<Trial> initial;      // first attempt, when a revision replaced it
  std::optional<std::string> derived_principle_id;
  std::optional<std::string> note;
  // Evaluation runs only.
  std::optional<std::string> predicted_label;
  std::optional<std::string> gold_label;
  nlohmann::json planner_trace;
};

enum class EpisodeOutcome { goal_completed, exhausted, aborted };

std::string_view to_string(EpisodeOutcome o);
EpisodeOutcome episode_outcome_from_string(std::string_view s);

struct EpisodeLog {
  std::string seed_id;
  Domain domain;
  std::string mode;  // "construct" or the planner mode
  std::vector<TurnRecord> turns;
  EpisodeOutcome outcome = EpisodeOutcome::aborted;
  std::optional<std::string> error;

  int total_turns() const { return static_cast<int>(turns.size()); }
};

nlohmann::json to_json(const Trial& t);
Trial trial_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TurnRecord& r);
TurnRecord turn_record_from_json(const nlohmann::json& j);

/// Episode file layout: an "episode" header line, one "turn" line per
/// TurnRecord, and a closing "outcome" line.
void write_episode_log(const EpisodeLog& log, const std::filesystem::path& path);
EpisodeLog read_episode_log(const std::filesystem::path& path);

/// Writes logs as `<dir>/episode-0001.jsonl`, ... in order.
void write_episode_logs(const std::vector<EpisodeLog>& logs, const std::filesystem::path& dir);
std::vector<EpisodeLog> read_episode_logs(const std::filesystem::path& dir);

}  // namespace principles
