#pragma once

#include "principles/dialogue.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace principles {

struct FeedbackLevel {
  std::string name;
  double value;
  // Verbatim answer strings; the first is the one the critic is asked to emit.
  std::vector<std::string> phrases;
};

/// Ordered four-level verbal scale for one domain, lowest level first.
class FeedbackScale {
 public:
  FeedbackScale(Domain domain, std::vector<FeedbackLevel> levels);

  static FeedbackScale emotional_support();
  static FeedbackScale persuasion();

  const Domain& domain() const { return domain_; }
  const std::vector<FeedbackLevel>& levels() const { return levels_; }

  std::optional<std::size_t> find_level(std::string_view name) const;

  /// Case-insensitive longest match over every level's phrases. Returns
  /// nullopt when nothing matches or the longest match is ambiguous.
  std::optional<std::size_t> parse(std::string_view critic_text) const;

  /// Text for the critic prompt's {levels} slot.
  std::string answer_options() const;

 private:
  Domain domain_;
  std::vector<FeedbackLevel> levels_;
};

struct FeedbackLabel {
  Domain domain;
  std::string level;
};

/// Domain → scale registry; starts with the two built-in scales.
class CriticScales {
 public:
  CriticScales();
  void set(FeedbackScale scale);
  const FeedbackScale& for_domain(const Domain& domain) const;
  const std::map<Domain, FeedbackScale>& all() const { return scales_; }

 private:
  std::map<Domain, FeedbackScale> scales_;
};

/// Fixed mapping f from a verbal level to a scalar reward.
double map_feedback_to_reward(const FeedbackScale& scale, const FeedbackLabel& label);

struct CriticConfig {
  int sample_count = 10;          // l
  double temperature = 1.0;       // tau
  double success_threshold = 0.5; // eta
  double initial_reward = -0.5;   // r_0, the "no change" level
  int max_turns = 10;

  void validate() const;
};

struct RewardSample {
  FeedbackLabel label;
  std::string raw_text;
  double value;
};

struct TurnEvaluation {
  double reward;
  std::vector<RewardSample> samples;
};

/// Samples the critic l times and averages the mapped rewards. Each
/// unparseable sample gets one re-ask; a second failure is an evaluation error.
TurnEvaluation evaluate_turn(const SimulationContext& ctx, const FeedbackScale& scale, const DialogueState& state,
                             const Utterance& agent_utt, const Utterance& user_utt, const CriticConfig& cfg);

double turn_reward(const SimulationContext& ctx, const FeedbackScale& scale, const DialogueState& state,
                   const Utterance& agent_utt, const Utterance& user_utt, const CriticConfig& cfg);

/// True iff the reward strictly improved on the previous turn.
bool turn_status(double reward, double previous_reward);

enum class GoalStatus { continue_dialogue, goal_completed, exhausted };

std::string_view to_string(GoalStatus status);

/// goal_completed iff reward > eta; exhausted at the turn cap otherwise.
GoalStatus goal_check(double reward, int turn, const CriticConfig& cfg);

}  // namespace principles
