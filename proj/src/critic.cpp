#include "principles/critic.hpp"

#include "principles/error.hpp"
#include "principles/text.hpp"

#include <cmath>

namespace principles {

FeedbackScale::FeedbackScale(Domain domain, std::vector<FeedbackLevel> levels)
    : domain_(std::move(domain)), levels_(std::move(levels)) {
  if (levels_.size() != 4)
    fail(ErrorCode::config, "feedback scale for " + domain_.name() + " must have exactly 4 levels");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    auto& level = levels_[i];
    if (level.name.empty()) fail(ErrorCode::config, "feedback level names must be non-empty");
    if (!std::isfinite(level.value) || level.value < -1.0 || level.value > 1.0)
      fail(ErrorCode::config, "feedback level '" + level.name + "' value must lie in [-1, 1]");
    if (i > 0 && !(level.value > levels_[i - 1].value))
      fail(ErrorCode::config, "feedback scale for " + domain_.name() + " must be strictly increasing");
    if (level.phrases.empty()) level.phrases.push_back(level.name);
  }
}

FeedbackScale FeedbackScale::emotional_support() {
  return FeedbackScale(Domain::emotional_support(),
                       {
                           {"worse", -1.0, {"No, the Patient feels worse.", "the patient feels worse", "worse"}},
                           {"same", -0.5, {"No, the Patient feels the same.", "the patient feels the same", "same"}},
                           {"better", 0.5, {"No, but the Patient feels better.", "the patient feels better", "better"}},
                           {"solved",
                            1.0,
                            {"Yes, the Patient's issue has been solved.", "the patient's issue has been solved", "solved"}},
                       });
}

FeedbackScale FeedbackScale::persuasion() {
  return FeedbackScale(
      Domain::persuasion(),
      {
          {"refused", -1.0, {"The persuadee has explicitly refused.", "has explicitly refused", "refused"}},
          {"neutral", -0.5, {"The persuadee remains neutral about donating.", "remains neutral", "neutral"}},
          {"positive",
           0.5,
           {"The persuadee has a positive attitude towards donating but hasn't decided yet.",
            "has a positive attitude towards donating", "positive"}},
          {"donate", 1.0, {"The persuadee has decided to donate.", "has decided to donate", "donate"}},
      });
}

std::optional<std::size_t> FeedbackScale::find_level(std::string_view name) const {
  for (std::size_t i = 0; i < levels_.size(); ++i)
    if (levels_[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> FeedbackScale::parse(std::string_view critic_text) const {
  auto folded = text::fold_for_match(critic_text);
  std::size_t best_len = 0;
  std::optional<std::size_t> best;
  bool ambiguous = false;
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    for (const auto& phrase : levels_[i].phrases) {
      auto needle = text::trim(text::fold_for_match(phrase));
      while (!needle.empty() && needle.back() == '.') needle.pop_back();
      if (needle.empty() || folded.find(needle) == std::string::npos) continue;
      if (needle.size() > best_len) {
        best_len = needle.size();
        best = i;
        ambiguous = false;
      } else if (needle.size() == best_len && best != i) {
        ambiguous = true;
      }
    }
  }
  if (ambiguous) return std::nullopt;
  return best;
}

std::string FeedbackScale::answer_options() const {
  std::string out;
  for (const auto& level : levels_) out += "- " + level.phrases.front() + "\n";
  return out;
}

CriticScales::CriticScales() {
  set(FeedbackScale::emotional_support());
  set(FeedbackScale::persuasion());
}

void CriticScales::set(FeedbackScale scale) {
  auto domain = scale.domain();
  scales_.insert_or_assign(domain, std::move(scale));
}

const FeedbackScale& CriticScales::for_domain(const Domain& domain) const {
  auto it = scales_.find(domain);
  if (it == scales_.end()) fail(ErrorCode::config, "no critic scale for domain '" + domain.name() + "'");
  return it->second;
}

double map_feedback_to_reward(const FeedbackScale& scale, const FeedbackLabel& label) {
  require(label.domain == scale.domain(),
          "feedback label domain '" + label.domain.name() + "' does not match scale '" + scale.domain().name() + "'");
  auto idx = scale.find_level(label.level);
  if (!idx) fail(ErrorCode::precondition, "'" + label.level + "' is not a level of the " + scale.domain().name() + " scale");
  return scale.levels()[*idx].value;
}

void CriticConfig::validate() const {
  if (sample_count < 1) fail(ErrorCode::config, "critic sample_count must be >= 1");
  if (!(temperature >= 0.0)) fail(ErrorCode::config, "critic temperature must be >= 0");
  if (!(success_threshold > -1.0 && success_threshold < 1.0))
    fail(ErrorCode::config, "critic success_threshold must lie in (-1, 1)");
  if (!std::isfinite(initial_reward)) fail(ErrorCode::config, "critic initial_reward must be finite");
  if (max_turns < 1) fail(ErrorCode::config, "max_turns must be >= 1");
}

TurnEvaluation evaluate_turn(const SimulationContext& ctx, const FeedbackScale& scale, const DialogueState& state,
                             const Utterance& agent_utt, const Utterance& user_utt, const CriticConfig& cfg) {
  require(cfg.sample_count >= 1, "critic sample_count must be >= 1");
  auto args = base_prompt_args(state);
  args["agent_utterance"] = agent_utt.text;
  args["user_utterance"] = user_utt.text;
  args["levels"] = scale.answer_options();

  GenerationRequest request;
  request.prompt_text = ctx.prompts.critic.render(args);
  request.temperature = cfg.temperature;
  request.sample_count = cfg.sample_count;
  request.purpose = "critic";
  auto outputs = ctx.gateway.complete(request);
  if (static_cast<int>(outputs.size()) != cfg.sample_count)
    fail(ErrorCode::evaluation, "critic returned " + std::to_string(outputs.size()) + " samples, expected " +
                                    std::to_string(cfg.sample_count));

  TurnEvaluation eval{0.0, {}};
  double sum = 0.0;
  for (auto& raw : outputs) {
    auto level = scale.parse(raw);
    if (!level) {
      GenerationRequest reask = request;
      reask.sample_count = 1;
      reask.prompt_text += "\n\nAnswer with exactly one of the following:\n" + scale.answer_options();
      raw = ctx.gateway.complete(reask).at(0);
      level = scale.parse(raw);
      if (!level) fail(ErrorCode::evaluation, "critic output could not be parsed after re-ask: " + raw);
    }
    const auto& lvl = scale.levels()[*level];
    eval.samples.push_back({{scale.domain(), lvl.name}, raw, lvl.value});
    sum += lvl.value;
  }
  eval.reward = sum / static_cast<double>(cfg.sample_count);
  return eval;
}

double turn_reward(const SimulationContext& ctx, const FeedbackScale& scale, const DialogueState& state,
                   const Utterance& agent_utt, const Utterance& user_utt, const CriticConfig& cfg) {
  return evaluate_turn(ctx, scale, state, agent_utt, user_utt, cfg).reward;
}

bool turn_status(double reward, double previous_reward) { return reward > previous_reward; }

std::string_view to_string(GoalStatus status) {
  switch (status) {
    case GoalStatus::continue_dialogue: return "continue";
    case GoalStatus::goal_completed: return "goal_completed";
    case GoalStatus::exhausted: return "exhausted";
  }
  return "unknown";
}

GoalStatus goal_check(double reward, int turn, const CriticConfig& cfg) {
  require(turn >= 1, "goal_check: turn must be >= 1");
  if (reward > cfg.success_threshold) return GoalStatus::goal_completed;
  if (turn >= cfg.max_turns) return GoalStatus::exhausted;
  return GoalStatus::continue_dialogue;
}

}  // namespace principles
