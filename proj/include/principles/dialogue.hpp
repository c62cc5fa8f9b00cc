#pragma once

#include "principles/gateway.hpp"
#include "principles/prompt_template.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace principles {

/// Task domain name. Two are built in; others only need a critic scale and
/// prompt directory in the configuration.
class Domain {
 public:
  Domain() = default;
  explicit Domain(std::string name);

  static Domain emotional_support() { return Domain("emotional_support"); }
  static Domain persuasion() { return Domain("persuasion"); }

  const std::string& name() const { return name_; }
  auto operator<=>(const Domain&) const = default;

 private:
  std::string name_;
};

struct ScenarioSeed {
  std::string seed_id;
  Domain domain;
  std::map<std::string, std::string> background;
  std::string first_user_utterance;
  // Background keys the agent must not see (e.g. a persuadee's donation barrier).
  std::vector<std::string> hidden_fields;
  // Optional per-turn reference strategy labels, used for F1.
  std::vector<std::string> gold_strategies;
};

void validate_seed(const ScenarioSeed& seed);

/// One object per line: seed_id, domain, background, first_user_utterance
/// (required); hidden_fields, gold_strategies (optional).
std::vector<ScenarioSeed> load_seeds(const std::filesystem::path& path);
ScenarioSeed seed_from_json_line(const std::string& line);

enum class Role { agent, user };

std::string_view to_string(Role role);

struct Utterance {
  Role role;
  std::string text;
  int turn_index;

  /// Text is whitespace-normalized to a single line; must be non-empty.
  Utterance(Role role, std::string_view text, int turn_index);
  bool operator==(const Utterance&) const = default;
};

/// Dialogue history s_t. Values are immutable: append_turn returns a new state
/// and leaves its argument untouched, so a failed turn can be re-simulated from
/// the exact state that preceded it.
class DialogueState {
 public:
  explicit DialogueState(ScenarioSeed seed);

  const ScenarioSeed& seed() const { return *seed_; }
  const std::vector<Utterance>& history() const { return history_; }

  int completed_turns() const { return static_cast<int>(history_.size() / 2); }
  int current_turn() const { return completed_turns() + 1; }

  friend DialogueState append_turn(const DialogueState& state, const Utterance& agent, const Utterance& user);

 private:
  std::shared_ptr<const ScenarioSeed> seed_;
  std::vector<Utterance> history_;
};

DialogueState append_turn(const DialogueState& state, const Utterance& agent, const Utterance& user);

inline constexpr std::string_view agent_tag = "Agent:";
inline constexpr std::string_view user_tag = "User:";

/// Role-tagged transcript, oldest first, opening user utterance included.
/// With a window, only the last `window` turns follow an omission marker.
std::string serialize_state(const DialogueState& state, std::optional<int> window = std::nullopt);

std::string render_background(const ScenarioSeed& seed, bool include_hidden);

/// Role prompt templates. The eight core templates are required; the baseline
/// templates are only needed by the planner mode that uses them.
struct PromptSet {
  PromptTemplate strategy;           // rho_sigma
  PromptTemplate agent;              // rho_a
  PromptTemplate user;               // rho_u
  PromptTemplate critic;             // rho_c
  PromptTemplate revision;           // rho_r
  PromptTemplate success_principle;  // rho_pi
  PromptTemplate failure_principle;  // rho_psi
  PromptTemplate reinterpretation;   // rho_nu

  PromptTemplate proactive;      // rho_proactive
  PromptTemplate procot;         // rho_procot
  PromptTemplate icl_aif;        // rho_icl_aif
  PromptTemplate ask_an_expert;  // rho_ane
  PromptTemplate label_mapping;  // rho_label
  PromptTemplate selection;      // rho_select
};

/// Allowed slots per template file stem (e.g. "rho_a").
const std::map<std::string, std::set<std::string>>& prompt_slot_table();

/// Checks every non-empty template against its slot table entry and that the
/// core templates are present.
void validate_prompt_set(const PromptSet& prompts);

/// Loads rho_*.txt files from one directory.
PromptSet load_prompt_set(const std::filesystem::path& dir);

/// Loads per-domain prompt sets from `root/<domain>/`; a flat directory of
/// rho_*.txt files applies to every domain.
class PromptLibrary {
 public:
  static PromptLibrary load(const std::filesystem::path& root);

  void set(const Domain& domain, PromptSet prompts);
  void set_default(PromptSet prompts);
  const PromptSet& for_domain(const Domain& domain) const;

 private:
  std::map<Domain, PromptSet> by_domain_;
  std::optional<PromptSet> fallback_;
};

struct RoleSettings {
  double temperature = 0.7;
  std::optional<int> max_output_tokens;
};

struct GenerationSettings {
  RoleSettings strategy;
  RoleSettings agent;
  RoleSettings user;
  RoleSettings derivation;
  RoleSettings planner;
};

/// Everything a role call needs besides the dialogue itself.
struct SimulationContext {
  Gateway& gateway;
  const PromptSet& prompts;
  GenerationSettings settings = {};
};

/// Shared slots: domain, background, public_background, history.
PromptArgs base_prompt_args(const DialogueState& state);

/// Agent reply for the current turn, conditioned on a strategy.
Utterance agent_respond(const SimulationContext& ctx, const DialogueState& state, std::string_view strategy);

/// Agent reply with the strategy section of the template left out.
Utterance agent_respond_unguided(const SimulationContext& ctx, const DialogueState& state);

Utterance user_respond(const SimulationContext& ctx, const DialogueState& state, const Utterance& agent_utt);

}  // namespace principles
