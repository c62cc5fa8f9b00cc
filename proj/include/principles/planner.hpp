#pragma once

#include "principles/catalog.hpp"
#include "principles/dialogue.hpp"
#include "principles/store.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace principles {

enum class PlannerMode { principles, standard, proactive, procot, icl_aif, ask_an_expert };

std::string_view to_string(PlannerMode m);
PlannerMode planner_mode_from_string(std::string_view s);

struct PlannerConfig {
  PlannerMode mode = PlannerMode::principles;
  int k = 3;
  bool reinterpret = true;
  std::optional<int> retrieval_window;  // nullopt: whole transcript
  bool mi_prompt = false;
  std::optional<StrategyCatalog> catalog;
  // Retrieval ablation: the model picks k principles from (a sample of) the store.
  bool select_by_llm = false;
  int selection_cap = 100;
  int icl_aif_refresh = 1;  // turns between feedback regenerations
  PrincipleFormat principle_format = PrincipleFormat::canonical;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct ReinterpretedItem {
  Principle original;
  std::string text;
  bool flagged = false;  // the model output had no usable entry for this slot
};

struct ReinterpretedSet {
  std::vector<ReinterpretedItem> items;
  std::string raw_output;
};

/// Embeds the (windowed) transcript and searches the store. An empty store
/// yields an empty result.
RetrievalResult retrieve(Gateway& gateway, const DialogueState& state, const PrincipleStore& store,
                         const PlannerConfig& cfg);

/// Adapts every hit to the current dialogue in one call with numbered output.
/// Slots the model leaves out keep the original sentence and are flagged.
ReinterpretedSet reinterpret(const SimulationContext& ctx, const DialogueState& state, const RetrievalResult& hits);

/// Reads "1. ...", "2) ..." entries; keys are 1-based.
std::map<int, std::string> parse_numbered_list(std::string_view text);

struct PlanResult {
  std::string strategy_block;          // empty: respond without guidance
  std::optional<std::string> label;    // catalog label for proactive/procot
  bool fallback = false;               // principles mode with nothing retrieved
  nlohmann::json trace = nlohmann::json::object();
};

/// Per-episode planner. Holds the ICL-AIF feedback between refreshes; the
/// store is only read, and never in standard mode.
class Planner {
 public:
  Planner(PlannerConfig cfg, const PrincipleStore* store);

  PlanResult plan(const SimulationContext& ctx, const DialogueState& state);
  const PlannerConfig& config() const { return cfg_; }

 private:
  PlanResult plan_principles(const SimulationContext& ctx, const DialogueState& state);
  PlanResult plan_catalog(const SimulationContext& ctx, const DialogueState& state, const PromptTemplate& prompt,
                          const char* purpose);
  RetrievalResult select_with_model(const SimulationContext& ctx, const DialogueState& state,
                                    nlohmann::json& trace) const;

  PlannerConfig cfg_;
  const PrincipleStore* store_;
  std::string icl_feedback_;
  int icl_turn_ = 0;
};

/// One-shot planning with a fresh planner.
PlanResult plan(const SimulationContext& ctx, const DialogueState& state, const PrincipleStore* store,
                const PlannerConfig& cfg);

}  // namespace principles
