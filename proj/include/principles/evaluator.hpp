#pragma once

#include "principles/catalog.hpp"
#include "principles/constructor.hpp"
#include "principles/metrics.hpp"
#include "principles/planner.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace principles {

struct EvalConfig {
  PlannerConfig planner;
  CriticConfig critic;
  // Derive success principles during evaluation and add each episode's
  // principles to the live store before the next episode. Forces one worker.
  bool online_construction = false;
  int workers = 1;
  // Enables per-turn label mapping, entropy and F1.
  std::optional<StrategyCatalog> label_catalog;
  double entropy_base = std::exp(1.0);

  void validate() const;
};

struct EvalResult {
  std::vector<EpisodeLog> logs;
  MetricsReport report;
  std::optional<PrincipleStore> live_store;  // online construction only
};

/// Runs one planner-driven episode per seed, in seed order.
EvalResult run_eval(const Environment& env, const std::vector<ScenarioSeed>& seeds, const EvalConfig& cfg,
                    const PrincipleStore* store, const TimestampSource& clock = logical_clock());

struct LabelMapping {
  std::string label;
  bool flagged = false;  // the model never produced a catalog label; fallback used
};

/// Exact catalog match first; otherwise asks the model (one re-ask) and falls
/// back to the catalog's fallback label, flagged.
LabelMapping map_strategy_to_label(const SimulationContext& ctx, std::string_view strategy_text,
                                   const StrategyCatalog& catalog);

struct ProjectedPrinciple {
  std::string id;
  std::vector<double> coordinates;
  Provenance provenance;
};

struct Projection {
  std::vector<ProjectedPrinciple> points;
  Eigen::Index axes = 0;  // fewer than requested when the corpus is rank-deficient
  Eigen::VectorXd eigenvalues;
};

/// PCA of the stored When-clause embeddings.
Projection pca_project(const PrincipleStore& store, int dims = 2);

/// CSV header "id,x,y,provenance" (x1..xn past two dimensions).
void write_projection_csv(const Projection& projection, const std::filesystem::path& path);

}  // namespace principles
