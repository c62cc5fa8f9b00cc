#pragma once

#include "principles/episode.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace principles {

/// -sum p log p over the non-zero counts, in the given log base.
double entropy(const std::map<std::string, long>& label_counts, double base = std::exp(1.0));

using LabelPair = std::pair<std::string, std::string>;  // (gold, predicted)

/// Unweighted mean of per-class F1 over classes seen in gold or predicted.
double macro_f1(const std::vector<LabelPair>& pairs);
/// Per-class F1 weighted by gold frequency.
double weighted_f1(const std::vector<LabelPair>& pairs);

struct MetricsOptions {
  double entropy_base = std::exp(1.0);
  int max_turns = 10;
};

struct MetricsReport {
  int episodes = 0;  // non-aborted
  int aborted = 0;
  int successes = 0;
  double success_rate = 0;
  double average_turns = 0;
  std::optional<double> macro_f1;  // absent without gold labels
  std::optional<double> weighted_f1;
  std::optional<double> entropy;   // absent without predicted labels
  double entropy_base = std::exp(1.0);
  std::map<std::string, long> label_counts;
  int labeled_turns = 0;
  int gold_turns = 0;
};

/// Pure fold over finished logs. Aborted episodes are counted apart and left
/// out of SR and AT.
MetricsReport compute_metrics(const std::vector<EpisodeLog>& logs, const MetricsOptions& options = {});

nlohmann::json to_json(const MetricsReport& r);
std::string format_table(const MetricsReport& r);

}  // namespace principles
