#include "principles/metrics.hpp"

#include "principles/error.hpp"

#include <iomanip>
#include <set>
#include <sstream>

namespace principles {

double entropy(const std::map<std::string, long>& label_counts, double base) {
  require(base > 0 && base != 1, "entropy: log base must be positive and not 1");
  long total = 0;
  for (const auto& [_, c] : label_counts) {
    require(c >= 0, "entropy: negative count");
    total += c;
  }
  require(total >= 1, "entropy: total count must be >= 1");
  double h = 0;
  for (const auto& [_, c] : label_counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h / std::log(base);
}

namespace {

struct ClassCounts {
  long tp = 0, fp = 0, fn = 0, support = 0;
  double f1() const {
    long denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
};

std::map<std::string, ClassCounts> count_classes(const std::vector<LabelPair>& pairs) {
  require(!pairs.empty(), "F1 needs at least one labeled pair");
  std::map<std::string, ClassCounts> classes;
  for (const auto& [gold, pred] : pairs) {
    ++classes[gold].support;
    if (gold == pred) {
      ++classes[gold].tp;
    } else {
      ++classes[gold].fn;
      ++classes[pred].fp;
    }
  }
  return classes;
}

}  // namespace

double macro_f1(const std::vector<LabelPair>& pairs) {
  auto classes = count_classes(pairs);
  double sum = 0;
  for (const auto& [_, c] : classes) sum += c.f1();
  return sum / static_cast<double>(classes.size());
}

double weighted_f1(const std::vector<LabelPair>& pairs) {
  auto classes = count_classes(pairs);
  double sum = 0;
  for (const auto& [_, c] : classes) sum += static_cast<double>(c.support) * c.f1();
  return sum / static_cast<double>(pairs.size());
}

MetricsReport compute_metrics(const std::vector<EpisodeLog>& logs, const MetricsOptions& options) {
  MetricsReport r;
  r.entropy_base = options.entropy_base;
  long turn_sum = 0;
  std::vector<LabelPair> pairs;
  for (const auto& log : logs) {
    if (log.outcome == EpisodeOutcome::aborted) {
      ++r.aborted;
      continue;
    }
    ++r.episodes;
    if (log.outcome == EpisodeOutcome::goal_completed) ++r.successes;
    turn_sum += log.total_turns();
    for (const auto& t : log.turns) {
      if (!t.predicted_label) continue;
      ++r.labeled_turns;
      ++r.label_counts[*t.predicted_label];
      if (t.gold_label) pairs.emplace_back(*t.gold_label, *t.predicted_label);
    }
  }
  if (r.episodes > 0) {
    r.success_rate = static_cast<double>(r.successes) / r.episodes;
    r.average_turns = static_cast<double>(turn_sum) / r.episodes;
  }
  r.gold_turns = static_cast<int>(pairs.size());
  if (!pairs.empty()) {
    r.macro_f1 = macro_f1(pairs);
    r.weighted_f1 = weighted_f1(pairs);
  }
  if (r.labeled_turns > 0) r.entropy = entropy(r.label_counts, options.entropy_base);
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j{{"episodes", r.episodes},
                   {"aborted", r.aborted},
                   {"successes", r.successes},
                   {"success_rate", r.success_rate},
                   {"average_turns", r.average_turns},
                   {"entropy_base", r.entropy_base},
                   {"labeled_turns", r.labeled_turns},
                   {"gold_turns", r.gold_turns},
                   {"label_counts", r.label_counts}};
  if (r.macro_f1) j["macro_f1"] = *r.macro_f1;
  if (r.weighted_f1) j["weighted_f1"] = *r.weighted_f1;
  if (r.entropy) j["entropy"] = *r.entropy;
  return j;
}

std::string format_table(const MetricsReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  auto row = [&](const char* name, auto value) { out << std::left << std::setw(16) << name << value << '\n'; };
  auto opt = [](const std::optional<double>& v) {
    if (!v) return std::string("n/a");
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << *v;
    return s.str();
  };
  row("episodes", r.episodes);
  row("aborted", r.aborted);
  row("success_rate", r.success_rate);
  row("average_turns", r.average_turns);
  row("macro_f1", opt(r.macro_f1));
  row("weighted_f1", opt(r.weighted_f1));
  row("entropy", opt(r.entropy));
  row("entropy_base", r.entropy_base);
  return out.str();
}

}  // namespace principles
