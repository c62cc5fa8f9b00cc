// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "principles/constructor.hpp"
#include "principles/error.hpp"
#include "principles/evaluator.hpp"
#include "principles/pca.hpp"

#include "no_network.hpp"
#include "oracles.hpp"
#include "synthetic_env.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

using namespace principles;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int number, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o{false, ""};
  auto start = std::chrono::steady_clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << number << ": " << name << " (" << o.detail
            << "; " << std::fixed << std::setprecision(2) << secs << " s)" << std::endl;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

struct Env {
  explicit Env(ScriptedProviderConfig cfg) : scripted(std::move(cfg)), gateway(scripted) {}
  ScriptedGateway scripted;
  synthetic::CountingGateway gateway;
  PromptLibrary prompts = synthetic::prompts();
  CriticScales scales;
  Environment env() { return {gateway, prompts, scales}; }
};

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

// ---- 5: revision and backtracking -------------------------------------------------

struct RevisionRun {
  std::optional<ConstructionResult> fail_twice;
  std::optional<ConstructionResult> always_fail;
  int always_fail_revisions = 0;
  std::string turn_two_history;
};

RevisionRun revision_scenarios() {
  RevisionRun out;
  ConstructionConfig cfg;
  cfg.episode_budget = 1;
  cfg.critic.max_turns = 1;
  auto seeds = synthetic::plain_seeds(1);
  {
    Env e(synthetic::revision_provider(3));
    out.fail_twice.emplace(construct(e.env(), seeds, cfg));
  }
  {
    Env e(synthetic::revision_provider(0));
    out.always_fail.emplace(construct(e.env(), seeds, cfg));
    out.always_fail_revisions = e.gateway.calls("revision");
  }
  {
    // A second turn shows which utterances the first turn left in the transcript.
    Env e(synthetic::revision_provider(3));
    auto two = cfg;
    two.critic.max_turns = 2;
    construct(e.env(), seeds, two);
    auto agent_prompts = e.gateway.prompts_for("agent");
    if (agent_prompts.size() > 4) {
      // Keep only the transcript; the guidance section belongs to turn 2.
      const auto& prompt = agent_prompts[4];
      const std::string open = "Conversation so far:\n";
      auto a = prompt.find(open);
      auto b = prompt.find("\nFollow this guidance", a);
      if (a != std::string::npos) out.turn_two_history = prompt.substr(a + open.size(), b - a - open.size());
    }
  }
  return out;
}

Outcome check_revision(const RevisionRun& r) {
  const auto& ok = *r.fail_twice;
  if (ok.store.size() != 1) return {false, "fail-twice stored " + std::to_string(ok.store.size()) + " principles"};
  if (ok.store.at(0).provenance != Provenance::revision) return {false, "principle is not revision provenance"};
  const auto& t = ok.logs.at(0).turns.at(0);
  if (t.failed_trials.size() != 2) return {false, "|F_t| = " + std::to_string(t.failed_trials.size())};
  const auto& h = r.turn_two_history;
  if (h.find("Agent: I will use the GOOD approach now.") == std::string::npos)
    return {false, "accepted utterance missing from the transcript"};
  if (h.find("variant") != std::string::npos || h.find("approach alpha") != std::string::npos)
    return {false, "a failed utterance leaked into the transcript"};

  const auto& bad = *r.always_fail;
  const auto& bt = bad.logs.at(0).turns.at(0);
  if (r.always_fail_revisions != 3 || bt.failed_trials.size() != 3)
    return {false, "always-fail made " + std::to_string(r.always_fail_revisions) + " attempts"};
  if (!bad.store.empty()) return {false, "always-fail stored principles"};
  if (bt.accepted.strategy != "try approach alpha" || bt.status) return {false, "original turn not appended"};
  return {true, "|F_t|=2, one revision principle, backtracked; always-fail: 3 attempts, 0 principles"};
}

// ---- 6: budget ---------------------------------------------------------------------

ConstructionResult budget_run() {
  Env e(synthetic::budget_provider());
  ConstructionConfig cfg;
  cfg.episode_budget = 50;
  return construct(e.env(), synthetic::plain_seeds(50), cfg);
}

Outcome check_budget(const ConstructionResult& r, double seconds) {
  std::size_t transitions = 0;
  int max_turns = 0;
  for (const auto& log : r.logs) {
    max_turns = std::max(max_turns, log.total_turns());
    for (const auto& t : log.turns) transitions += t.status;
  }
  std::string d = std::to_string(r.logs.size()) + " episodes, " + std::to_string(r.store.size()) +
                  " principles, " + std::to_string(transitions) + " success transitions, " + fmt(seconds) + " s";
  bool pass = r.logs.size() == 50 && max_turns <= 10 && r.store.size() == transitions && r.store.size() == 100 &&
              seconds < 10.0;
  return {pass, d};
}

// ---- 8: efficacy -------------------------------------------------------------------

struct EfficacyRun {
  std::optional<ConstructionResult> built;
  std::optional<EvalResult> principles_mode;
  std::optional<EvalResult> standard_mode;
};

EfficacyRun efficacy_run() {
  EfficacyRun out;
  Env e(synthetic::efficacy_provider(2024));
  auto train = synthetic::family_seeds(4, 0);
  auto held_out = synthetic::family_seeds(4, 4);
  ConstructionConfig ccfg;
  ccfg.episode_budget = static_cast<int>(train.size());
  ccfg.rng_seed = 2024;
  out.built.emplace(construct(e.env(), train, ccfg));

  EvalConfig cfg;
  cfg.planner.rng_seed = 2024;
  out.principles_mode.emplace(run_eval(e.env(), held_out, cfg, &out.built->store));
  cfg.planner.mode = PlannerMode::standard;
  out.standard_mode.emplace(run_eval(e.env(), held_out, cfg, nullptr));
  return out;
}

Outcome check_efficacy(const EfficacyRun& r, double seconds) {
  const auto& p = r.principles_mode->report;
  const auto& s = r.standard_mode->report;
  std::string d = "SR principles " + fmt(p.success_rate) + " vs standard " + fmt(s.success_rate) + ", AT " +
                  fmt(p.average_turns) + " vs " + fmt(s.average_turns) + ", " +
                  std::to_string(r.built->store.size()) + " principles, " + fmt(seconds) + " s";
  bool pass = p.episodes == 20 && s.episodes == 20 && p.success_rate - s.success_rate >= 0.3 &&
              p.average_turns < s.average_turns && seconds < 30.0;
  return {pass, d};
}

// ---- 9: online construction --------------------------------------------------------

EvalResult online_run() {
  Env e(synthetic::efficacy_provider(99));
  EvalConfig cfg;
  cfg.online_construction = true;
  PrincipleStore empty(e.gateway.embedding_dimension(), e.gateway.provider_tag());
  return run_eval(e.env(), synthetic::family_seeds(2, 0), cfg, &empty);
}

Outcome check_online(const EvalResult& r) {
  if (!r.live_store) return {false, "no live store"};
  int success = 0, revision = 0;
  for (const auto& p : r.live_store->snapshot()) (p.provenance == Provenance::success ? success : revision)++;
  std::size_t status_turns = 0;
  for (const auto& log : r.logs)
    for (const auto& t : log.turns) status_turns += t.status;
  return {success > 0 && revision == 0 && static_cast<std::size_t>(success) == status_turns,
          std::to_string(success) + " success, " + std::to_string(revision) + " revision principles"};
}

// ---- artifacts for the determinism check -------------------------------------------

void dump(const fs::path& dir, const ConstructionResult& r) {
  fs::create_directories(dir);
  r.store.save(dir / "store.jsonl");
  write_episode_logs(r.logs, dir / "logs");
  write_text(dir / "summary.txt", r.summary.to_line() + "\n");
}

void dump(const fs::path& dir, const EvalResult& r) {
  fs::create_directories(dir);
  write_episode_logs(r.logs, dir / "logs");
  write_text(dir / "metrics.json", to_json(r.report).dump(2) + "\n");
  if (r.live_store) r.live_store->save(dir / "live_store.jsonl");
}

void run_artifacts(const fs::path& root) {
  auto rev = revision_scenarios();
  dump(root / "c5_fail_twice", *rev.fail_twice);
  dump(root / "c5_always_fail", *rev.always_fail);
  dump(root / "c6", budget_run());
  auto eff = efficacy_run();
  dump(root / "c8_construct", *eff.built);
  dump(root / "c8_principles", *eff.principles_mode);
  dump(root / "c8_standard", *eff.standard_mode);
  dump(root / "c9", online_run());
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    files[fs::relative(entry.path(), root).string()] = {std::istreambuf_iterator<char>(in), {}};
  }
  return files;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

}  // namespace

int main() {
  criterion(1, "reward mapping table", [] {
    const std::vector<double> expected{-1.0, -0.5, 0.5, 1.0};
    int checked = 0;
    for (const auto& scale : {FeedbackScale::emotional_support(), FeedbackScale::persuasion()}) {
      if (scale.levels().size() != 4) return Outcome{false, "scale has " + std::to_string(scale.levels().size()) + " levels"};
      for (std::size_t i = 0; i < 4; ++i) {
        double v = map_feedback_to_reward(scale, {scale.domain(), scale.levels()[i].name});
        if (v != expected[i]) return Outcome{false, scale.levels()[i].name + " maps to " + fmt(v)};
        ++checked;
      }
    }
    const auto es_scale = FeedbackScale::emotional_support();
    const auto& es = es_scale.levels();
    bool names = es[0].name == "worse" && es[1].name == "same" && es[2].name == "better" && es[3].name == "solved";
    return Outcome{names && checked == 8, std::to_string(checked) + " (domain, level) pairs"};
  });

  criterion(2, "status fuzz", [] {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double grid[] = {-1.0, -0.5, 0.5, 1.0};
    int wrong = 0;
    for (int i = 0; i < 10000; ++i) {
      // Half the pairs come from the reward grid so that equal rewards occur often.
      double a = i % 2 ? u(rng) : grid[rng() % 4];
      double b = i % 2 ? u(rng) : grid[rng() % 4];
      if (turn_status(a, b) != (a > b)) ++wrong;
    }
    return Outcome{wrong == 0, "10000 pairs, " + std::to_string(wrong) + " mismatches"};
  });

  criterion(3, "retrieval exactness", [] {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> n01;
    PrincipleStore store(32, "acceptance");
    std::vector<oracle::Point> points;
    for (int i = 0; i < 500; ++i) {
      oracle::Point p(32);
      if (i % 50 == 49) p = points[static_cast<std::size_t>(i - 7)];  // exact duplicates exercise tie-breaking
      else
        for (auto& x : p) x = n01(rng);
      Principle pr;
      pr.clauses = {"w" + std::to_string(i), "s", std::nullopt, "b"};
      pr.when_embedding = Eigen::Map<const Eigen::VectorXd>(p.data(), 32);
      store.add(pr);
      points.push_back(p);
    }
    int mismatches = 0;
    for (int q = 0; q < 50; ++q) {
      oracle::Point query(32);
      if (q % 10 == 0) query = points[static_cast<std::size_t>(q * 7)];
      else
        for (auto& x : query) x = n01(rng);
      for (int k : {1, 3, 9}) {
        auto got = store.knn_search(Eigen::Map<const Eigen::VectorXd>(query.data(), 32), k);
        auto want = oracle::knn(points, query, static_cast<std::size_t>(k));
        std::vector<std::string> got_ids, want_ids;
        for (const auto& h : got.hits) got_ids.push_back(h.principle.id);
        for (auto i : want) want_ids.push_back(store.at(i).id);
        if (got_ids != want_ids) ++mismatches;
      }
    }
    return Outcome{mismatches == 0, "150 searches, " + std::to_string(mismatches) + " mismatches"};
  });

  criterion(4, "principle round trip", [] {
    std::mt19937_64 rng(4);
    const std::vector<std::string> words{"the", "patient", "feels", "anxious", "about", "work", "suggest", "a",
                                         "short", "walk", "listen", "closely", "it", "builds", "trust", "donation",
                                         "persuadee", "hesitates", "share", "impact", "stories", "ask", "open"};
    auto phrase = [&] {
      std::string s;
      int n = 2 + static_cast<int>(rng() % 8);
      for (int i = 0; i < n; ++i) s += (i ? " " : "") + words[rng() % words.size()];
      return s;
    };
    int bad = 0;
    for (int i = 0; i < 100; ++i) {
      PrincipleClauses c{phrase(), phrase(), i % 2 ? std::optional<std::string>(phrase()) : std::nullopt, phrase()};
      if (parse_principle(render_principle(c)) != c) ++bad;
    }
    auto example = parse_principle(
        "When the patient plans to express their feelings in a message and desires a constructive dialogue with a "
        "friend, you should guide them to explore and identify the specific emotions they want to convey and how "
        "these emotions might aid in rebuilding the connection  rather than suggesting preparatory actions such as "
        "writing exercises or mindfulness techniques,  because exploring and articulating specific emotions creates "
        "a more empathetic dialogue and enhances the authenticity and effectiveness of the communication.");
    bool four = example.rather_than.has_value() && !example.when.empty() && !example.you_should.empty() &&
                !example.because.empty();
    return Outcome{bad == 0 && four, std::to_string(100 - bad) + "/100 identical, example has " +
                                         std::string(four ? "4" : "<4") + " clauses"};
  });

  criterion(5, "constructor revision and backtracking", [] { return check_revision(revision_scenarios()); });

  criterion(6, "budget run", [] {
    auto start = std::chrono::steady_clock::now();
    auto r = budget_run();
    return check_budget(r, seconds_since(start));
  });

  criterion(7, "metrics oracles", [] {
    std::map<std::string, long> uniform;
    for (int i = 0; i < 8; ++i) uniform["L" + std::to_string(i)] = 3;
    bool ent = std::abs(entropy(uniform) - std::log(8.0)) <= 1e-9 && entropy({{"only", 9}}) == 0.0;
    std::mt19937_64 rng(7);
    const char* labels[] = {"a", "b", "c", "d", "e", "f"};
    int f1_bad = 0;
    for (int t = 0; t < 200; ++t) {
      std::vector<LabelPair> pairs;
      int n = 1 + static_cast<int>(rng() % 80);
      auto vocab = 2 + rng() % 5;
      for (int i = 0; i < n; ++i) pairs.emplace_back(labels[rng() % vocab], labels[rng() % vocab]);
      auto o = oracle::confusion_f1(pairs);
      if (std::abs(macro_f1(pairs) - o.macro) > 1e-9 || std::abs(weighted_f1(pairs) - o.weighted) > 1e-9) ++f1_bad;
    }
    auto episode = [](int turns, EpisodeOutcome outcome) {
      EpisodeLog log;
      log.seed_id = "fixture";
      log.outcome = outcome;
      for (int i = 1; i <= turns; ++i) {
        TurnRecord r{.turn_index = i, .previous_reward = 0.0, .accepted = {"s", Utterance(Role::agent, "a", i), Utterance(Role::user, "u", i), 0.0}};
        log.turns.push_back(r);
      }
      return log;
    };
    auto report = compute_metrics({episode(3, EpisodeOutcome::goal_completed),
                                   episode(5, EpisodeOutcome::goal_completed), episode(10, EpisodeOutcome::exhausted),
                                   episode(10, EpisodeOutcome::exhausted)});
    bool srat = report.success_rate == 0.5 && report.average_turns == 7.0;
    return Outcome{ent && f1_bad == 0 && srat, "entropy " + std::string(ent ? "ok" : "wrong") + ", F1 mismatches " +
                                                   std::to_string(f1_bad) + "/200, SR " + fmt(report.success_rate) +
                                                   " AT " + fmt(report.average_turns)};
  });

  criterion(8, "synthetic efficacy", [] {
    auto start = std::chrono::steady_clock::now();
    auto first = efficacy_run();
    double secs = seconds_since(start);
    auto second = efficacy_run();
    auto o = check_efficacy(first, secs);
    bool same = to_json(first.principles_mode->report) == to_json(second.principles_mode->report) &&
                to_json(first.standard_mode->report) == to_json(second.standard_mode->report);
    if (!same) return Outcome{false, o.detail + ", reruns differ"};
    return o;
  });

  criterion(9, "online construction", [] { return check_online(online_run()); });

  criterion(10, "pca", [] {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> n01;
    const int d = 16;
    // Orthonormal u, v spanning the plane plus an offset.
    Eigen::VectorXd u(d), v(d), c(d);
    for (int i = 0; i < d; ++i) u(i) = n01(rng), v(i) = n01(rng), c(i) = n01(rng);
    u.normalize();
    v = (v - v.dot(u) * u).normalized();
    PrincipleStore store(d, "acceptance");
    std::vector<Eigen::VectorXd> points;
    for (int i = 0; i < 60; ++i) {
      Eigen::VectorXd p = c + 3.0 * n01(rng) * u + n01(rng) * v;
      Principle pr;
      pr.clauses = {"w" + std::to_string(i), "s", std::nullopt, "b"};
      pr.when_embedding = p;
      store.add(pr);
      points.push_back(p);
    }
    auto proj = pca_project(store, 2);
    double worst = 0;
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j) {
        const auto& a = proj.points[i].coordinates;
        const auto& b = proj.points[j].coordinates;
        double projected = std::hypot(a[0] - b[0], a[1] - b[1]);
        worst = std::max(worst, std::abs(projected - (points[i] - points[j]).norm()));
      }

    // Reconstruction error of a full-rank corpus against power iteration:
    // the mean squared residual equals the trace minus the kept eigenvalues.
    Eigen::MatrixXd x(80, 6);
    std::vector<oracle::Point> rows;
    for (int i = 0; i < 80; ++i) {
      oracle::Point row;
      for (int j = 0; j < 6; ++j) {
        x(i, j) = n01(rng) * (6 - j);
        row.push_back(x(i, j));
      }
      rows.push_back(row);
    }
    auto cov = oracle::covariance(rows);
    double trace = 0;
    for (int j = 0; j < 6; ++j) trace += cov[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)];
    auto top = oracle::top_eigenvalues(cov, 2);
    double expected = trace - top[0] - top[1];
    auto r = pca(x, 2);
    double err_gap = std::abs(r.reconstruction_error - expected);
    // The planar corpus reconstructs exactly from two axes.
    Eigen::MatrixXd plane(static_cast<Eigen::Index>(points.size()), d);
    for (std::size_t i = 0; i < points.size(); ++i) plane.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
    double planar_error = pca(plane, 2).reconstruction_error;
    return Outcome{worst <= 1e-9 && err_gap <= 1e-6 && planar_error <= 1e-9,
                   "max distance error " + fmt(worst) + ", reconstruction gap " + fmt(err_gap) +
                       ", planar residual " + fmt(planar_error)};
  });

  criterion(11, "determinism and isolation", [] {
    auto base = fs::temp_directory_path() / "principles_acceptance";
    fs::remove_all(base);
    run_artifacts(base / "run1");
    run_artifacts(base / "run2");
    auto a = read_tree(base / "run1");
    auto b = read_tree(base / "run2");
    int differing = 0;
    for (const auto& [name, content] : a) {
      auto it = b.find(name);
      if (it == b.end() || it->second != content) ++differing;
    }
    if (a.size() != b.size()) ++differing;
    auto sockets = testsupport::socket_calls();
    auto connects = testsupport::connect_calls();
    fs::remove_all(base);
    return Outcome{differing == 0 && sockets == 0 && connects == 0 && !a.empty(),
                   std::to_string(a.size()) + " files compared, " + std::to_string(differing) + " differ, " +
                       std::to_string(sockets) + " sockets opened"};
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
