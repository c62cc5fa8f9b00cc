#include "principles/episode.hpp"

#include "principles/error.hpp"
#include "principles/text.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace principles {

std::string_view to_string(EpisodeOutcome o) {
  switch (o) {
    case EpisodeOutcome::goal_completed: return "goal_completed";
    case EpisodeOutcome::exhausted: return "exhausted";
    case EpisodeOutcome::aborted: return "aborted";
  }
  return "aborted";
}

EpisodeOutcome episode_outcome_from_string(std::string_view s) {
  for (auto o : {EpisodeOutcome::goal_completed, EpisodeOutcome::exhausted, EpisodeOutcome::aborted})
    if (to_string(o) == s) return o;
  fail(ErrorCode::parse, "unknown episode outcome '" + std::string(s) + "'");
}

nlohmann::json to_json(const Trial& t) {
  return {{"strategy", t.strategy},
          {"agent", t.agent_utt.text},
          {"user", t.user_utt.text},
          {"turn_index", t.agent_utt.turn_index},
          {"reward", t.reward}};
}

Trial trial_from_json(const nlohmann::json& j) {
  int turn = j.at("turn_index").get<int>();
  return Trial{j.at("strategy").get<std::string>(), Utterance(Role::agent, j.at("agent").get<std::string>(), turn),
               Utterance(Role::user, j.at("user").get<std::string>(), turn), j.at("reward").get<double>()};
}

nlohmann::json to_json(const TurnRecord& r) {
  nlohmann::json j = {{"kind", "turn"},
                      {"turn_index", r.turn_index},
                      {"previous_reward", r.previous_reward},
                      {"status", r.status ? 1 : 0},
                      {"accepted", to_json(r.accepted)}};
  auto failed = nlohmann::json::array();
  for (const auto& t : r.failed_trials) failed.push_back(to_json(t));
  j["failed_trials"] = std::move(failed);
  if (r.initial) j["initial"] = to_json(*r.initial);
  if (r.derived_principle_id) j["derived_principle_id"] = *r.derived_principle_id;
  if (r.note) j["note"] = *r.note;
  if (r.predicted_label) j["predicted_label"] = *r.predicted_label;
  if (r.gold_label) j["gold_label"] = *r.gold_label;
  if (!r.planner_trace.is_null()) j["planner_trace"] = r.planner_trace;
  return j;
}

TurnRecord turn_record_from_json(const nlohmann::json& j) {
  TurnRecord r{j.at("turn_index").get<int>(), j.at("previous_reward").get<double>(), trial_from_json(j.at("accepted")),
               j.at("status").get<int>() != 0, {}, std::nullopt, std::nullopt, std::nullopt, std::nullopt,
               std::nullopt, nullptr};
  for (const auto& t : j.value("failed_trials", nlohmann::json::array())) r.failed_trials.push_back(trial_from_json(t));
  if (j.contains("initial")) r.initial = trial_from_json(j.at("initial"));
  if (j.contains("derived_principle_id")) r.derived_principle_id = j.at("derived_principle_id").get<std::string>();
  if (j.contains("note")) r.note = j.at("note").get<std::string>();
  if (j.contains("predicted_label")) r.predicted_label = j.at("predicted_label").get<std::string>();
  if (j.contains("gold_label")) r.gold_label = j.at("gold_label").get<std::string>();
  if (j.contains("planner_trace")) r.planner_trace = j.at("planner_trace");
  return r;
}

void write_episode_log(const EpisodeLog& log, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write episode log " + path.string());
  out << nlohmann::json{{"kind", "episode"}, {"seed_id", log.seed_id}, {"domain", log.domain.name()}, {"mode", log.mode}}
             .dump()
      << '\n';
  for (const auto& turn : log.turns) out << to_json(turn).dump() << '\n';
  nlohmann::json outcome = {{"kind", "outcome"}, {"outcome", to_string(log.outcome)}, {"total_turns", log.total_turns()}};
  if (log.error) outcome["error"] = *log.error;
  out << outcome.dump() << '\n';
  if (!out) fail(ErrorCode::io, "failed while writing episode log " + path.string());
}

EpisodeLog read_episode_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open episode log " + path.string());
  EpisodeLog log;
  bool saw_header = false, saw_outcome = false;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      auto kind = j.at("kind").get<std::string>();
      if (kind == "episode") {
        log.seed_id = j.at("seed_id").get<std::string>();
        log.domain = Domain(j.at("domain").get<std::string>());
        log.mode = j.value("mode", std::string());
        saw_header = true;
      } else if (kind == "turn") {
        log.turns.push_back(turn_record_from_json(j));
      } else if (kind == "outcome") {
        log.outcome = episode_outcome_from_string(j.at("outcome").get<std::string>());
        if (j.contains("error")) log.error = j.at("error").get<std::string>();
        saw_outcome = true;
      } else {
        fail(ErrorCode::parse, "unknown record kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!saw_header || !saw_outcome) fail(ErrorCode::parse, path.string() + ": incomplete episode log");
  return log;
}

void write_episode_logs(const std::vector<EpisodeLog>& logs, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < logs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "episode-%04zu.jsonl", i + 1);
    write_episode_log(logs[i], dir / name);
  }
}

std::vector<EpisodeLog> read_episode_logs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorCode::io, "log directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("episode-", 0) == 0 && entry.path().extension() == ".jsonl")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<EpisodeLog> logs;
  for (const auto& f : files) logs.push_back(read_episode_log(f));
  return logs;
}

}  // namespace principles
