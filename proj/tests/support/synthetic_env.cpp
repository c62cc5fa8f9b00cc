#include "synthetic_env.hpp"

#include "principles/text.hpp"

#include <regex>

namespace synthetic {

using namespace principles;

std::filesystem::path source_dir() { return PRINCIPLES_SOURCE_DIR; }

PromptLibrary prompts() { return PromptLibrary::load(source_dir() / "data" / "prompts"); }

const std::vector<Family>& families() {
  static const std::vector<Family> f{
      {"exams", {"exam", "grades", "study"}, "breathing"},
      {"work", {"boss", "deadline", "office"}, "boundaries"},
      {"breakup", {"partner", "breakup", "lonely"}, "journaling"},
      {"health", {"doctor", "diagnosis", "hospital"}, "information"},
      {"money", {"debt", "rent", "bills"}, "budgeting"},
  };
  return f;
}

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (const auto& f : families()) out.push_back(f.keyword);
    for (const char* d : {"distraction", "exercise", "meditation"}) out.push_back(d);
    return out;
  }();
  return v;
}

namespace {

const char* names[] = {"Avery", "Blake", "Casey", "Devon", "Emery", "Finley", "Gray", "Harper",
                       "Indy",  "Jules", "Kai",   "Logan", "Morgan", "Noel",  "Oakley", "Parker"};

ScenarioSeed make_seed(const std::string& id, const std::string& opening, std::string need) {
  ScenarioSeed s;
  s.seed_id = id;
  s.domain = Domain::emotional_support();
  s.background = {{"emotion", "anxiety"}, {"need", std::move(need)}};
  s.hidden_fields = {"need"};
  s.first_user_utterance = opening;
  return s;
}

// Text between `start` and the next `end` after it; empty when absent.
std::string between(const std::string& s, const std::string& start, const std::string& end) {
  auto a = s.find(start);
  if (a == std::string::npos) return {};
  a += start.size();
  auto b = s.find(end, a);
  return s.substr(a, b == std::string::npos ? std::string::npos : b - a);
}

std::string last_line_after(const std::string& s, const std::string& tag) {
  auto a = s.rfind(tag);
  if (a == std::string::npos) return {};
  a += tag.size();
  return s.substr(a, s.find('\n', a) - a);
}

int count(const std::string& s, const std::string& needle) {
  int n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + needle.size())) ++n;
  return n;
}

std::string critic_answer(const std::string& prompt) {
  int marks = count(prompt, progress_marker);
  if (marks >= 2) return "Yes, the Patient's issue has been solved.";
  if (marks == 1) return "No, but the Patient feels better.";
  return "No, the Patient feels the same.";
}

std::string guidance(const std::string& prompt) {
  return between(prompt, "Follow this guidance in your next reply:\n", "\nReply as");
}

std::string opening(const std::string& prompt) { return text::trim(between(prompt, "\nUser: ", "\n")); }

ScriptedRule rule(std::string purpose, ScriptedHandler handler) {
  ScriptedRule r;
  r.purpose = std::move(purpose);
  r.pattern = "";
  r.handler = std::move(handler);
  return r;
}

// Principle derivation shared by every environment: the When clause quotes the
// opening so that retrieval keys on the scenario's topic words.
void add_derivation_rules(std::vector<ScriptedRule>& rules) {
  rules.push_back(rule("success_principle", [](const GenerationRequest& r, int, std::uint64_t) {
    auto strategy = text::trim(between(r.prompt_text, "\nStrategy: ", "\n"));
    return "When the Patient says " + opening(r.prompt_text) + ", you should " + strategy +
           ", because it meets their need.";
  }));
  rules.push_back(rule("failure_principle", [](const GenerationRequest& r, int, std::uint64_t) {
    auto failed = text::trim(between(between(r.prompt_text, "Failed attempts:", "Successful attempt:"), "Strategy: ", "\n"));
    auto good = text::trim(between(r.prompt_text, "Successful attempt:\nStrategy: ", "\n"));
    return "When the Patient says " + opening(r.prompt_text) + ", you should " + good + ", rather than " + failed +
           ", because it meets their need.";
  }));
  rules.push_back(rule("reinterpretation", [](const GenerationRequest& r, int, std::uint64_t) {
    return text::trim(between(r.prompt_text, "learned in other conversations:\n", "\n\nRewrite"));
  }));
  rules.push_back(rule("critic", [](const GenerationRequest& r, int, std::uint64_t) { return critic_answer(r.prompt_text); }));
}

}  // namespace

std::vector<ScenarioSeed> family_seeds(int per_family, int offset) {
  std::vector<ScenarioSeed> seeds;
  for (int i = 0; i < per_family; ++i) {
    for (const auto& f : families()) {
      std::string name = names[static_cast<std::size_t>(offset + i) % std::size(names)];
      auto opening = name + " here. I keep thinking about my " + f.topic[0] + ", my " + f.topic[1] + " and my " +
                     f.topic[2] + " lately.";
      seeds.push_back(make_seed(f.name + "-" + std::to_string(offset + i), opening, f.keyword));
    }
  }
  return seeds;
}

ScriptedProviderConfig efficacy_provider(std::uint64_t rng_seed) {
  ScriptedProviderConfig cfg;
  cfg.embedding_rule = EmbeddingRule::bag_of_words;
  cfg.embedding_dimension = 256;
  cfg.rng_seed = rng_seed;
  const auto& vocab = vocabulary();

  cfg.rules.push_back(rule("strategy", [&vocab](const GenerationRequest&, int, std::uint64_t seed) {
    return "suggest " + vocab[seed % vocab.size()];
  }));
  cfg.rules.push_back(rule("revision", [&vocab](const GenerationRequest& r, int, std::uint64_t seed) {
    std::vector<std::string> untried;
    for (const auto& w : vocab)
      if (r.prompt_text.find("Strategy: suggest " + w + "\n") == std::string::npos) untried.push_back(w);
    if (untried.empty()) untried = vocab;
    return "suggest " + untried[seed % untried.size()];
  }));
  cfg.rules.push_back(rule("agent", [&vocab](const GenerationRequest& r, int, std::uint64_t seed) {
    auto g = guidance(r.prompt_text);
    std::size_t best = std::string::npos;
    std::string pick;
    for (const auto& w : vocab) {
      auto p = g.find(w);
      if (p < best) {
        best = p;
        pick = w;
      }
    }
    if (pick.empty()) pick = vocab[seed % vocab.size()];
    return "Maybe you could try " + pick + ".";
  }));
  cfg.rules.push_back(rule("user", [](const GenerationRequest& r, int, std::uint64_t) {
    auto need = text::trim(between(r.prompt_text, "need: ", "\n"));
    auto agent = last_line_after(r.prompt_text, "\nAgent: ");
    return !need.empty() && agent.find(need) != std::string::npos ? progress_marker : stuck_reply;
  }));
  add_derivation_rules(cfg.rules);
  return cfg;
}

ScriptedProviderConfig budget_provider() {
  ScriptedProviderConfig cfg;
  cfg.rules.push_back(rule("strategy", [](const GenerationRequest&, int, std::uint64_t) {
    return std::string("acknowledge the worry");
  }));
  cfg.rules.push_back(rule("agent", [](const GenerationRequest& r, int, std::uint64_t) {
    return "I hear you; " + text::trim(guidance(r.prompt_text)) + ".";
  }));
  cfg.rules.push_back(rule("user", [](const GenerationRequest&, int, std::uint64_t) { return progress_marker; }));
  add_derivation_rules(cfg.rules);
  return cfg;
}

ScriptedProviderConfig revision_provider(int succeed_on) {
  ScriptedProviderConfig cfg;
  cfg.rules.push_back(rule("strategy", [](const GenerationRequest&, int, std::uint64_t) {
    return std::string("try approach alpha");
  }));
  cfg.rules.push_back(rule("revision", [succeed_on](const GenerationRequest& r, int, std::uint64_t) {
    int attempts = count(r.prompt_text, "Attempt ");
    if (attempts == succeed_on) return std::string("use the GOOD approach");
    return "try approach variant " + std::to_string(attempts);
  }));
  cfg.rules.push_back(rule("agent", [](const GenerationRequest& r, int, std::uint64_t) {
    return "I will " + text::trim(guidance(r.prompt_text)) + " now.";
  }));
  cfg.rules.push_back(rule("user", [](const GenerationRequest& r, int, std::uint64_t) {
    auto agent = last_line_after(r.prompt_text, "\nAgent: ");
    return agent.find("GOOD") != std::string::npos ? progress_marker : stuck_reply;
  }));
  add_derivation_rules(cfg.rules);
  return cfg;
}

std::vector<ScenarioSeed> plain_seeds(int n) {
  std::vector<ScenarioSeed> seeds;
  for (int i = 0; i < n; ++i)
    seeds.push_back(make_seed("seed-" + std::to_string(i), std::string(names[static_cast<std::size_t>(i) % std::size(names)]) +
                                                                " here. Work has been overwhelming (case " +
                                                                std::to_string(i) + ").",
                              "rest"));
  return seeds;
}

std::vector<std::string> CountingGateway::complete(const GenerationRequest& request) {
  {
    std::lock_guard lock(mutex_);
    prompts_[request.purpose].push_back(request.prompt_text);
  }
  return inner_.complete(request);
}

EmbeddingVector CountingGateway::embed(std::string_view text) {
  {
    std::lock_guard lock(mutex_);
    ++embeds_;
  }
  return inner_.embed(text);
}

int CountingGateway::calls(const std::string& purpose) const {
  std::lock_guard lock(mutex_);
  auto it = prompts_.find(purpose);
  return it == prompts_.end() ? 0 : static_cast<int>(it->second.size());
}

int CountingGateway::embeds() const {
  std::lock_guard lock(mutex_);
  return embeds_;
}

std::vector<std::string> CountingGateway::prompts_for(const std::string& purpose) const {
  std::lock_guard lock(mutex_);
  auto it = prompts_.find(purpose);
  return it == prompts_.end() ? std::vector<std::string>{} : it->second;
}

}  // namespace synthetic
