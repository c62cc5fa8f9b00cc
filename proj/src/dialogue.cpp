#include "principles/dialogue.hpp"

#include "principles/error.hpp"
#include "principles/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace principles {

Domain::Domain(std::string name) : name_(std::move(name)) {
  require(!name_.empty(), "domain name must be non-empty");
}

void validate_seed(const ScenarioSeed& seed) {
  require(!seed.seed_id.empty(), "seed_id must be non-empty");
  require(!seed.domain.name().empty(), "seed " + seed.seed_id + ": domain must be set");
  require(!text::trim(seed.first_user_utterance).empty(),
          "seed " + seed.seed_id + ": first_user_utterance must be non-empty");
  for (const auto& field : seed.hidden_fields)
    require(seed.background.count(field) > 0,
            "seed " + seed.seed_id + ": hidden field '" + field + "' is not in the background");
  for (const auto& label : seed.gold_strategies)
    require(!text::trim(label).empty(), "seed " + seed.seed_id + ": gold strategy labels must be non-empty");
}

ScenarioSeed seed_from_json_line(const std::string& line) {
  auto j = nlohmann::json::parse(line);
  if (!j.is_object()) fail(ErrorCode::parse, "seed line is not a JSON object");
  ScenarioSeed seed;
  for (auto& [key, value] : j.items()) {
    if (key == "seed_id") seed.seed_id = value.get<std::string>();
    else if (key == "domain") seed.domain = Domain(value.get<std::string>());
    else if (key == "first_user_utterance") seed.first_user_utterance = value.get<std::string>();
    else if (key == "background") {
      for (auto& [bk, bv] : value.items())
        seed.background[bk] = bv.is_string() ? bv.get<std::string>() : bv.dump();
    } else if (key == "hidden_fields") seed.hidden_fields = value.get<std::vector<std::string>>();
    else if (key == "gold_strategies") seed.gold_strategies = value.get<std::vector<std::string>>();
    else fail(ErrorCode::parse, "unknown seed field '" + key + "'");
  }
  validate_seed(seed);
  return seed;
}

std::vector<ScenarioSeed> load_seeds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open seeds file " + path.string());
  std::vector<ScenarioSeed> seeds;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (text::trim(line).empty()) continue;
    try {
      seeds.push_back(seed_from_json_line(line));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return seeds;
}

std::string_view to_string(Role role) { return role == Role::agent ? "agent" : "user"; }

Utterance::Utterance(Role role_, std::string_view text_, int turn_index_)
    : role(role_), text(text::normalize_whitespace(text_)), turn_index(turn_index_) {
  require(!text.empty(), "utterance text must be non-empty");
  require(turn_index >= 1, "utterance turn_index must be >= 1");
}

DialogueState::DialogueState(ScenarioSeed seed) {
  validate_seed(seed);
  seed_ = std::make_shared<const ScenarioSeed>(std::move(seed));
}

DialogueState append_turn(const DialogueState& state, const Utterance& agent, const Utterance& user) {
  require(agent.role == Role::agent && user.role == Role::user, "append_turn expects an agent then a user utterance");
  if (agent.turn_index != state.current_turn() || user.turn_index != state.current_turn())
    fail(ErrorCode::precondition, "append_turn: utterance turn indices (" + std::to_string(agent.turn_index) + ", " +
                                      std::to_string(user.turn_index) + ") do not match current turn " +
                                      std::to_string(state.current_turn()));
  DialogueState next = state;
  next.history_.push_back(agent);
  next.history_.push_back(user);
  return next;
}

std::string serialize_state(const DialogueState& state, std::optional<int> window) {
  std::ostringstream out;
  out << user_tag << ' ' << text::normalize_whitespace(state.seed().first_user_utterance) << '\n';
  const auto& history = state.history();
  std::size_t first = 0;
  if (window && *window >= 0 && state.completed_turns() > *window) {
    int omitted = state.completed_turns() - *window;
    out << "[... " << omitted << " earlier turn" << (omitted == 1 ? "" : "s") << " omitted ...]\n";
    first = static_cast<std::size_t>(omitted) * 2;
  }
  for (std::size_t i = first; i < history.size(); ++i)
    out << (history[i].role == Role::agent ? agent_tag : user_tag) << ' ' << history[i].text << '\n';
  return out.str();
}

std::string render_background(const ScenarioSeed& seed, bool include_hidden) {
  std::string out;
  for (const auto& [key, value] : seed.background) {
    bool hidden = std::find(seed.hidden_fields.begin(), seed.hidden_fields.end(), key) != seed.hidden_fields.end();
    if (hidden && !include_hidden) continue;
    out += key + ": " + value + "\n";
  }
  return out;
}

const std::map<std::string, std::set<std::string>>& prompt_slot_table() {
  static const auto table = [] {
    const std::set<std::string> common{"domain", "background", "public_background", "history"};
    auto with = [&](std::initializer_list<const char*> extra) {
      auto s = common;
      for (auto* e : extra) s.insert(e);
      return s;
    };
    return std::map<std::string, std::set<std::string>>{
        {"rho_sigma", common},
        {"rho_a", with({"strategy"})},
        {"rho_u", with({"agent_utterance"})},
        {"rho_c", with({"agent_utterance", "user_utterance", "levels"})},
        {"rho_r", with({"failed_trials"})},
        {"rho_pi", with({"strategy", "agent_utterance", "user_utterance"})},
        {"rho_psi", with({"strategy", "agent_utterance", "user_utterance", "failed_trials"})},
        {"rho_nu", with({"principles", "count"})},
        {"rho_proactive", with({"catalog"})},
        {"rho_procot", with({"catalog"})},
        {"rho_icl_aif", common},
        {"rho_ane", common},
        {"rho_label", {"domain", "strategy", "catalog"}},
        {"rho_select", with({"principles", "k"})},
    };
  }();
  return table;
}

namespace {

struct Slot {
  const char* stem;
  PromptTemplate PromptSet::*member;
  bool required;
};

constexpr Slot prompt_files[] = {
    {"rho_sigma", &PromptSet::strategy, true},
    {"rho_a", &PromptSet::agent, true},
    {"rho_u", &PromptSet::user, true},
    {"rho_c", &PromptSet::critic, true},
    {"rho_r", &PromptSet::revision, true},
    {"rho_pi", &PromptSet::success_principle, true},
    {"rho_psi", &PromptSet::failure_principle, true},
    {"rho_nu", &PromptSet::reinterpretation, true},
    {"rho_proactive", &PromptSet::proactive, false},
    {"rho_procot", &PromptSet::procot, false},
    {"rho_icl_aif", &PromptSet::icl_aif, false},
    {"rho_ane", &PromptSet::ask_an_expert, false},
    {"rho_label", &PromptSet::label_mapping, false},
    {"rho_select", &PromptSet::selection, false},
};

}  // namespace

void validate_prompt_set(const PromptSet& prompts) {
  const auto& table = prompt_slot_table();
  for (const auto& slot : prompt_files) {
    const PromptTemplate& t = prompts.*(slot.member);
    if (t.empty()) {
      if (slot.required) fail(ErrorCode::config, std::string("missing prompt template ") + slot.stem);
      continue;
    }
    t.validate_slots(table.at(slot.stem), slot.stem);
  }
}

PromptSet load_prompt_set(const std::filesystem::path& dir) {
  PromptSet prompts;
  for (const auto& slot : prompt_files) {
    auto path = dir / (std::string(slot.stem) + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      prompts.*(slot.member) = PromptTemplate(buf.str());
    } catch (const Error& e) {
      fail(ErrorCode::config, path.string() + ": " + e.what());
    }
  }
  validate_prompt_set(prompts);
  return prompts;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) fail(ErrorCode::io, "prompt directory not found: " + root.string());
  PromptLibrary lib;
  if (std::filesystem::exists(root / "rho_a.txt")) lib.set_default(load_prompt_set(root));
  std::vector<std::filesystem::path> subdirs;
  for (const auto& entry : std::filesystem::directory_iterator(root))
    if (entry.is_directory()) subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& dir : subdirs) lib.set(Domain(dir.filename().string()), load_prompt_set(dir));
  return lib;
}

void PromptLibrary::set(const Domain& domain, PromptSet prompts) { by_domain_[domain] = std::move(prompts); }

void PromptLibrary::set_default(PromptSet prompts) { fallback_ = std::move(prompts); }

const PromptSet& PromptLibrary::for_domain(const Domain& domain) const {
  auto it = by_domain_.find(domain);
  if (it != by_domain_.end()) return it->second;
  if (fallback_) return *fallback_;
  fail(ErrorCode::config, "no prompt templates for domain '" + domain.name() + "'");
}

PromptArgs base_prompt_args(const DialogueState& state) {
  return {
      {"domain", state.seed().domain.name()},
      {"background", render_background(state.seed(), true)},
      {"public_background", render_background(state.seed(), false)},
      {"history", serialize_state(state)},
  };
}

namespace {

GenerationRequest role_request(std::string prompt, const RoleSettings& settings, std::string purpose) {
  GenerationRequest req;
  req.prompt_text = std::move(prompt);
  req.temperature = settings.temperature;
  req.max_output_tokens = settings.max_output_tokens;
  req.purpose = std::move(purpose);
  return req;
}

Utterance agent_call(const SimulationContext& ctx, const DialogueState& state, std::string_view strategy) {
  auto args = base_prompt_args(state);
  args["strategy"] = std::string(strategy);
  auto reply = complete_one(ctx.gateway, role_request(ctx.prompts.agent.render(args), ctx.settings.agent, "agent"));
  return Utterance(Role::agent, reply, state.current_turn());
}

}  // namespace

Utterance agent_respond(const SimulationContext& ctx, const DialogueState& state, std::string_view strategy) {
  require(!text::trim(strategy).empty(), "agent_respond: strategy must be non-empty");
  return agent_call(ctx, state, strategy);
}

Utterance agent_respond_unguided(const SimulationContext& ctx, const DialogueState& state) {
  return agent_call(ctx, state, "");
}

Utterance user_respond(const SimulationContext& ctx, const DialogueState& state, const Utterance& agent_utt) {
  require(agent_utt.role == Role::agent, "user_respond expects an agent utterance");
  auto args = base_prompt_args(state);
  args["agent_utterance"] = agent_utt.text;
  auto reply = complete_one(ctx.gateway, role_request(ctx.prompts.user.render(args), ctx.settings.user, "user"));
  return Utterance(Role::user, reply, state.current_turn());
}

}  // namespace principles
