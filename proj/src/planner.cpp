#include "principles/planner.hpp"

#include "principles/error.hpp"
#include "principles/text.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <sstream>

namespace principles {

namespace {

constexpr std::pair<PlannerMode, std::string_view> mode_names[] = {
    {PlannerMode::principles, "principles"}, {PlannerMode::standard, "standard"},
    {PlannerMode::proactive, "proactive"},   {PlannerMode::procot, "procot"},
    {PlannerMode::icl_aif, "icl_aif"},       {PlannerMode::ask_an_expert, "ask_an_expert"},
};

GenerationRequest planner_request(const SimulationContext& ctx, std::string prompt, std::string purpose) {
  GenerationRequest req;
  req.prompt_text = std::move(prompt);
  req.temperature = ctx.settings.planner.temperature;
  req.max_output_tokens = ctx.settings.planner.max_output_tokens;
  req.purpose = std::move(purpose);
  return req;
}

std::string numbered(const std::vector<std::string>& lines) {
  std::ostringstream out;
  for (std::size_t i = 0; i < lines.size(); ++i) out << i + 1 << ". " << lines[i] << (i + 1 < lines.size() ? "\n" : "");
  return out.str();
}

// Applies the presentation format when the sentence parses; raw text otherwise.
std::string present(const std::string& sentence, PrincipleFormat format) {
  try {
    return render_principle(parse_principle(sentence), format);
  } catch (const Error&) {
    return sentence;
  }
}

std::string extract_label(std::string_view output) {
  std::string pick;
  for (const auto& line : text::split_lines(output)) {
    auto s = text::trim(line);
    if (s.empty()) continue;
    if (text::starts_with_ci(s, "Strategy:")) {
      pick = text::trim(s.substr(9));
      break;
    }
    pick = s;
  }
  pick = strip_list_marker(pick);
  while (!pick.empty() && (pick.back() == '.' || pick.back() == '"' || pick.back() == ']')) pick.pop_back();
  while (!pick.empty() && (pick.front() == '"' || pick.front() == '[')) pick.erase(pick.begin());
  return text::trim(pick);
}

nlohmann::json hits_json(const RetrievalResult& r) {
  auto arr = nlohmann::json::array();
  for (const auto& h : r.hits) arr.push_back({{"id", h.principle.id}, {"distance", h.distance}});
  return arr;
}

}  // namespace

std::string_view to_string(PlannerMode m) {
  for (const auto& [mode, name] : mode_names)
    if (mode == m) return name;
  return "unknown";
}

PlannerMode planner_mode_from_string(std::string_view s) {
  for (const auto& [mode, name] : mode_names)
    if (name == s) return mode;
  fail(ErrorCode::config, "unknown planner mode '" + std::string(s) + "'");
}

void PlannerConfig::validate() const {
  if (k < 1) fail(ErrorCode::config, "planner k must be >= 1");
  if (retrieval_window && *retrieval_window < 1) fail(ErrorCode::config, "retrieval_window must be >= 1");
  if (selection_cap < 1) fail(ErrorCode::config, "selection_cap must be >= 1");
  if (icl_aif_refresh < 1) fail(ErrorCode::config, "icl_aif_refresh must be >= 1");
  if ((mode == PlannerMode::proactive || mode == PlannerMode::procot) && !catalog)
    fail(ErrorCode::config, std::string(to_string(mode)) + " mode requires a strategy catalog");
}

RetrievalResult retrieve(Gateway& gateway, const DialogueState& state, const PrincipleStore& store,
                         const PlannerConfig& cfg) {
  if (store.empty()) return {};
  auto query = gateway.embed(serialize_state(state, cfg.retrieval_window));
  return store.knn_search(query, cfg.k);
}

std::map<int, std::string> parse_numbered_list(std::string_view text) {
  std::map<int, std::string> items;
  int current = 0;
  for (const auto& line : text::split_lines(text)) {
    auto s = text::trim(line);
    std::size_t i = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i > 0 && i < 6 && i < s.size() && (s[i] == '.' || s[i] == ')')) {
      current = std::stoi(s.substr(0, i));
      auto body = strip_list_marker(s);
      if (!items.contains(current)) items[current] = body;
    } else if (current > 0 && !s.empty()) {
      items[current] += " " + s;  // wrapped continuation line
    }
  }
  for (auto& [_, v] : items) v = text::normalize_whitespace(v);
  return items;
}

ReinterpretedSet reinterpret(const SimulationContext& ctx, const DialogueState& state, const RetrievalResult& hits) {
  require(!hits.empty(), "reinterpret: no retrieved principles");
  std::vector<std::string> originals;
  for (const auto& h : hits.hits) originals.push_back(render_principle(h.principle));
  auto args = base_prompt_args(state);
  args["principles"] = numbered(originals);
  args["count"] = std::to_string(originals.size());

  ReinterpretedSet out;
  out.raw_output = complete_one(ctx.gateway, planner_request(ctx, ctx.prompts.reinterpretation.render(args),
                                                             "reinterpretation"));
  auto parsed = parse_numbered_list(out.raw_output);
  if (parsed.empty() && hits.hits.size() == 1) parsed[1] = find_principle_sentence(out.raw_output);
  for (std::size_t i = 0; i < hits.hits.size(); ++i) {
    auto it = parsed.find(static_cast<int>(i + 1));
    bool usable = it != parsed.end() && !it->second.empty();
    out.items.push_back({hits.hits[i].principle, usable ? it->second : originals[i], !usable});
  }
  return out;
}

Planner::Planner(PlannerConfig cfg, const PrincipleStore* store) : cfg_(std::move(cfg)), store_(store) {
  cfg_.validate();
  if (cfg_.mode == PlannerMode::principles && !store_)
    fail(ErrorCode::config, "principles mode requires a principle store");
}

PlanResult Planner::plan(const SimulationContext& ctx, const DialogueState& state) {
  PlanResult result;
  switch (cfg_.mode) {
    case PlannerMode::principles:
      result = plan_principles(ctx, state);
      break;
    case PlannerMode::standard:
      break;
    case PlannerMode::proactive:
      result = plan_catalog(ctx, state, ctx.prompts.proactive, "proactive");
      break;
    case PlannerMode::procot:
      result = plan_catalog(ctx, state, ctx.prompts.procot, "procot");
      break;
    case PlannerMode::icl_aif: {
      if (ctx.prompts.icl_aif.empty()) fail(ErrorCode::config, "icl_aif mode needs the rho_icl_aif template");
      bool refresh = icl_feedback_.empty() || icl_turn_ % cfg_.icl_aif_refresh == 0;
      if (refresh) {
        auto raw = complete_one(ctx.gateway, planner_request(ctx, ctx.prompts.icl_aif.render(base_prompt_args(state)),
                                                             "icl_aif"));
        result.trace["raw_output"] = raw;
        auto items = parse_numbered_list(raw);
        std::vector<std::string> lines;
        for (const auto& [_, v] : items) lines.push_back(v);
        icl_feedback_ = lines.empty() ? text::trim(raw) : numbered(lines);
      }
      result.trace["refreshed"] = refresh;
      ++icl_turn_;
      result.strategy_block = icl_feedback_;
      break;
    }
    case PlannerMode::ask_an_expert: {
      if (ctx.prompts.ask_an_expert.empty())
        fail(ErrorCode::config, "ask_an_expert mode needs the rho_ane template");
      auto raw = complete_one(ctx.gateway, planner_request(ctx, ctx.prompts.ask_an_expert.render(base_prompt_args(state)),
                                                           "ask_an_expert"));
      result.trace["raw_output"] = raw;
      result.strategy_block = text::trim(raw);
      break;
    }
  }
  result.trace["mode"] = std::string(to_string(cfg_.mode));
  return result;
}

PlanResult Planner::plan_principles(const SimulationContext& ctx, const DialogueState& state) {
  PlanResult result;
  RetrievalResult hits = cfg_.select_by_llm ? select_with_model(ctx, state, result.trace)
                                            : retrieve(ctx.gateway, state, *store_, cfg_);
  result.trace["retrieved"] = hits_json(hits);
  if (hits.empty()) {
    result.fallback = true;
    result.trace["fallback"] = true;
    return result;
  }

  std::vector<std::string> sentences;
  auto items = nlohmann::json::array();
  if (cfg_.reinterpret) {
    auto set = reinterpret(ctx, state, hits);
    result.trace["raw_output"] = set.raw_output;
    for (const auto& item : set.items) {
      sentences.push_back(present(item.text, cfg_.principle_format));
      items.push_back({{"id", item.original.id}, {"text", item.text}, {"flagged", item.flagged}});
    }
  } else {
    for (const auto& h : hits.hits) sentences.push_back(render_principle(h.principle, cfg_.principle_format));
  }
  result.trace["reinterpreted"] = items;
  result.strategy_block = numbered(sentences);
  return result;
}

RetrievalResult Planner::select_with_model(const SimulationContext& ctx, const DialogueState& state,
                                           nlohmann::json& trace) const {
  if (ctx.prompts.selection.empty()) fail(ErrorCode::config, "select_by_llm needs the rho_select template");
  auto all = store_->snapshot();
  if (all.empty()) return {};
  std::vector<std::size_t> pool(all.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  auto cap = static_cast<std::size_t>(cfg_.selection_cap);
  if (pool.size() > cap) {
    std::mt19937_64 rng(cfg_.rng_seed ^ text::fnv1a64(state.seed().seed_id) ^
                        static_cast<std::uint64_t>(state.current_turn()));
    for (std::size_t i = 0; i < cap; ++i)
      std::swap(pool[i], pool[i + static_cast<std::size_t>(rng() % (pool.size() - i))]);
    pool.resize(cap);
    std::sort(pool.begin(), pool.end());
  }
  std::vector<std::string> listed;
  for (auto i : pool) listed.push_back(render_principle(all[i]));
  auto args = base_prompt_args(state);
  args["principles"] = numbered(listed);
  args["k"] = std::to_string(cfg_.k);
  auto raw = complete_one(ctx.gateway, planner_request(ctx, ctx.prompts.selection.render(args), "selection"));
  trace["selection_output"] = raw;

  RetrievalResult out;
  std::vector<bool> taken(pool.size(), false);
  for (std::size_t pos = 0; pos < raw.size() && static_cast<int>(out.hits.size()) < cfg_.k;) {
    if (!std::isdigit(static_cast<unsigned char>(raw[pos]))) {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < raw.size() && std::isdigit(static_cast<unsigned char>(raw[end]))) ++end;
    auto n = std::stoul(raw.substr(pos, std::min<std::size_t>(end - pos, 9)));
    pos = end;
    if (n >= 1 && n <= pool.size() && !taken[n - 1]) {
      taken[n - 1] = true;
      out.hits.push_back({all[pool[n - 1]], 0.0});
    }
  }
  return out;
}

PlanResult Planner::plan_catalog(const SimulationContext& ctx, const DialogueState& state,
                                 const PromptTemplate& prompt, const char* purpose) {
  if (prompt.empty()) fail(ErrorCode::config, std::string(purpose) + " mode needs its prompt template");
  const auto& catalog = *cfg_.catalog;
  auto args = base_prompt_args(state);
  args["catalog"] = catalog.render(false);
  auto raw = complete_one(ctx.gateway, planner_request(ctx, prompt.render(args), purpose));
  auto label = extract_label(raw);
  const auto* entry = catalog.find(label);
  if (!entry)
    fail(ErrorCode::rejected, "selected strategy '" + label + "' is not in catalog '" + catalog.name() +
                                  "'; nearest label is '" + catalog.nearest_label(label) + "'");
  PlanResult result;
  result.label = entry->label;
  result.strategy_block = cfg_.mi_prompt && !entry->natural_language.empty() ? entry->natural_language : entry->label;
  result.trace["raw_output"] = raw;
  result.trace["label"] = entry->label;
  return result;
}

PlanResult plan(const SimulationContext& ctx, const DialogueState& state, const PrincipleStore* store,
                const PlannerConfig& cfg) {
  Planner planner(cfg, store);
  return planner.plan(ctx, state);
}

}  // namespace principles
