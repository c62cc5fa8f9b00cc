#include "principles/catalog.hpp"

#include "principles/error.hpp"
#include "principles/text.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace principles {

StrategyCatalog::StrategyCatalog(std::string name, Domain domain, std::vector<CatalogEntry> entries)
    : name_(std::move(name)), domain_(std::move(domain)), entries_(std::move(entries)) {
  if (entries_.empty()) fail(ErrorCode::precondition, "strategy catalog '" + name_ + "' is empty");
  std::set<std::string> seen;
  for (auto& e : entries_) {
    e.label = text::normalize_whitespace(e.label);
    e.natural_language = text::normalize_whitespace(e.natural_language);
    if (e.label.empty()) fail(ErrorCode::config, "catalog '" + name_ + "' has an empty label");
    if (!seen.insert(text::fold_for_match(e.label)).second)
      fail(ErrorCode::config, "catalog '" + name_ + "' repeats label '" + e.label + "'");
  }
}

const CatalogEntry* StrategyCatalog::find(std::string_view label) const {
  auto key = text::fold_for_match(text::normalize_whitespace(label));
  for (const auto& e : entries_)
    if (text::fold_for_match(e.label) == key) return &e;
  return nullptr;
}

const std::string& StrategyCatalog::nearest_label(std::string_view text) const {
  auto key = text::fold_for_match(text::normalize_whitespace(text));
  const CatalogEntry* best = &entries_.front();
  auto best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& e : entries_) {
    auto d = text::edit_distance(key, text::fold_for_match(e.label));
    if (d < best_d) {
      best_d = d;
      best = &e;
    }
  }
  return best->label;
}

const std::string& StrategyCatalog::fallback_label() const {
  if (const auto* others = find("Others")) return others->label;
  return entries_.back().label;
}

std::string StrategyCatalog::render(bool with_instructions) const {
  std::ostringstream out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    out << i + 1 << ". " << entries_[i].label;
    if (with_instructions) out << ": " << entries_[i].natural_language;
    out << '\n';
  }
  return out.str();
}

StrategyCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open catalog " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, path.string() + ": " + e.what());
  }
  try {
    std::vector<CatalogEntry> entries;
    for (const auto& s : j.at("strategies"))
      entries.push_back({s.at("label").get<std::string>(), s.value("natural_language", std::string{})});
    return StrategyCatalog(j.value("name", path.stem().string()), Domain(j.at("domain").get<std::string>()),
                           std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, path.string() + ": " + e.what());
  }
}

StrategyCatalog load_catalog(const std::string& name_or_path, const std::filesystem::path& dir) {
  std::filesystem::path direct(name_or_path);
  if (std::filesystem::is_regular_file(direct)) return load_catalog(direct);
  auto named = dir / (name_or_path + ".json");
  if (std::filesystem::is_regular_file(named)) return load_catalog(named);
  fail(ErrorCode::config, "unknown strategy catalog '" + name_or_path + "'");
}

}  // namespace principles
