#pragma once

#include "principles/dialogue.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace principles {

struct CatalogEntry {
  std::string label;
  std::string natural_language;
};

/// Predefined dialogue strategies for a task setting, with their
/// natural-language instruction forms.
class StrategyCatalog {
 public:
  StrategyCatalog(std::string name, Domain domain, std::vector<CatalogEntry> entries);

  const std::string& name() const { return name_; }
  const Domain& domain() const { return domain_; }
  const std::vector<CatalogEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Exact label lookup (case and surrounding whitespace ignored).
  const CatalogEntry* find(std::string_view label) const;
  bool contains(std::string_view label) const { return find(label) != nullptr; }

  /// Closest label by edit distance on folded text; ties go to the earlier entry.
  const std::string& nearest_label(std::string_view text) const;

  /// "Others" when the catalog has it, otherwise the last label.
  const std::string& fallback_label() const;

  /// Numbered "label: instruction" lines for prompt slots.
  std::string render(bool with_instructions = true) const;

 private:
  std::string name_;
  Domain domain_;
  std::vector<CatalogEntry> entries_;
};

/// JSON object: name, domain, strategies: [{label, natural_language}].
StrategyCatalog load_catalog(const std::filesystem::path& path);

/// Resolves `name_or_path`: an existing file, or `<dir>/<name>.json`.
StrategyCatalog load_catalog(const std::string& name_or_path, const std::filesystem::path& dir);

}  // namespace principles
