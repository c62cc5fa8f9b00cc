#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace principles {

using PromptArgs = std::map<std::string, std::string>;

/// Text template with named slots.
///
///   {name}            replaced by the argument `name`
///   {#name} ... {/name}  emitted only when `name` is non-empty
///   {{ and }}         literal braces
///
/// Rendering fails if any slot (or section name) is missing from the
/// arguments, so a rendered prompt never carries an unfilled slot.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  explicit PromptTemplate(std::string source);

  const std::string& source() const { return source_; }
  const std::set<std::string>& slots() const { return slots_; }
  bool empty() const { return source_.empty(); }

  std::string render(const PromptArgs& args) const;

  /// Throws a config error naming the first slot outside `allowed`.
  void validate_slots(const std::set<std::string>& allowed, const std::string& name) const;

 private:
  enum class Kind { literal, slot, open, close };
  struct Token {
    Kind kind;
    std::string value;
  };

  std::string source_;
  std::vector<Token> tokens_;
  std::set<std::string> slots_;
};

}  // namespace principles
