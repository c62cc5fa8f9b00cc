#include "principles/prompt_template.hpp"

#include "principles/error.hpp"

#include <cctype>

namespace principles {

namespace {

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name)
    if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_'))
      return false;
  return true;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string source) : source_(std::move(source)) {
  std::string literal;
  std::vector<std::string> open_sections;
  auto flush = [&] {
    if (!literal.empty()) tokens_.push_back({Kind::literal, std::move(literal)});
    literal.clear();
  };

  for (std::size_t i = 0; i < source_.size(); ++i) {
    char c = source_[i];
    if ((c == '{' || c == '}') && i + 1 < source_.size() && source_[i + 1] == c) {
      literal.push_back(c);
      ++i;
      continue;
    }
    if (c == '}') fail(ErrorCode::parse, "unmatched '}' in prompt template at offset " + std::to_string(i));
    if (c != '{') {
      literal.push_back(c);
      continue;
    }
    auto close = source_.find('}', i);
    if (close == std::string::npos) fail(ErrorCode::parse, "unterminated slot in prompt template");
    std::string inner = source_.substr(i + 1, close - i - 1);
    Kind kind = Kind::slot;
    if (!inner.empty() && (inner[0] == '#' || inner[0] == '/')) {
      kind = inner[0] == '#' ? Kind::open : Kind::close;
      inner.erase(0, 1);
    }
    if (!valid_name(inner)) fail(ErrorCode::parse, "invalid slot name '{" + inner + "}' in prompt template");
    if (kind == Kind::open) open_sections.push_back(inner);
    if (kind == Kind::close) {
      if (open_sections.empty() || open_sections.back() != inner)
        fail(ErrorCode::parse, "section '{/" + inner + "}' closes nothing");
      open_sections.pop_back();
    }
    flush();
    tokens_.push_back({kind, inner});
    slots_.insert(inner);
    i = close;
  }
  if (!open_sections.empty()) fail(ErrorCode::parse, "section '{#" + open_sections.back() + "}' is never closed");
  flush();
}

std::string PromptTemplate::render(const PromptArgs& args) const {
  for (const auto& slot : slots_)
    if (!args.count(slot)) fail(ErrorCode::precondition, "prompt slot '{" + slot + "}' has no argument");

  std::string out;
  int skipping = 0;  // depth of suppressed sections
  for (const auto& token : tokens_) {
    switch (token.kind) {
      case Kind::literal:
        if (!skipping) out += token.value;
        break;
      case Kind::slot:
        if (!skipping) out += args.at(token.value);
        break;
      case Kind::open:
        if (skipping || args.at(token.value).empty()) ++skipping;
        break;
      case Kind::close:
        if (skipping) --skipping;
        break;
    }
  }
  return out;
}

void PromptTemplate::validate_slots(const std::set<std::string>& allowed, const std::string& name) const {
  for (const auto& slot : slots_)
    if (!allowed.count(slot)) fail(ErrorCode::config, "template " + name + " uses unknown slot '{" + slot + "}'");
}

}  // namespace principles
