#include "principles/principle.hpp"

#include "principles/error.hpp"
#include "principles/text.hpp"

#include <cctype>

namespace principles {

std::string_view to_string(Provenance p) { return p == Provenance::success ? "success" : "revision"; }

Provenance provenance_from_string(std::string_view s) {
  if (s == "success") return Provenance::success;
  if (s == "revision") return Provenance::revision;
  fail(ErrorCode::parse, "unknown provenance '" + std::string(s) + "'");
}

std::string_view to_string(PrincipleFormat f) {
  switch (f) {
    case PrincipleFormat::canonical: return "canonical";
    case PrincipleFormat::without_rather_than: return "without_rather_than";
    case PrincipleFormat::without_because: return "without_because";
    case PrincipleFormat::if_then: return "if_then";
  }
  return "canonical";
}

PrincipleFormat principle_format_from_string(std::string_view s) {
  for (auto f : {PrincipleFormat::canonical, PrincipleFormat::without_rather_than, PrincipleFormat::without_because,
                 PrincipleFormat::if_then})
    if (to_string(f) == s) return f;
  fail(ErrorCode::config, "unknown principle format '" + std::string(s) + "'");
}

namespace {

struct Markers {
  std::string_view open, should, rather, because;
};

constexpr Markers canonical_markers{"When", "you should", "rather than", "because"};
constexpr Markers if_then_markers{"If", "then", "instead of", "in order to"};

// Position of `marker` as a standalone phrase at or after `from`, preferring
// an occurrence introduced by a comma. Returns {start of separator, end of marker}.
std::pair<std::size_t, std::size_t> find_connective(const std::string& s, std::string_view marker, std::size_t from,
                                                    std::size_t limit) {
  auto search = [&](const std::string& needle) -> std::pair<std::size_t, std::size_t> {
    for (auto pos = text::find_ci(s, needle, from); pos != std::string::npos && pos < limit;
         pos = text::find_ci(s, needle, pos + 1)) {
      std::size_t end = pos + needle.size();
      if (end < s.size() && std::isalnum(static_cast<unsigned char>(s[end]))) continue;
      return {pos, end};
    }
    return {std::string::npos, std::string::npos};
  };
  auto comma = search(", " + std::string(marker));
  if (comma.first != std::string::npos) return comma;
  return search(" " + std::string(marker));
}

std::string clean_clause(std::string_view raw) {
  auto s = text::trim(raw);
  while (!s.empty() && (s.back() == ',' || s.back() == ';')) {
    s.pop_back();
    s = text::trim(s);
  }
  return s;
}

}  // namespace

PrincipleClauses parse_principle(std::string_view input) {
  std::string s = text::normalize_whitespace(input);

  const Markers* m = nullptr;
  for (const auto* candidate : {&canonical_markers, &if_then_markers}) {
    auto open = candidate->open;
    if (text::starts_with_ci(s, open) && s.size() > open.size() &&
        (s[open.size()] == ' ' || s[open.size()] == ',')) {
      m = candidate;
      break;
    }
  }
  if (!m) fail(ErrorCode::parse, "principle is missing the 'When' connective");

  auto should = find_connective(s, m->should, m->open.size(), s.size());
  if (should.first == std::string::npos)
    fail(ErrorCode::parse, "principle is missing the '" + std::string(m->should) + "' connective");
  auto because = find_connective(s, m->because, should.second, s.size());
  if (because.first == std::string::npos)
    fail(ErrorCode::parse, "principle is missing the '" + std::string(m->because) + "' connective");
  auto rather = find_connective(s, m->rather, should.second, because.first);

  PrincipleClauses c;
  c.when = clean_clause(std::string_view(s).substr(m->open.size(), should.first - m->open.size()));
  std::size_t should_end = rather.first != std::string::npos ? rather.first : because.first;
  c.you_should = clean_clause(std::string_view(s).substr(should.second, should_end - should.second));
  if (rather.first != std::string::npos)
    c.rather_than = clean_clause(std::string_view(s).substr(rather.second, because.first - rather.second));
  std::string last = text::trim(std::string_view(s).substr(because.second));
  if (!last.empty() && last.back() == '.') last.pop_back();
  c.because = text::trim(last);

  if (c.when.empty()) fail(ErrorCode::parse, "principle has an empty situation clause");
  if (c.you_should.empty()) fail(ErrorCode::parse, "principle has an empty strategy clause");
  if (c.because.empty()) fail(ErrorCode::parse, "principle has an empty reason clause");
  if (c.rather_than && c.rather_than->empty()) c.rather_than.reset();
  return c;
}

std::string render_principle(const PrincipleClauses& c, PrincipleFormat format) {
  const Markers& m = format == PrincipleFormat::if_then ? if_then_markers : canonical_markers;
  std::string out = std::string(m.open) + " " + c.when + ", " + std::string(m.should) + " " + c.you_should;
  if (c.rather_than && format != PrincipleFormat::without_rather_than)
    out += ", " + std::string(m.rather) + " " + *c.rather_than;
  if (format != PrincipleFormat::without_because) out += ", " + std::string(m.because) + " " + c.because;
  return out + ".";
}

std::string render_principle(const Principle& p, PrincipleFormat format) { return render_principle(p.clauses, format); }

std::string when_text(const PrincipleClauses& clauses) { return "When " + clauses.when; }

void validate_principle(const Principle& p, Eigen::Index dimension) {
  const auto& c = p.clauses;
  require(!c.when.empty() && !c.you_should.empty() && !c.because.empty(),
          "principle " + p.id + ": when, you_should and because must be non-empty");
  bool has_rather = c.rather_than.has_value() && !c.rather_than->empty();
  require(has_rather == (p.provenance == Provenance::revision),
          "principle " + p.id + ": rather_than must be present exactly for revision provenance");
  validate_embedding(p.when_embedding, dimension);
}

}  // namespace principles

namespace principles {

std::string strip_list_marker(std::string_view line) {
  auto s = text::trim(line);
  std::size_t i = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')' || s[i] == ':')) s = text::trim(s.substr(i + 1));
  else if (!s.empty() && (s[0] == '-' || s[0] == '*')) s = text::trim(s.substr(1));
  for (std::string_view label : {"Principle:", "Reinterpreted:", "[Reinterpreted]", "[Retrieved]"})
    if (text::starts_with_ci(s, label)) s = text::trim(s.substr(label.size()));
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::string find_principle_sentence(std::string_view model_output) {
  for (const auto& line : text::split_lines(model_output)) {
    auto s = strip_list_marker(line);
    if ((text::starts_with_ci(s, "When ") || text::starts_with_ci(s, "If ")) && s.size() > 5) return s;
  }
  return text::normalize_whitespace(model_output);
}

}  // namespace principles
