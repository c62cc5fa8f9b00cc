#pragma once

#include "principles/gateway.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace principles {

enum class Provenance { success, revision };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

/// The four clauses of "When [situation], you should [strategy], rather than
/// [failed strategy], because [reason]". `rather_than` exists only for
/// principles learned by overcoming a failure.
struct PrincipleClauses {
  std::string when;
  std::string you_should;
  std::optional<std::string> rather_than;
  std::string because;

  bool operator==(const PrincipleClauses&) const = default;
};

struct PrincipleSource {
  std::string seed_id;
  int turn_index = 0;

  bool operator==(const PrincipleSource&) const = default;
};

struct Principle {
  std::string id;
  PrincipleClauses clauses;
  Provenance provenance = Provenance::success;
  PrincipleSource source;
  EmbeddingVector when_embedding;
  std::string created_at;
};

/// Presentation variants for the linguistic-format ablation.
enum class PrincipleFormat {
  canonical,            // When / you should / rather than / because
  without_rather_than,
  without_because,
  if_then,              // If / then / instead of / in order to
};

std::string_view to_string(PrincipleFormat f);
PrincipleFormat principle_format_from_string(std::string_view s);

/// Splits a principle sentence at its connectives. Accepts the canonical
/// markers and the If/then/instead of/in order to variant. Whitespace is
/// normalized and one trailing period is dropped from the last clause.
/// Throws ErrorCode::parse naming the first missing mandatory connective.
PrincipleClauses parse_principle(std::string_view text);

std::string render_principle(const PrincipleClauses& clauses, PrincipleFormat format = PrincipleFormat::canonical);
std::string render_principle(const Principle& p, PrincipleFormat format = PrincipleFormat::canonical);

/// Text embedded for retrieval: the When clause with its leading "When".
std::string when_text(const PrincipleClauses& clauses);

/// Clause presence rules plus embedding sanity (dimension checked when > 0).
void validate_principle(const Principle& p, Eigen::Index dimension = 0);

/// Strips list numbering ("1.", "2)", "-", "*") and a leading label such as
/// "Principle:" from one line of model output.
std::string strip_list_marker(std::string_view line);

/// First line of model output that reads as a principle sentence (starts with
/// "When" or "If" once list markers are stripped); the whole normalized text
/// otherwise.
std::string find_principle_sentence(std::string_view model_output);

}  // namespace principles
