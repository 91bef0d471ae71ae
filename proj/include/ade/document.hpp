#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ade {

// Two-entity scheme used across all datasets.
enum class EntityLabel { kAde, kDrug };

std::string_view to_string(EntityLabel label);
// Case-insensitive "ADE" / "Drug"; nullopt for anything else.
std::optional<EntityLabel> parse_entity_label(std::string_view name);

struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  EntityLabel label = EntityLabel::kAde;

  std::size_t length() const { return end - start; }
  bool overlaps(const EntitySpan& o) const { return start < o.end && o.start < end; }
  auto operator<=>(const EntitySpan&) const = default;
};

enum class DocClass { kNeg = 0, kAde = 1 };

std::string_view to_string(DocClass c);
DocClass parse_doc_class(std::string_view name);

enum class RelationLabel { kNegative = 0, kPositive = 1, kUnlabeled = 2 };

std::string_view to_string(RelationLabel label);
RelationLabel parse_relation_label(std::string_view name);

struct GoldRelation {
  EntitySpan ade;
  EntitySpan drug;
  RelationLabel label = RelationLabel::kPositive;
};

struct Token {
  std::string text;
  std::size_t char_start = 0;  // code-point offsets into Document::text
  std::size_t char_end = 0;
};

struct Document {
  std::string doc_id;
  std::string text;
  std::vector<Token> tokens;
  std::optional<DocClass> gold_class;
  std::optional<std::vector<EntitySpan>> gold_spans;
  std::optional<std::vector<GoldRelation>> gold_relations;
  std::optional<std::vector<int>> dep_heads;  // -1 marks a root

  std::vector<std::string> token_texts() const;
  // Text covered by tokens [start, end), joined by single spaces.
  std::string span_text(const EntitySpan& span) const;

  // Throws SpanError / DependencyError when an invariant does not hold.
  void validate() const;
};

// Throws SpanError unless 0 <= start < end <= n_tokens.
void check_span(const EntitySpan& span, std::size_t n_tokens);

// Throws DependencyError for wrong length, out-of-range heads, or cycles.
void check_dep_heads(const std::vector<int>& heads, std::size_t n_tokens);

struct RelationCandidate {
  EntitySpan ade;
  EntitySpan drug;
  const Document* doc = nullptr;
  RelationLabel label = RelationLabel::kUnlabeled;
};

}  // namespace ade
