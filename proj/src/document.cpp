#include "ade/document.hpp"

#include "ade/embeddings.hpp"
#include "ade/error.hpp"

namespace ade {

std::string_view to_string(EntityLabel label) {
  return label == EntityLabel::kAde ? "ADE" : "Drug";
}

std::optional<EntityLabel> parse_entity_label(std::string_view name) {
  const auto lower = ascii_lower(name);
  if (lower == "ade") return EntityLabel::kAde;
  if (lower == "drug") return EntityLabel::kDrug;
  return std::nullopt;
}

std::string_view to_string(DocClass c) { return c == DocClass::kAde ? "ADE" : "NEG"; }

DocClass parse_doc_class(std::string_view name) {
  const auto lower = ascii_lower(name);
  if (lower == "ade") return DocClass::kAde;
  if (lower == "neg") return DocClass::kNeg;
  throw LabelError("unknown document class '" + std::string(name) + "'");
}

std::string_view to_string(RelationLabel label) {
  switch (label) {
    case RelationLabel::kNegative:
      return "Negative";
    case RelationLabel::kPositive:
      return "Positive";
    case RelationLabel::kUnlabeled:
      return "Unlabeled";
  }
  return "Unlabeled";
}

RelationLabel parse_relation_label(std::string_view name) {
  const auto lower = ascii_lower(name);
  if (lower == "positive" || lower == "1") return RelationLabel::kPositive;
  if (lower == "negative" || lower == "0") return RelationLabel::kNegative;
  if (lower == "unlabeled") return RelationLabel::kUnlabeled;
  throw LabelError("unknown relation label '" + std::string(name) + "'");
}

std::vector<std::string> Document::token_texts() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::string Document::span_text(const EntitySpan& span) const {
  check_span(span, tokens.size());
  std::string out;
  for (std::size_t i = span.start; i < span.end; ++i) {
    if (i > span.start) out += ' ';
    out += tokens[i].text;
  }
  return out;
}

void check_span(const EntitySpan& span, std::size_t n_tokens) {
  if (!(span.start < span.end && span.end <= n_tokens)) {
    throw SpanError("span [" + std::to_string(span.start) + "," + std::to_string(span.end) +
                    ") invalid for " + std::to_string(n_tokens) + " tokens");
  }
}

void check_dep_heads(const std::vector<int>& heads, std::size_t n_tokens) {
  if (heads.size() != n_tokens) {
    throw DependencyError("dep_heads has " + std::to_string(heads.size()) + " entries for " +
                          std::to_string(n_tokens) + " tokens");
  }
  const int n = static_cast<int>(n_tokens);
  for (int h : heads) {
    if (h < -1 || h >= n) throw DependencyError("dep head " + std::to_string(h) + " out of range");
  }
  // 0 = unvisited, 1 = on current path, 2 = known to reach a root.
  std::vector<char> state(n_tokens, 0);
  for (std::size_t start = 0; start < n_tokens; ++start) {
    std::vector<std::size_t> path;
    std::size_t cur = start;
    while (true) {
      if (state[cur] == 2) break;
      if (state[cur] == 1) {
        throw DependencyError("dependency cycle through token " + std::to_string(cur));
      }
      state[cur] = 1;
      path.push_back(cur);
      if (heads[cur] < 0) break;
      cur = static_cast<std::size_t>(heads[cur]);
    }
    for (auto p : path) state[p] = 2;
  }
}

void Document::validate() const {
  if (gold_spans) {
    for (const auto& s : *gold_spans) check_span(s, tokens.size());
  }
  if (gold_relations) {
    for (const auto& r : *gold_relations) {
      check_span(r.ade, tokens.size());
      check_span(r.drug, tokens.size());
      if (r.ade.label != EntityLabel::kAde || r.drug.label != EntityLabel::kDrug) {
        throw SpanError("relation must pair an ADE span with a Drug span");
      }
    }
  }
  if (dep_heads) check_dep_heads(*dep_heads, tokens.size());
}

}  // namespace ade
