#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ade/document.hpp"

namespace ade {

struct ReadWarnings {
  std::size_t iob_repairs = 0;
};

// ---------------------------------------------------------------------------
// CoNLL: token<TAB>tag per line (the tag is the last whitespace-separated
// column), blank lines between sentences, "-DOCSTART-" lines ignored.

std::vector<Document> read_conll(std::istream& in, ReadWarnings* warnings = nullptr);
std::vector<Document> read_conll(const std::filesystem::path& path,
                                 ReadWarnings* warnings = nullptr);

// Throws EncodingError if any document has overlapping spans.
void write_conll(std::span<const Document> docs, std::ostream& out);
void write_conll(std::span<const Document> docs, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// JSONL documents, one object per line:
//   {"doc_id"?, "text", "label"?: "ADE"|"NEG",
//    "spans"?: [[char_start, char_end, "ADE"|"Drug"], ...],
//    "relations"?: [{"ade": [s, e], "drug": [s, e], "label"?: "Positive"|"Negative"}],
//    "dep_heads"?: [int per token, -1 for root]}
// Character offsets count Unicode code points, end exclusive.

// Parses one line. `line_no` is 1-based and only used in error messages.
Document parse_jsonl_document(std::string_view line, std::size_t line_no);
std::vector<Document> read_jsonl_docs(std::istream& in);
std::vector<Document> read_jsonl_docs(const std::filesystem::path& path);

// Maps a character span onto the token span it covers exactly; throws
// AlignmentError if either boundary falls inside a token.
EntitySpan align_char_span(const Document& doc, std::size_t char_start, std::size_t char_end,
                           EntityLabel label);

// ---------------------------------------------------------------------------
// Relation candidates.

// ADE spans × Drug spans of `spans`, ADE-major order, each Unlabeled.
std::vector<RelationCandidate> generate_relation_candidates(const Document& doc,
                                                            std::span<const EntitySpan> spans);
// Uses the document's gold spans (empty when absent).
std::vector<RelationCandidate> generate_relation_candidates(const Document& doc);

using SpanPair = std::pair<EntitySpan, EntitySpan>;  // (ade, drug)

// All candidates minus the positive pairs, labeled Negative. Throws
// ConsistencyError if a positive pair is not a candidate.
std::vector<RelationCandidate> sample_negative_relations(const Document& doc,
                                                         std::span<const SpanPair> positive_pairs);

// Positive gold relations plus sampled negatives for one document.
std::vector<RelationCandidate> labeled_relation_candidates(const Document& doc);

// Candidate JSONL: {"doc_id", "ade": [start, end], "drug": [start, end], "label"}
// with token offsets.
nlohmann::json candidate_to_json(const RelationCandidate& c);

struct CandidateRecord {
  std::string doc_id;
  EntitySpan ade;
  EntitySpan drug;
  RelationLabel label = RelationLabel::kUnlabeled;
};
CandidateRecord parse_candidate_json(std::string_view line, std::size_t line_no);

// ---------------------------------------------------------------------------

struct CorpusStats {
  std::size_t n_sentences = 0;
  std::size_t n_tokens = 0;
  // Entity mentions (spans) per label.
  std::map<std::string, std::size_t> n_entities;
  // Tokens tagged B-/I- per label.
  std::map<std::string, std::size_t> n_entity_tags;
  std::size_t n_positive_relations = 0;
  std::size_t n_negative_relations = 0;

  nlohmann::json to_json() const;
};

CorpusStats corpus_stats(std::span<const Document> docs);

// ---------------------------------------------------------------------------

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

inline constexpr double kDefaultDevRatio = 0.1;

/// Seeded k-fold partition of document indices. Test folds differ in size
/// by at most one; dev is a seeded `dev_ratio` share of each training part.
std::vector<Fold> kfold_split(std::size_t n_docs, std::size_t k, std::uint64_t seed,
                              double dev_ratio = kDefaultDevRatio);

}  // namespace ade
