#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ade/document.hpp"

namespace ade {

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Zero denominators give 0 rather than NaN.
Prf prf(std::size_t tp, std::size_t fp, std::size_t fn);
inline Prf prf(const Counts& c) { return prf(c.tp, c.fp, c.fn); }

enum class Averaging { kMacro, kMicro };

// Macro: unweighted mean of per-label P/R/F1. Micro: P/R/F1 of summed counts.
Prf aggregate(std::span<const Counts> per_label, Averaging averaging);

enum class MatchMode {
  kStrict,      // same label, identical boundaries
  kRelax,       // same label, any overlap, one-to-one
  kOverlapAny,  // same label, any overlap, many-to-many
};

std::string_view to_string(MatchMode mode);
MatchMode parse_match_mode(std::string_view name);

struct EntityMatchCounts {
  std::map<EntityLabel, Counts> per_label;  // always holds ADE and Drug
  // Relax mode only: true positives of a maximum one-to-one overlap matching,
  // for comparison with the greedy count.
  std::size_t optimal_tp = 0;

  EntityMatchCounts& operator+=(const EntityMatchCounts& o);
  std::size_t total_tp() const;
};

/// Counts matches between gold and predicted spans of one document.
/// Strict and relax pair each span at most once, scanning predictions in
/// textual order and taking the first compatible unmatched gold span.
/// Throws SpanError for spans with start >= end.
EntityMatchCounts match_entities(std::span<const EntitySpan> gold,
                                 std::span<const EntitySpan> pred, MatchMode mode);

struct LabelScores {
  std::map<std::string, Counts> counts;
  std::map<std::string, Prf> per_label;
  Prf macro;
  Prf micro;

  nlohmann::json to_json() const;
};

LabelScores score_counts(const std::map<std::string, Counts>& counts);
LabelScores score_entities(const EntityMatchCounts& counts);

// Per-class counts for single-label classification; `names[i]` labels class i.
LabelScores score_classification(std::span<const std::size_t> gold,
                                 std::span<const std::size_t> pred,
                                 std::span<const std::string_view> names);

struct EntityReport {
  MatchMode mode = MatchMode::kStrict;
  LabelScores scores;
  std::size_t greedy_tp = 0;
  std::size_t optimal_tp = 0;  // relax mode: divergence = optimal_tp - greedy_tp

  nlohmann::json to_json() const;
};

// Accumulates match counts over parallel gold/pred span lists.
EntityReport evaluate_spans(std::span<const std::vector<EntitySpan>> gold,
                            std::span<const std::vector<EntitySpan>> pred, MatchMode mode);

nlohmann::json to_json(const Prf& p);

}  // namespace ade
