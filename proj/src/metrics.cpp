#include "ade/metrics.hpp"

#include <algorithm>
#include <functional>

#include "ade/error.hpp"

namespace ade {

namespace {

constexpr EntityLabel kLabels[] = {EntityLabel::kAde, EntityLabel::kDrug};

void check_well_formed(std::span<const EntitySpan> spans) {
  for (const auto& s : spans) {
    if (s.start >= s.end) {
      throw SpanError("malformed span [" + std::to_string(s.start) + "," +
                      std::to_string(s.end) + ")");
    }
  }
}

std::vector<std::size_t> textual_order(std::span<const EntitySpan> spans) {
  std::vector<std::size_t> idx(spans.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(spans[a].start, spans[a].end) < std::pair(spans[b].start, spans[b].end);
  });
  return idx;
}

// Maximum bipartite matching size by augmenting paths.
std::size_t max_matching(std::span<const EntitySpan> gold, std::span<const EntitySpan> pred,
                         EntityLabel label) {
  std::vector<int> gold_owner(gold.size(), -1);
  std::function<bool(std::size_t, std::vector<bool>&)> augment = [&](std::size_t p,
                                                                     std::vector<bool>& seen) {
    for (std::size_t g = 0; g < gold.size(); ++g) {
      if (seen[g] || gold[g].label != label || !gold[g].overlaps(pred[p])) continue;
      seen[g] = true;
      if (gold_owner[g] < 0 || augment(static_cast<std::size_t>(gold_owner[g]), seen)) {
        gold_owner[g] = static_cast<int>(p);
        return true;
      }
    }
    return false;
  };
  std::size_t matched = 0;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (pred[p].label != label) continue;
    std::vector<bool> seen(gold.size(), false);
    if (augment(p, seen)) ++matched;
  }
  return matched;
}

}  // namespace

Prf prf(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf out;
  if (tp + fp > 0) out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (out.precision + out.recall > 0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

Prf aggregate(std::span<const Counts> per_label, Averaging averaging) {
  if (per_label.empty()) throw EvaluationError("aggregate needs at least one label");
  if (averaging == Averaging::kMicro) {
    Counts total;
    for (const auto& c : per_label) total += c;
    return prf(total);
  }
  Prf out;
  for (const auto& c : per_label) {
    const auto p = prf(c);
    out.precision += p.precision;
    out.recall += p.recall;
    out.f1 += p.f1;
  }
  const auto n = static_cast<double>(per_label.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  return out;
}

std::string_view to_string(MatchMode mode) {
  switch (mode) {
    case MatchMode::kStrict:
      return "strict";
    case MatchMode::kRelax:
      return "relax";
    case MatchMode::kOverlapAny:
      return "overlap-any";
  }
  return "strict";
}

MatchMode parse_match_mode(std::string_view name) {
  if (name == "strict") return MatchMode::kStrict;
  if (name == "relax") return MatchMode::kRelax;
  if (name == "overlap-any") return MatchMode::kOverlapAny;
  throw ConfigError("unknown match mode '" + std::string(name) + "'");
}

EntityMatchCounts& EntityMatchCounts::operator+=(const EntityMatchCounts& o) {
  for (const auto& [label, c] : o.per_label) per_label[label] += c;
  optimal_tp += o.optimal_tp;
  return *this;
}

std::size_t EntityMatchCounts::total_tp() const {
  std::size_t n = 0;
  for (const auto& [label, c] : per_label) n += c.tp;
  return n;
}

EntityMatchCounts match_entities(std::span<const EntitySpan> gold,
                                 std::span<const EntitySpan> pred, MatchMode mode) {
  check_well_formed(gold);
  check_well_formed(pred);
  EntityMatchCounts out;
  for (auto label : kLabels) out.per_label[label] = {};

  if (mode == MatchMode::kOverlapAny) {
    for (const auto& g : gold) {
      const bool hit = std::any_of(pred.begin(), pred.end(), [&](const EntitySpan& p) {
        return p.label == g.label && p.overlaps(g);
      });
      auto& c = out.per_label[g.label];
      hit ? ++c.tp : ++c.fn;
    }
    for (const auto& p : pred) {
      const bool hit = std::any_of(gold.begin(), gold.end(), [&](const EntitySpan& g) {
        return p.label == g.label && p.overlaps(g);
      });
      if (!hit) ++out.per_label[p.label].fp;
    }
    return out;
  }

  const auto gold_order = textual_order(gold);
  std::vector<bool> gold_used(gold.size(), false);
  for (auto pi : textual_order(pred)) {
    const auto& p = pred[pi];
    bool matched = false;
    for (auto gi : gold_order) {
      if (gold_used[gi] || gold[gi].label != p.label) continue;
      const bool ok = mode == MatchMode::kStrict
                          ? (gold[gi].start == p.start && gold[gi].end == p.end)
                          : gold[gi].overlaps(p);
      if (ok) {
        gold_used[gi] = true;
        matched = true;
        break;
      }
    }
    matched ? ++out.per_label[p.label].tp : ++out.per_label[p.label].fp;
  }
  for (std::size_t gi = 0; gi < gold.size(); ++gi) {
    if (!gold_used[gi]) ++out.per_label[gold[gi].label].fn;
  }
  if (mode == MatchMode::kRelax) {
    for (auto label : kLabels) out.optimal_tp += max_matching(gold, pred, label);
  } else {
    out.optimal_tp = out.total_tp();
  }
  return out;
}

nlohmann::json to_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

LabelScores score_counts(const std::map<std::string, Counts>& counts) {
  LabelScores s;
  s.counts = counts;
  std::vector<Counts> list;
  for (const auto& [name, c] : counts) {
    s.per_label[name] = prf(c);
    list.push_back(c);
  }
  s.macro = aggregate(list, Averaging::kMacro);
  s.micro = aggregate(list, Averaging::kMicro);
  return s;
}

LabelScores score_entities(const EntityMatchCounts& counts) {
  std::map<std::string, Counts> named;
  for (const auto& [label, c] : counts.per_label) named[std::string(to_string(label))] = c;
  return score_counts(named);
}

LabelScores score_classification(std::span<const std::size_t> gold,
                                 std::span<const std::size_t> pred,
                                 std::span<const std::string_view> names) {
  if (gold.size() != pred.size()) throw EvaluationError("gold and predicted counts differ");
  std::vector<Counts> per(names.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= names.size() || pred[i] >= names.size()) {
      throw LabelError("class index out of range");
    }
    if (gold[i] == pred[i]) {
      ++per[gold[i]].tp;
    } else {
      ++per[pred[i]].fp;
      ++per[gold[i]].fn;
    }
  }
  std::map<std::string, Counts> named;
  for (std::size_t c = 0; c < names.size(); ++c) named[std::string(names[c])] = per[c];
  return score_counts(named);
}

nlohmann::json LabelScores::to_json() const {
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [name, p] : per_label) {
    const auto& c = counts.at(name);
    auto j = ade::to_json(p);
    j["tp"] = c.tp;
    j["fp"] = c.fp;
    j["fn"] = c.fn;
    labels[name] = j;
  }
  return {{"per_label", labels}, {"macro", ade::to_json(macro)}, {"micro", ade::to_json(micro)}};
}

nlohmann::json EntityReport::to_json() const {
  auto j = scores.to_json();
  j["mode"] = std::string(ade::to_string(mode));
  if (mode == MatchMode::kRelax) {
    j["greedy_tp"] = greedy_tp;
    j["optimal_tp"] = optimal_tp;
    j["matching_divergence"] = optimal_tp - greedy_tp;
  }
  return j;
}

EntityReport evaluate_spans(std::span<const std::vector<EntitySpan>> gold,
                            std::span<const std::vector<EntitySpan>> pred, MatchMode mode) {
  if (gold.size() != pred.size()) throw EvaluationError("gold and predicted document counts differ");
  EntityMatchCounts total;
  for (auto label : kLabels) total.per_label[label] = {};
  for (std::size_t i = 0; i < gold.size(); ++i) total += match_entities(gold[i], pred[i], mode);
  EntityReport report;
  report.mode = mode;
  report.scores = score_entities(total);
  report.greedy_tp = total.total_tp();
  report.optimal_tp = total.optimal_tp;
  return report;
}

}  // namespace ade
