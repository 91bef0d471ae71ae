#include "ade/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "ade/error.hpp"
#include "ade/iob.hpp"
#include "ade/tokenizer.hpp"
#include "ade/utf8.hpp"

namespace ade {

namespace {

std::string at_line(std::size_t line_no, const std::string& msg) {
  return "line " + std::to_string(line_no) + ": " + msg;
}

std::vector<std::string_view> split_columns(std::string_view line) {
  std::vector<std::string_view> cols;
  const bool tabbed = line.find('\t') != std::string_view::npos;
  std::size_t i = 0;
  while (i <= line.size()) {
    if (!tabbed) {
      while (i < line.size() && line[i] == ' ') ++i;
      if (i == line.size()) break;
    }
    auto j = line.find(tabbed ? '\t' : ' ', i);
    if (j == std::string_view::npos) j = line.size();
    cols.push_back(line.substr(i, j - i));
    i = j + 1;
  }
  return cols;
}

Document finish_sentence(std::vector<std::string>& words, std::vector<Tag>& tags,
                         std::size_t index, ReadWarnings* warnings) {
  Document doc;
  doc.doc_id = "sent-" + std::to_string(index);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) {
      doc.text += ' ';
      ++offset;
    }
    const auto len = utf8::length(words[i]);
    doc.tokens.push_back({words[i], offset, offset + len});
    doc.text += words[i];
    offset += len;
  }
  auto decoded = decode_iob(tags);
  if (warnings) warnings->iob_repairs += decoded.repairs;
  doc.gold_spans = std::move(decoded.spans);
  words.clear();
  tags.clear();
  return doc;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

EntitySpan span_from_json(const nlohmann::json& j, EntityLabel label, std::size_t line_no) {
  if (!j.is_array() || j.size() < 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned()) {
    throw FormatError(at_line(line_no, "span must be [start, end]"));
  }
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>(), label};
}

}  // namespace

std::vector<Document> read_conll(std::istream& in, ReadWarnings* warnings) {
  std::vector<Document> docs;
  std::vector<std::string> words;
  std::vector<Tag> tags;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool blank = line.find_first_not_of(" \t") == std::string::npos;
    if (blank) {
      if (!words.empty()) docs.push_back(finish_sentence(words, tags, docs.size(), warnings));
      continue;
    }
    if (line.rfind("-DOCSTART-", 0) == 0) continue;
    auto cols = split_columns(line);
    if (cols.size() < 2 || cols.back().empty()) {
      throw FormatError(at_line(line_no, "missing tag column"));
    }
    try {
      tags.push_back(parse_tag(cols.back()));
    } catch (const FormatError& e) {
      throw FormatError(at_line(line_no, e.what()));
    }
    words.emplace_back(cols.front());
  }
  if (!words.empty()) docs.push_back(finish_sentence(words, tags, docs.size(), warnings));
  return docs;
}

std::vector<Document> read_conll(const std::filesystem::path& path, ReadWarnings* warnings) {
  auto in = open_in(path);
  return read_conll(in, warnings);
}

void write_conll(std::span<const Document> docs, std::ostream& out) {
  for (const auto& doc : docs) {
    if (doc.tokens.empty()) continue;
    std::vector<EntitySpan> spans;
    if (doc.gold_spans) spans = *doc.gold_spans;
    const auto tags = encode_iob(doc.tokens.size(), spans);
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      out << doc.tokens[i].text << '\t' << to_string(tags[i]) << '\n';
    }
    out << '\n';
  }
}

void write_conll(std::span<const Document> docs, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_conll(docs, out);
}

EntitySpan align_char_span(const Document& doc, std::size_t char_start, std::size_t char_end,
                           EntityLabel label) {
  const auto describe = [&] {
    return "span [" + std::to_string(char_start) + "," + std::to_string(char_end) + "," +
           std::string(to_string(label)) + "]";
  };
  if (char_start >= char_end) throw AlignmentError(describe() + " is empty or reversed");
  std::optional<std::size_t> first, last;
  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    if (doc.tokens[i].char_start == char_start) first = i;
    if (doc.tokens[i].char_end == char_end) last = i;
  }
  if (!first || !last || *last < *first) {
    throw AlignmentError(describe() + " is not aligned to token boundaries");
  }
  return {*first, *last + 1, label};
}

Document parse_jsonl_document(std::string_view line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(at_line(line_no, std::string("invalid JSON: ") + e.what()));
  }
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw FormatError(at_line(line_no, "expected an object with a string \"text\" field"));
  }
  try {
    std::string id = j.contains("doc_id") ? (j["doc_id"].is_string()
                                                 ? j["doc_id"].get<std::string>()
                                                 : j["doc_id"].dump())
                                          : "doc-" + std::to_string(line_no);
    Document doc = make_document(std::move(id), j["text"].get<std::string>());
    if (j.contains("label") && !j["label"].is_null()) {
      doc.gold_class = parse_doc_class(j["label"].get<std::string>());
    }
    if (j.contains("spans")) {
      std::vector<EntitySpan> spans;
      for (const auto& s : j["spans"]) {
        if (!s.is_array() || s.size() != 3 || !s[2].is_string()) {
          throw FormatError(at_line(line_no, "span must be [start, end, label]"));
        }
        auto label = parse_entity_label(s[2].get<std::string>());
        if (!label) {
          throw FormatError(at_line(line_no, "unknown entity label " + s[2].dump()));
        }
        auto cs = span_from_json(s, *label, line_no);
        spans.push_back(align_char_span(doc, cs.start, cs.end, *label));
      }
      doc.gold_spans = std::move(spans);
    }
    if (j.contains("relations")) {
      std::vector<GoldRelation> rels;
      for (const auto& r : j["relations"]) {
        if (!r.is_object() || !r.contains("ade") || !r.contains("drug")) {
          throw FormatError(at_line(line_no, "relation needs \"ade\" and \"drug\" spans"));
        }
        auto a = span_from_json(r["ade"], EntityLabel::kAde, line_no);
        auto d = span_from_json(r["drug"], EntityLabel::kDrug, line_no);
        GoldRelation rel{align_char_span(doc, a.start, a.end, EntityLabel::kAde),
                         align_char_span(doc, d.start, d.end, EntityLabel::kDrug),
                         RelationLabel::kPositive};
        if (r.contains("label")) rel.label = parse_relation_label(r["label"].get<std::string>());
        rels.push_back(rel);
      }
      // Relation arguments are entity mentions too.
      std::vector<EntitySpan> spans = doc.gold_spans.value_or(std::vector<EntitySpan>{});
      for (const auto& r : rels) {
        for (const auto& s : {r.ade, r.drug}) {
          if (std::find(spans.begin(), spans.end(), s) == spans.end()) spans.push_back(s);
        }
      }
      std::sort(spans.begin(), spans.end());
      doc.gold_spans = std::move(spans);
      doc.gold_relations = std::move(rels);
    }
    if (j.contains("dep_heads") && !j["dep_heads"].is_null()) {
      doc.dep_heads = j["dep_heads"].get<std::vector<int>>();
    }
    doc.validate();
    return doc;
  } catch (const AlignmentError& e) {
    throw AlignmentError(at_line(line_no, e.what()));
  } catch (const FormatError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(at_line(line_no, e.what()));
  } catch (const Error& e) {
    throw FormatError(at_line(line_no, e.what()));
  }
}

std::vector<Document> read_jsonl_docs(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    docs.push_back(parse_jsonl_document(line, line_no));
  }
  return docs;
}

std::vector<Document> read_jsonl_docs(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_jsonl_docs(in);
}

std::vector<RelationCandidate> generate_relation_candidates(const Document& doc,
                                                            std::span<const EntitySpan> spans) {
  std::vector<RelationCandidate> out;
  for (const auto& a : spans) {
    if (a.label != EntityLabel::kAde) continue;
    for (const auto& d : spans) {
      if (d.label != EntityLabel::kDrug) continue;
      out.push_back({a, d, &doc, RelationLabel::kUnlabeled});
    }
  }
  return out;
}

std::vector<RelationCandidate> generate_relation_candidates(const Document& doc) {
  if (!doc.gold_spans) return {};
  return generate_relation_candidates(doc, *doc.gold_spans);
}

std::vector<RelationCandidate> sample_negative_relations(const Document& doc,
                                                         std::span<const SpanPair> positive_pairs) {
  auto candidates = generate_relation_candidates(doc);
  std::set<SpanPair> all;
  for (const auto& c : candidates) all.emplace(c.ade, c.drug);
  std::set<SpanPair> positives;
  for (const auto& p : positive_pairs) {
    if (!all.count(p)) {
      throw ConsistencyError("annotated pair (" + doc.span_text(p.first) + ", " +
                             doc.span_text(p.second) + ") in " + doc.doc_id +
                             " is not a candidate pair");
    }
    positives.insert(p);
  }
  std::vector<RelationCandidate> negatives;
  for (auto& c : candidates) {
    if (positives.count({c.ade, c.drug})) continue;
    c.label = RelationLabel::kNegative;
    negatives.push_back(c);
  }
  return negatives;
}

std::vector<RelationCandidate> labeled_relation_candidates(const Document& doc) {
  std::vector<SpanPair> positives;
  if (doc.gold_relations) {
    for (const auto& r : *doc.gold_relations) {
      if (r.label == RelationLabel::kPositive) positives.emplace_back(r.ade, r.drug);
    }
  }
  std::sort(positives.begin(), positives.end());
  positives.erase(std::unique(positives.begin(), positives.end()), positives.end());
  std::vector<RelationCandidate> out;
  for (const auto& [a, d] : positives) out.push_back({a, d, &doc, RelationLabel::kPositive});
  auto negatives = sample_negative_relations(doc, positives);
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

nlohmann::json candidate_to_json(const RelationCandidate& c) {
  return {{"doc_id", c.doc ? c.doc->doc_id : std::string()},
          {"ade", {c.ade.start, c.ade.end}},
          {"drug", {c.drug.start, c.drug.end}},
          {"label", std::string(to_string(c.label))}};
}

CandidateRecord parse_candidate_json(std::string_view line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(at_line(line_no, std::string("invalid JSON: ") + e.what()));
  }
  try {
    CandidateRecord rec;
    rec.doc_id = j.at("doc_id").get<std::string>();
    rec.ade = span_from_json(j.at("ade"), EntityLabel::kAde, line_no);
    rec.drug = span_from_json(j.at("drug"), EntityLabel::kDrug, line_no);
    if (j.contains("label")) rec.label = parse_relation_label(j["label"].get<std::string>());
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(at_line(line_no, e.what()));
  }
}

nlohmann::json CorpusStats::to_json() const {
  return {{"n_sentences", n_sentences},
          {"n_tokens", n_tokens},
          {"n_entities", n_entities},
          {"n_entity_tags", n_entity_tags},
          {"n_positive_relations", n_positive_relations},
          {"n_negative_relations", n_negative_relations}};
}

CorpusStats corpus_stats(std::span<const Document> docs) {
  CorpusStats stats;
  for (auto label : {EntityLabel::kAde, EntityLabel::kDrug}) {
    stats.n_entities[std::string(to_string(label))] = 0;
    stats.n_entity_tags[std::string(to_string(label))] = 0;
  }
  for (const auto& doc : docs) {
    ++stats.n_sentences;
    stats.n_tokens += doc.tokens.size();
    if (doc.gold_spans) {
      for (const auto& s : *doc.gold_spans) {
        const std::string key(to_string(s.label));
        ++stats.n_entities[key];
        stats.n_entity_tags[key] += s.length();
      }
    }
    if (doc.gold_relations) {
      for (const auto& c : labeled_relation_candidates(doc)) {
        if (c.label == RelationLabel::kPositive) {
          ++stats.n_positive_relations;
        } else {
          ++stats.n_negative_relations;
        }
      }
    }
  }
  return stats;
}

std::vector<Fold> kfold_split(std::size_t n_docs, std::size_t k, std::uint64_t seed,
                              double dev_ratio) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2, got " + std::to_string(k));
  if (n_docs < k) {
    throw ConfigError("cannot split " + std::to_string(n_docs) + " documents into " +
                      std::to_string(k) + " folds");
  }
  if (!(dev_ratio >= 0.0 && dev_ratio < 1.0)) throw ConfigError("dev ratio must be in [0, 1)");
  std::vector<std::size_t> order(n_docs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Fold> folds(k);
  std::size_t begin = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = n_docs / k + (f < n_docs % k ? 1 : 0);
    auto& fold = folds[f];
    fold.test.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(begin + len));
    std::vector<std::size_t> train;
    train.insert(train.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(begin));
    train.insert(train.end(), order.begin() + static_cast<std::ptrdiff_t>(begin + len), order.end());
    begin += len;

    std::mt19937_64 dev_rng(seed + 0x9E3779B97F4A7C15ULL * (f + 1));
    std::shuffle(train.begin(), train.end(), dev_rng);
    auto n_dev = static_cast<std::size_t>(std::llround(dev_ratio * static_cast<double>(train.size())));
    if (n_dev >= train.size()) n_dev = train.size() - 1;
    fold.dev.assign(train.begin(), train.begin() + static_cast<std::ptrdiff_t>(n_dev));
    fold.train.assign(train.begin() + static_cast<std::ptrdiff_t>(n_dev), train.end());
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.dev.begin(), fold.dev.end());
    std::sort(fold.test.begin(), fold.test.end());
  }
  return folds;
}

}  // namespace ade
