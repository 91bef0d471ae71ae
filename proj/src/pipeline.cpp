#include "ade/pipeline.hpp"

#include <fstream>

#include "ade/bundle.hpp"
#include "ade/corpus.hpp"
#include "ade/error.hpp"

namespace ade {

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char head[4] = {};
  in.read(head, 4);
  in.close();
  if (std::string_view(head, 4) == "ADEV") return EmbeddingStore::load_binary(path);
  return EmbeddingStore::load_text(path);
}

nlohmann::json PipelineManifest::to_json() const {
  return {{"embeddings", embeddings.string()},
          {"classifier", classifier ? nlohmann::json(classifier->string()) : nlohmann::json()},
          {"ner", ner.string()},
          {"re", re.string()}};
}

PipelineManifest PipelineManifest::from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() ? base / path : path;
  };
  try {
    PipelineManifest m;
    m.embeddings = resolve(j.at("embeddings").get<std::string>());
    if (j.contains("classifier") && !j["classifier"].is_null()) {
      m.classifier = resolve(j["classifier"].get<std::string>());
    }
    m.ner = resolve(j.at("ner").get<std::string>());
    m.re = resolve(j.at("re").get<std::string>());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad pipeline manifest: ") + e.what());
  }
}

void PipelineManifest::save(const std::filesystem::path& path) const {
  write_file(path, to_json().dump(2) + "\n");
}

PipelineManifest PipelineManifest::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("bad pipeline manifest " + path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

void Pipeline::validate() const {
  if (!store) throw ConfigError("pipeline has no embedding store");
  const auto dim = store->dim();
  auto check = [&](const char* stage, std::size_t d) {
    if (d != dim) {
      throw ConfigError(std::string(stage) + " stage expects embedding dim " + std::to_string(d) +
                        ", store has " + std::to_string(dim));
    }
  };
  if (classifier) check("classifier", classifier->input_dim());
  check("ner", ner.word_dim());
  check("re", re.embedding_dim());
}

Pipeline Pipeline::load(const PipelineManifest& manifest) {
  Pipeline p;
  p.store = std::make_shared<EmbeddingStore>(load_embeddings(manifest.embeddings));
  const auto dim = p.store->dim();
  if (manifest.classifier) {
    auto b = load_bundle(*manifest.classifier);
    check_bundle_dim(b, dim);
    p.classifier = ClassifierModel::from_bundle(b);
  }
  auto nb = load_bundle(manifest.ner);
  check_bundle_dim(nb, dim);
  p.ner = NerModel::from_bundle(nb);
  auto rb = load_bundle(manifest.re);
  check_bundle_dim(rb, dim);
  p.re = ReModel::from_bundle(rb);
  p.validate();
  return p;
}

nlohmann::json PipelineOutput::to_json() const {
  nlohmann::json ents = nlohmann::json::array();
  for (const auto& e : entities) {
    ents.push_back({{"text", e.text},
                    {"label", std::string(ade::to_string(e.span.label))},
                    {"start", e.span.start},
                    {"end", e.span.end},
                    {"char_start", e.char_start},
                    {"char_end", e.char_end}});
  }
  nlohmann::json rels = nlohmann::json::array();
  for (const auto& r : relations) {
    const auto& a = entities[r.ade];
    const auto& d = entities[r.drug];
    rels.push_back({{"ade", a.text},
                    {"drug", d.text},
                    {"ade_span", {a.span.start, a.span.end}},
                    {"drug_span", {d.span.start, d.span.end}},
                    {"label", std::string(ade::to_string(r.label))},
                    {"probability", r.probability}});
  }
  nlohmann::json j{{"doc_id", doc_id}, {"entities", ents}, {"relations", rels}};
  j["class"] = doc_class ? nlohmann::json(std::string(ade::to_string(*doc_class))) : nlohmann::json();
  j["class_probability"] = class_probability ? nlohmann::json(*class_probability) : nlohmann::json();
  return j;
}

PipelineOutput run_pipeline(const Pipeline& pipeline, const Document& doc) {
  const auto& store = *pipeline.store;
  PipelineOutput out;
  out.doc_id = doc.doc_id;
  if (pipeline.classifier) {
    const auto c = pipeline.classifier->classify(doc, store);
    out.doc_class = c.label;
    out.class_probability = c.probabilities[static_cast<std::size_t>(c.label)];
    if (c.label == DocClass::kNeg) return out;
  }
  const auto spans = pipeline.ner.predict_entities(doc, store);
  for (const auto& s : spans) {
    out.entities.push_back({doc.span_text(s), s, doc.tokens[s.start].char_start,
                            doc.tokens[s.end - 1].char_end});
  }
  auto index_of = [&](const EntitySpan& s) {
    for (std::size_t i = 0; i < spans.size(); ++i) {
      if (spans[i] == s) return i;
    }
    throw ConsistencyError("candidate span is not a predicted entity");
  };
  for (const auto& cand : generate_relation_candidates(doc, spans)) {
    const auto p = pipeline.re.classify(doc, cand.ade, cand.drug, store);
    const auto k = p.label == RelationLabel::kPositive ? 1 : 0;
    out.relations.push_back({index_of(cand.ade), index_of(cand.drug), p.label, p.probabilities[k]});
  }
  return out;
}

}  // namespace ade
