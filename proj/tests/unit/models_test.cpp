#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include <zlib.h>

#include "ade/bundle.hpp"
#include "ade/classifier.hpp"
#include "ade/corpus.hpp"
#include "ade/error.hpp"
#include "ade/ner.hpp"
#include "ade/relation.hpp"
#include "ade/tokenizer.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace ade;
using namespace ade::testing;

namespace {

NerConfig small_ner() {
  NerConfig c;
  c.lstm_state = 8;
  c.char_dim = 4;
  c.char_filters = 5;
  return c;
}

ReConfig small_re() {
  ReConfig c;
  c.hidden = {16, 8};
  return c;
}

}  // namespace

// ---- classifier

TEST(Classifier, DefaultsFollowTrainingSettings) {
  ClassifierConfig c;
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.0003);
  EXPECT_DOUBLE_EQ(c.train.decay_po, 0.005);
  EXPECT_EQ(c.train.batch_size, 8u);
  EXPECT_DOUBLE_EQ(c.train.dropout_rate, 0.2);
  EXPECT_GE(c.train.epochs, 25u);
  EXPECT_LE(c.train.epochs, 30u);
}

TEST(Classifier, ZeroModelTiesToNeg) {
  auto store = random_store({"a", "b"}, 6, 1);
  auto model = ClassifierModel::zeros(6);
  auto p = model.classify(make_document("d", "a b c"), store);
  EXPECT_EQ(p.label, DocClass::kNeg);
  EXPECT_DOUBLE_EQ(p.probabilities[0], 0.5);
  EXPECT_DOUBLE_EQ(p.probabilities[1], 0.5);
}

TEST(Classifier, EmptyAndSingleClassCorporaFail) {
  auto c = classifier_cluster_corpus(6, 8, 1);
  EXPECT_THROW(train_classifier({}, c.store), TrainingError);
  std::vector<Document> neg;
  for (auto& d : c.docs) {
    if (*d.gold_class == DocClass::kNeg) neg.push_back(d);
  }
  EXPECT_THROW(train_classifier(neg, c.store), TrainingError);
}

TEST(Classifier, DimMismatchIsDimensionError) {
  auto model = ClassifierModel::zeros(6);
  auto store = random_store({"a"}, 5, 1);
  EXPECT_THROW(model.classify(make_document("d", "a"), store), DimensionError);
}

TEST(Classifier, LearnsSeparableClustersAndIsPermutationInvariant) {
  auto c = classifier_cluster_corpus(40, 16, 3);
  TrainReport report;
  auto model = train_classifier(c.docs, c.store, {}, {}, &report);
  EXPECT_EQ(report.epochs.size(), 30u);
  auto scores = evaluate_classifier(model, c.docs, c.store);
  EXPECT_DOUBLE_EQ(scores.micro.f1, 1.0);
  std::mt19937_64 rng(1);
  for (auto d : c.docs) {
    auto before = model.classify(d, c.store);
    EXPECT_NEAR(before.probabilities[0] + before.probabilities[1], 1.0, 1e-6);
    std::shuffle(d.tokens.begin(), d.tokens.end(), rng);
    EXPECT_EQ(model.classify(d, c.store).label, before.label);
  }
}

TEST(Classifier, TrainingIsDeterministic) {
  auto c = classifier_cluster_corpus(12, 8, 4);
  ClassifierConfig cfg;
  cfg.train.epochs = 3;
  auto a = train_classifier(c.docs, c.store, cfg).to_bundle();
  auto b = train_classifier(c.docs, c.store, cfg).to_bundle();
  a.manifest["created"] = b.manifest["created"];
  EXPECT_EQ(serialize_bundle(a), serialize_bundle(b));
}

TEST(Classifier, EvaluateNeedsGoldLabels) {
  auto store = random_store({"a"}, 4, 1);
  std::vector<Document> docs{make_document("d", "a")};
  EXPECT_THROW(evaluate_classifier(ClassifierModel::zeros(4), docs, store), EvaluationError);
}

// ---- ner

TEST(Ner, DefaultsFollowTrainingSettings) {
  NerConfig c;
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.001);
  EXPECT_EQ(c.train.batch_size, 8u);
  EXPECT_DOUBLE_EQ(c.train.dropout_rate, 0.5);
  EXPECT_EQ(c.lstm_state, 200u);
  EXPECT_EQ(c.char_filters, 25u);
  EXPECT_EQ(c.char_kernel, 3u);
}

TEST(Ner, CharFeatures) {
  auto docs = std::vector<Document>{make_document("d", "Advil advil x")};
  std::mt19937_64 rng(2);
  auto model = NerModel::init(6, CharVocab::build(docs), NerConfig{}, rng);
  EXPECT_EQ(model.char_features("Advil").size(), 25u);
  EXPECT_EQ(model.char_features("Advil"), model.char_features("Advil"));
  EXPECT_NE(model.char_features("Advil"), model.char_features("advil"));
  EXPECT_EQ(model.char_features("x").size(), 25u);
  EXPECT_EQ(model.char_features("\xc3\xa9").size(), 25u);  // unknown char maps to UNK
  EXPECT_THROW(model.char_features(""), EmptySequenceError);
}

TEST(Ner, CharVocabIsTotal) {
  std::vector<Document> docs{make_document("d", "ab")};
  auto v = CharVocab::build(docs);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_NE(v.id(U'a'), CharVocab::kUnknown);
  EXPECT_EQ(v.id(U'z'), CharVocab::kUnknown);
}

TEST(Ner, LogitShapeAndZeroModelDecodesToO) {
  auto store = random_store({"a"}, 6, 1);
  std::vector<Document> docs{make_document("d", "a b c d")};
  auto zero = NerModel::zeros(6, CharVocab::build(docs), small_ner());
  std::mt19937_64 rng(3);
  auto model = NerModel::init(6, CharVocab::build(docs), small_ner(), rng);
  for (std::size_t L = 1; L <= 5; ++L) {
    std::string text;
    for (std::size_t i = 0; i < L; ++i) text += "w ";
    auto d = make_document("x", text);
    EXPECT_EQ(model.tag_logits(d, store).shape(), (Shape{L, 5}));
    EXPECT_TRUE(zero.predict_entities(d, store).empty());
  }
  EXPECT_TRUE(model.predict_entities(make_document("e", ""), store).empty());
  EXPECT_THROW(model.tag_logits(make_document("e", ""), store), EmptySequenceError);
}

TEST(Ner, DecodeTagsExamples) {
  auto logits_for = [](std::vector<Tag> tags) {
    std::vector<float> data(tags.size() * 5, 0.0f);
    for (std::size_t i = 0; i < tags.size(); ++i) data[i * 5 + static_cast<std::size_t>(tags[i])] = 1.0f;
    return Tensor({tags.size(), 5}, data);
  };
  auto a = decode_tags(logits_for({Tag::kBAde, Tag::kIAde, Tag::kO, Tag::kBDrug}));
  EXPECT_EQ(a.spans, (std::vector<EntitySpan>{{0, 2, EntityLabel::kAde}, {3, 4, EntityLabel::kDrug}}));
  auto b = decode_tags(logits_for({Tag::kO, Tag::kIAde}));
  EXPECT_EQ(b.spans, (std::vector<EntitySpan>{{1, 2, EntityLabel::kAde}}));
  EXPECT_EQ(b.repairs, 1u);
  EXPECT_TRUE(decode_tags(logits_for({Tag::kO, Tag::kO})).spans.empty());
}

TEST(Ner, DecodeFuzzGivesWellFormedDisjointSpans) {
  std::mt19937_64 rng(9);
  std::normal_distribution<float> dist;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t L = 1 + rng() % 12;
    std::vector<float> data(L * 5);
    for (auto& v : data) v = dist(rng);
    auto spans = decode_tags(Tensor({L, 5}, data)).spans;
    for (std::size_t i = 0; i < spans.size(); ++i) {
      ASSERT_LT(spans[i].start, spans[i].end);
      ASSERT_LE(spans[i].end, L);
      if (i > 0) ASSERT_LE(spans[i - 1].end, spans[i].start);
    }
  }
}

TEST(Ner, CharFilterGradientMatchesFiniteDifferences) {
  auto store = random_store({"took", "advil", "today"}, 4, 5);
  auto doc = make_document("d", "took Advil today");
  std::vector<Document> docs{doc};
  std::mt19937_64 rng(5);
  auto model = NerModel::init(4, CharVocab::build(docs), small_ner(), rng);
  auto input = model.make_input(doc, store);
  auto w = model.weights().cast<double>();
  std::vector<std::size_t> labels{0, 3, 0};
  auto result = check_gradients({{"char_filters", w.char_filters}, {"char_embeddings", w.char_embeddings}},
                                [&] { return softmax_cross_entropy(ner_forward(w, input), labels); });
  EXPECT_LE(result.max_relative_error, 1e-4) << result.worst_leaf;
}

TEST(Ner, FixedBatchLossDecreasesOverFirstSteps) {
  auto c = ner_template_corpus(8, 12, 6);
  auto cfg = small_ner();
  cfg.train.dropout_rate = 0.0;
  std::mt19937_64 rng(6);
  auto model = NerModel::init(12, CharVocab::build(c.docs), cfg, rng);
  NerTrainer trainer(model, c.store, 1);
  std::vector<const Document*> batch;
  for (const auto& d : c.docs) batch.push_back(&d);
  double prev = trainer.step(batch, 0);
  for (int i = 0; i < 4; ++i) {
    double cur = trainer.step(batch, 0);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(Ner, LearnsTemplateCorpus) {
  auto c = ner_template_corpus(20, 32, 7);
  NerConfig cfg;
  TrainReport report;
  auto model = train_ner(c.docs, c.store, cfg, {}, &report);
  EXPECT_EQ(report.epochs.size(), cfg.train.epochs);
  auto r = evaluate_ner(model, c.docs, c.store, MatchMode::kStrict);
  EXPECT_DOUBLE_EQ(r.scores.micro.f1, 1.0);
  // inference determinism
  EXPECT_EQ(model.predict_entities(c.docs[0], c.store), model.predict_entities(c.docs[0], c.store));
}

TEST(Ner, EntityFreeDocsAndEmptyCorpus) {
  auto c = ner_template_corpus(4, 8, 8);
  auto plain = make_document("plain", "nothing here");
  plain.gold_spans = std::vector<EntitySpan>{};
  c.docs.push_back(plain);
  auto cfg = small_ner();
  cfg.train.epochs = 2;
  EXPECT_NO_THROW(train_ner(c.docs, c.store, cfg));
  EXPECT_THROW(train_ner({}, c.store, cfg), TrainingError);
}

TEST(Ner, WordTuningUpdatesTable) {
  auto c = ner_template_corpus(6, 8, 10);
  auto cfg = small_ner();
  cfg.train.epochs = 2;
  cfg.tune_word_embeddings = true;
  auto model = train_ner(c.docs, c.store, cfg);
  ASSERT_TRUE(model.weights().word_table.has_value());
  auto back = NerModel::from_bundle(parse_bundle(serialize_bundle(model.to_bundle())));
  EXPECT_EQ(back.tag_logits(c.docs[0], c.store).data()[0],
            model.tag_logits(c.docs[0], c.store).data()[0]);
}

// ---- relation features

TEST(ReFeatures, SpanEmbedding) {
  auto store = random_store({"a", "b"}, 4, 1);
  auto d = token_doc("d", {"a", "a", "b", "zz"});
  EXPECT_EQ(span_embedding(d, {0, 1, EntityLabel::kAde}, store), store.lookup("a"));
  auto two = span_embedding(d, {0, 2, EntityLabel::kAde}, store);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_FLOAT_EQ(two[i], store.lookup("a")[i]);
  EXPECT_EQ(span_embedding(d, {3, 4, EntityLabel::kAde}, store), std::vector<float>(4, 0.0f));
  EXPECT_THROW(span_embedding(d, {3, 5, EntityLabel::kAde}, store), SpanError);
}

TEST(ReFeatures, SemanticSimilarity) {
  std::vector<float> v{1, 2, 3}, neg{-1, -2, -3}, x{1, 0, 0}, y{0, 1, 0}, z{0, 0, 0};
  EXPECT_NEAR(semantic_similarity(v, v), 1.0, 1e-12);
  EXPECT_NEAR(semantic_similarity(x, y), 0.0, 1e-12);
  EXPECT_NEAR(semantic_similarity(v, neg), -1.0, 1e-12);
  EXPECT_EQ(semantic_similarity(v, z), 0.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<float> dist;
  for (int i = 0; i < 200; ++i) {
    std::vector<float> a(5), b(5);
    for (auto& t : a) t = dist(rng);
    for (auto& t : b) t = dist(rng);
    EXPECT_EQ(semantic_similarity(a, b), semantic_similarity(b, a));
    EXPECT_LE(std::abs(semantic_similarity(a, b)), 1.0);
  }
}

TEST(ReFeatures, SyntacticDistanceExamples) {
  auto d = token_doc("d", {"x", "y", "z", "w", "v", "u"});
  EntitySpan a{0, 1, EntityLabel::kAde}, b{4, 6, EntityLabel::kDrug};
  auto no_dep = syntactic_distance(d, a, b);
  EXPECT_EQ(no_dep.distance, 3u);
  EXPECT_FALSE(no_dep.dep_available);
  EXPECT_EQ(syntactic_distance(d, a, a).distance, 0u);

  auto chain = token_doc("c", {"a", "b", "c"});
  chain.dep_heads = std::vector<int>{-1, 0, 1};
  auto r = syntactic_distance(chain, {0, 1, EntityLabel::kAde}, {2, 3, EntityLabel::kDrug});
  EXPECT_EQ(r.distance, 2u);
  EXPECT_TRUE(r.dep_available);

  chain.dep_heads = std::vector<int>{1, 2, 0};
  EXPECT_THROW(syntactic_distance(chain, {0, 1, EntityLabel::kAde}, {2, 3, EntityLabel::kDrug}),
               DependencyError);
}

TEST(ReFeatures, SyntacticDistanceMatchesBfsOracleOnRandomTrees) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 10;
    std::vector<std::string> tokens(n, "t");
    auto d = token_doc("t", tokens);
    d.dep_heads = random_tree(rng, n);
    const auto i = rng() % n, j = rng() % n, k = rng() % n;
    auto span = [](std::size_t t) { return EntitySpan{t, t + 1, EntityLabel::kAde}; };
    const auto dij = syntactic_distance(d, span(i), span(j)).distance;
    const auto dji = syntactic_distance(d, span(j), span(i)).distance;
    const auto djk = syntactic_distance(d, span(j), span(k)).distance;
    const auto dik = syntactic_distance(d, span(i), span(k)).distance;
    ASSERT_EQ(dij, tree_distance(*d.dep_heads, i, j));
    ASSERT_EQ(dij, dji);
    ASSERT_LE(dik, dij + djk);
  }
}

TEST(ReFeatures, DisconnectedHeadsFallBackToBoundaryGap) {
  auto d = token_doc("d", {"a", "b", "c", "e"});
  d.dep_heads = std::vector<int>{-1, 0, -1, 2};
  auto r = syntactic_distance(d, {0, 1, EntityLabel::kAde}, {3, 4, EntityLabel::kDrug});
  EXPECT_FALSE(r.dep_available);
  EXPECT_EQ(r.distance, 2u);
}

TEST(ReFeatures, GoldenLengthAndLayout) {
  // 6 * 200 + 4 = 1204, padded to the next multiple of 16.
  EXPECT_EQ(feature_length(200, {}), 1216u);
  auto store = random_store({"pain", "aspirin", "w"}, 200, 3);
  auto d = token_doc("d", {"pain", "w", "w", "aspirin", "w"});
  EntitySpan ade{0, 1, EntityLabel::kAde}, drug{3, 4, EntityLabel::kDrug};
  auto f = build_features(d, ade, drug, store);
  ASSERT_EQ(f.size(), 1216u);
  EXPECT_EQ(f, build_features(d, ade, drug, store));
  for (std::size_t i = 1204; i < 1216; ++i) EXPECT_EQ(f[i], 0.0f);
  EXPECT_FLOAT_EQ(f[401], 3.0f / 5.0f);  // signed linear distance
  EXPECT_FLOAT_EQ(f[402], 2.0f);         // boundary gap
  EXPECT_EQ(f[403], 0.0f);
  for (std::size_t i = 404; i < 604; ++i) EXPECT_EQ(f[i], 0.0f);  // ADE left context is empty
  EXPECT_GE(f[400], -1.0f);
  EXPECT_LE(f[400], 1.0f);
}

// ---- relation model

TEST(ReModel, DefaultsFollowTrainingSettings) {
  ReConfig c;
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.0001);
  EXPECT_EQ(c.train.batch_size, 8u);
  EXPECT_DOUBLE_EQ(c.train.dropout_rate, 0.5);
  EXPECT_EQ(c.train.epochs, 50u);
}

TEST(ReModel, ZeroModelTiesToNegative) {
  auto store = random_store({"a"}, 4, 1);
  auto d = token_doc("d", {"a", "b"});
  auto p = ReModel::zeros(4).classify(d, {0, 1, EntityLabel::kAde}, {1, 2, EntityLabel::kDrug}, store);
  EXPECT_EQ(p.label, RelationLabel::kNegative);
  EXPECT_DOUBLE_EQ(p.probabilities[0], 0.5);
}

TEST(ReModel, SingleClassDataFails) {
  auto c = re_distance_corpus(10, 8, 1);
  std::vector<RelationCandidate> cands;
  for (const auto& d : c.docs) {
    for (auto cand : labeled_relation_candidates(d)) {
      if (cand.label == RelationLabel::kPositive) cands.push_back(cand);
    }
  }
  EXPECT_THROW(train_re(cands, c.store, small_re()), TrainingError);
}

TEST(ReModel, ImbalanceIsAcceptedWithWarning) {
  auto c = re_distance_corpus(60, 8, 2);
  std::vector<RelationCandidate> cands;
  std::size_t negatives = 0;
  for (const auto& d : c.docs) {
    for (auto cand : labeled_relation_candidates(d)) {
      if (cand.label == RelationLabel::kNegative && negatives++ >= 2) continue;
      cands.push_back(cand);
    }
  }
  auto cfg = small_re();
  cfg.train.epochs = 2;
  TrainReport report;
  train_re(cands, c.store, cfg, {}, &report);
  ASSERT_EQ(report.warnings.size(), 1u);
  EXPECT_NE(report.warnings[0].find("imbalance"), std::string::npos);
}

TEST(ReModel, LearnsDistanceThreshold) {
  auto c = re_distance_corpus(80, 16, 3);
  std::vector<RelationCandidate> cands;
  for (const auto& d : c.docs) {
    for (auto cand : labeled_relation_candidates(d)) cands.push_back(cand);
  }
  auto model = train_re(cands, c.store);
  EXPECT_DOUBLE_EQ(evaluate_re(model, cands, c.store).macro.f1, 1.0);
}

// ---- bundles

TEST(Bundles, RoundTripIsBitwiseForAllStages) {
  std::mt19937_64 rng(4);
  auto c = ner_template_corpus(4, 8, 4);
  auto ner = NerModel::init(8, CharVocab::build(c.docs), small_ner(), rng);
  auto cls = ClassifierModel(Fcnn::init({8, {4, 3}, 2, 0.01}, rng), ClassifierConfig{});
  auto re = ReModel(Fcnn::init({feature_length(8, {}), {4}, 2, 0.01}, rng), small_re(), 8);
  for (const auto& bundle : {cls.to_bundle(), ner.to_bundle(), re.to_bundle()}) {
    const auto bytes = serialize_bundle(bundle);
    const auto parsed = parse_bundle(bytes);
    Bundle again;
    switch (parsed.kind) {
      case StageKind::kClassifier:
        again = ClassifierModel::from_bundle(parsed).to_bundle();
        break;
      case StageKind::kNer:
        again = NerModel::from_bundle(parsed).to_bundle();
        break;
      case StageKind::kRe:
        again = ReModel::from_bundle(parsed).to_bundle();
        break;
    }
    again.manifest["created"] = parsed.manifest["created"];
    EXPECT_EQ(serialize_bundle(again), bytes) << to_string(bundle.kind);
  }
  // Loaded models predict the same as the originals.
  auto back = NerModel::from_bundle(parse_bundle(serialize_bundle(ner.to_bundle())));
  auto a = ner.tag_logits(c.docs[0], c.store), b = back.tag_logits(c.docs[0], c.store);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST(Bundles, TruncationAndCorruptionAreDetected) {
  auto bytes = serialize_bundle(ClassifierModel::zeros(4).to_bundle());
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(parse_bundle(std::string_view(bytes).substr(0, cut)), CorruptionError);
  }
  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x20;
  EXPECT_THROW(parse_bundle(flipped), CorruptionError);
}

TEST(Bundles, VersionAndKindAreChecked) {
  auto bytes = serialize_bundle(ClassifierModel::zeros(4).to_bundle());
  EXPECT_THROW(NerModel::from_bundle(parse_bundle(bytes)), FormatError);

  auto reseal = [](std::string body) {
    body.resize(body.size() - 4);
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
    body.append(reinterpret_cast<const char*>(&crc), 4);
    return body;
  };
  auto v2 = bytes;
  v2[4] = 2;
  try {
    parse_bundle(reseal(v2));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  auto unknown = bytes;
  const auto pos = unknown.find("\"classifier\"");
  ASSERT_NE(pos, std::string::npos);
  unknown.replace(pos, 12, "\"tokenizer1\"");
  EXPECT_THROW(parse_bundle(reseal(unknown)), FormatError);
}

TEST(Bundles, DimensionCheck) {
  auto b = ClassifierModel::zeros(200).to_bundle();
  EXPECT_NO_THROW(check_bundle_dim(b, 200));
  EXPECT_THROW(check_bundle_dim(b, 100), ConfigError);
}
