#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "ade/corpus.hpp"

// Runs only when the real corpus files are supplied through the environment.

TEST(Dataset, TokenCorpusMatchesReferenceCounts) {
  const char* path = std::getenv("ADE_CORPUS_CONLL");
  if (!path) GTEST_SKIP() << "set ADE_CORPUS_CONLL to the CoNLL corpus to run";
  const auto docs = ade::read_conll(std::filesystem::path(path));
  auto s = ade::corpus_stats(docs);
  EXPECT_EQ(s.n_sentences, 4272u);
  EXPECT_EQ(s.n_tokens, 86865u);
  EXPECT_EQ(s.n_entity_tags["ADE"], 12264u);
  EXPECT_EQ(s.n_entity_tags["Drug"], 5544u);
}

TEST(Dataset, RelationCorpusMatchesReferenceCounts) {
  const char* path = std::getenv("ADE_RELATIONS_JSONL");
  if (!path) GTEST_SKIP() << "set ADE_RELATIONS_JSONL to the relation documents to run";
  const auto docs = ade::read_jsonl_docs(std::filesystem::path(path));
  const auto s = ade::corpus_stats(docs);
  EXPECT_EQ(s.n_positive_relations, 6821u);
  EXPECT_EQ(s.n_negative_relations, 183u);
}
