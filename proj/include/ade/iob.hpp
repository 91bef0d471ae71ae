#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ade/document.hpp"

namespace ade {

// Fixed NER tagset; O comes first so argmax ties decode to O.
enum class Tag : std::size_t { kO = 0, kBAde = 1, kIAde = 2, kBDrug = 3, kIDrug = 4 };

inline constexpr std::size_t kNumTags = 5;
inline constexpr std::array<std::string_view, kNumTags> kTagNames = {"O", "B-ADE", "I-ADE",
                                                                     "B-Drug", "I-Drug"};

std::string_view to_string(Tag tag);
// Throws FormatError for anything outside the tagset (label match is
// case-insensitive: "B-DRUG" is accepted).
Tag parse_tag(std::string_view text);

// Rewrites every I-X that does not follow B-X or I-X into B-X.
// Returns the number of rewritten tags.
std::size_t repair_iob(std::span<Tag> tags);

// Spans of a valid (already repaired) IOB sequence.
std::vector<EntitySpan> spans_from_iob(std::span<const Tag> tags);

// Repair followed by span extraction.
struct IobDecodeResult {
  std::vector<EntitySpan> spans;
  std::size_t repairs = 0;
};
IobDecodeResult decode_iob(std::span<const Tag> tags);

// Throws EncodingError when spans overlap and SpanError when out of range.
std::vector<Tag> encode_iob(std::size_t n_tokens, std::span<const EntitySpan> spans);

// BIOES is a conversion target only.
std::vector<std::string> iob_to_bioes(std::span<const Tag> tags);
std::vector<Tag> bioes_to_iob(std::span<const std::string> tags);

}  // namespace ade
