#include "ade/iob.hpp"

#include <algorithm>

#include "ade/error.hpp"

namespace ade {

namespace {

bool is_begin(Tag t) { return t == Tag::kBAde || t == Tag::kBDrug; }
bool is_inside(Tag t) { return t == Tag::kIAde || t == Tag::kIDrug; }

EntityLabel label_of(Tag t) {
  return (t == Tag::kBAde || t == Tag::kIAde) ? EntityLabel::kAde : EntityLabel::kDrug;
}

Tag begin_tag(EntityLabel l) { return l == EntityLabel::kAde ? Tag::kBAde : Tag::kBDrug; }
Tag inside_tag(EntityLabel l) { return l == EntityLabel::kAde ? Tag::kIAde : Tag::kIDrug; }

}  // namespace

std::string_view to_string(Tag tag) { return kTagNames[static_cast<std::size_t>(tag)]; }

Tag parse_tag(std::string_view text) {
  if (text == "O") return Tag::kO;
  if (text.size() > 2 && text[1] == '-' && (text[0] == 'B' || text[0] == 'I')) {
    if (auto label = parse_entity_label(text.substr(2))) {
      return text[0] == 'B' ? begin_tag(*label) : inside_tag(*label);
    }
  }
  throw FormatError("unknown tag '" + std::string(text) + "'");
}

std::size_t repair_iob(std::span<Tag> tags) {
  std::size_t repairs = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!is_inside(tags[i])) continue;
    const bool continues = i > 0 && tags[i - 1] != Tag::kO && label_of(tags[i - 1]) == label_of(tags[i]);
    if (!continues) {
      tags[i] = begin_tag(label_of(tags[i]));
      ++repairs;
    }
  }
  return repairs;
}

std::vector<EntitySpan> spans_from_iob(std::span<const Tag> tags) {
  std::vector<EntitySpan> spans;
  for (std::size_t i = 0; i < tags.size();) {
    if (!is_begin(tags[i])) {
      ++i;
      continue;
    }
    const auto label = label_of(tags[i]);
    std::size_t j = i + 1;
    while (j < tags.size() && tags[j] == inside_tag(label)) ++j;
    spans.push_back({i, j, label});
    i = j;
  }
  return spans;
}

IobDecodeResult decode_iob(std::span<const Tag> tags) {
  std::vector<Tag> copy(tags.begin(), tags.end());
  IobDecodeResult result;
  result.repairs = repair_iob(copy);
  result.spans = spans_from_iob(copy);
  return result;
}

std::vector<Tag> encode_iob(std::size_t n_tokens, std::span<const EntitySpan> spans) {
  std::vector<Tag> tags(n_tokens, Tag::kO);
  std::vector<bool> used(n_tokens, false);
  for (const auto& s : spans) {
    check_span(s, n_tokens);
    for (std::size_t i = s.start; i < s.end; ++i) {
      if (used[i]) {
        throw EncodingError("overlapping spans at token " + std::to_string(i) +
                            "; IOB cannot encode overlap");
      }
      used[i] = true;
      tags[i] = i == s.start ? begin_tag(s.label) : inside_tag(s.label);
    }
  }
  return tags;
}

std::vector<std::string> iob_to_bioes(std::span<const Tag> tags) {
  std::vector<Tag> valid(tags.begin(), tags.end());
  repair_iob(valid);
  std::vector<std::string> out(valid.size(), "O");
  for (const auto& s : spans_from_iob(valid)) {
    const std::string label(to_string(s.label));
    if (s.length() == 1) {
      out[s.start] = "S-" + label;
      continue;
    }
    out[s.start] = "B-" + label;
    for (std::size_t i = s.start + 1; i + 1 < s.end; ++i) out[i] = "I-" + label;
    out[s.end - 1] = "E-" + label;
  }
  return out;
}

std::vector<Tag> bioes_to_iob(std::span<const std::string> tags) {
  std::vector<Tag> out;
  out.reserve(tags.size());
  for (const auto& t : tags) {
    if (t == "O") {
      out.push_back(Tag::kO);
      continue;
    }
    if (t.size() < 3 || t[1] != '-') throw FormatError("unknown BIOES tag '" + t + "'");
    auto label = parse_entity_label(std::string_view(t).substr(2));
    if (!label) throw FormatError("unknown BIOES tag '" + t + "'");
    switch (t[0]) {
      case 'B':
      case 'S':
        out.push_back(begin_tag(*label));
        break;
      case 'I':
      case 'E':
        out.push_back(inside_tag(*label));
        break;
      default:
        throw FormatError("unknown BIOES tag '" + t + "'");
    }
  }
  return out;
}

}  // namespace ade
