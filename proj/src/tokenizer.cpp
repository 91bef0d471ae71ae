#include "ade/tokenizer.hpp"

#include "ade/utf8.hpp"

namespace ade {

namespace {

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == 0x00A0 || c == 0x2009 || c == 0x200A || c == 0x202F || c == 0x3000;
}

bool is_punct(char32_t c) {
  return (c >= U'!' && c <= U'/') || (c >= U':' && c <= U'@') || (c >= U'[' && c <= U'`') ||
         (c >= U'{' && c <= U'~');
}

bool keeps_prefix(char32_t c) { return c == U'@' || c == U'#'; }

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  const auto decoded = utf8::decode(text);
  const auto& cps = decoded.code_points;
  const auto& offs = decoded.byte_offsets;
  std::vector<Token> tokens;
  auto emit = [&](std::size_t a, std::size_t b) {
    tokens.push_back({std::string(text.substr(offs[a], offs[b] - offs[a])), a, b});
  };

  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && is_space(cps[i])) ++i;
    std::size_t j = i;
    while (j < cps.size() && !is_space(cps[j])) ++j;
    if (j == i) break;

    std::size_t a = i, b = j;
    std::vector<std::size_t> leading;
    while (a < b && is_punct(cps[a]) && !(keeps_prefix(cps[a]) && a + 1 < b && !is_punct(cps[a + 1]))) {
      leading.push_back(a);
      ++a;
    }
    std::size_t trail_start = b;
    while (trail_start > a && is_punct(cps[trail_start - 1])) --trail_start;

    for (auto p : leading) emit(p, p + 1);
    if (trail_start > a) emit(a, trail_start);
    for (std::size_t p = trail_start; p < b; ++p) emit(p, p + 1);
    i = j;
  }
  return tokens;
}

Document make_document(std::string doc_id, std::string text) {
  Document doc;
  doc.doc_id = std::move(doc_id);
  doc.tokens = tokenize(text);
  doc.text = std::move(text);
  return doc;
}

}  // namespace ade
