#pragma once

#include <string_view>
#include <vector>

#include "ade/document.hpp"

namespace ade {

/// Splits on whitespace, then peels leading and trailing ASCII punctuation
/// off each chunk as one-character tokens. Inner symbols stay attached
/// ("haven't"), and a leading '@' or '#' is kept so mentions and hashtags
/// remain whole. Offsets are code-point offsets into `text`.
std::vector<Token> tokenize(std::string_view text);

// Builds a document from raw text with the tokenizer above.
Document make_document(std::string doc_id, std::string text);

}  // namespace ade
