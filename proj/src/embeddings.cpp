#include "ade/embeddings.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "ade/binio.hpp"
#include "ade/error.hpp"

namespace ade {

namespace {

constexpr char kVectorMagic[4] = {'A', 'D', 'E', 'V'};
constexpr std::uint32_t kVectorFormatVersion = 1;

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename N>
bool parse_number(std::string_view s, N& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string_view to_string(OovPolicy policy) {
  return policy == OovPolicy::kZeros ? "zeros" : "hashed-bucket";
}

OovPolicy parse_oov_policy(std::string_view name) {
  if (name == "zeros") return OovPolicy::kZeros;
  if (name == "hashed-bucket") return OovPolicy::kHashedBucket;
  throw ConfigError("unknown OOV policy '" + std::string(name) + "'");
}

EmbeddingStore::EmbeddingStore(std::size_t dim, OovPolicy policy, std::size_t buckets)
    : dim_(dim), policy_(policy), buckets_(buckets) {
  if (dim == 0) throw DimensionError("embedding dimension must be positive");
  if (buckets == 0) throw ConfigError("OOV bucket count must be positive");
}

bool EmbeddingStore::add(std::string token, std::span<const float> vector) {
  if (vector.size() != dim_) {
    throw DimensionError("vector for '" + token + "' has " + std::to_string(vector.size()) +
                         " values, store dimension is " + std::to_string(dim_));
  }
  if (index_.count(token)) return false;
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
  matrix_.insert(matrix_.end(), vector.begin(), vector.end());
  return true;
}

EmbeddingStore EmbeddingStore::parse_text(std::string_view text,
                                          std::optional<std::size_t> expected_dim,
                                          VectorLoadReport* report) {
  VectorLoadReport local;
  std::optional<EmbeddingStore> store;
  std::optional<std::size_t> dim = expected_dim;
  std::vector<float> values;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;

    if (line_no == 1 && fields.size() == 2) {
      std::size_t v = 0, d = 0;
      if (parse_number(fields[0], v) && parse_number(fields[1], d)) {
        local.had_header = true;
        if (expected_dim && d != *expected_dim) {
          throw DimensionError("vector file header declares dimension " + std::to_string(d) +
                               ", expected " + std::to_string(*expected_dim));
        }
        dim = d;
        continue;
      }
    }

    const std::size_t d = fields.size() - 1;
    if (d == 0) {
      throw FormatError("line " + std::to_string(line_no) + ": token without vector values");
    }
    if (!dim) {
      dim = d;
    } else if (d != *dim) {
      if (expected_dim && !store && !local.had_header) {
        throw DimensionError("line " + std::to_string(line_no) + ": vector dimension " +
                             std::to_string(d) + " does not match expected " +
                             std::to_string(*expected_dim));
      }
      throw FormatError("line " + std::to_string(line_no) + ": vector has " + std::to_string(d) +
                        " values, expected " + std::to_string(*dim));
    }
    if (!store) store.emplace(*dim);
    values.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      if (!parse_number(fields[i + 1], values[i])) {
        throw FormatError("line " + std::to_string(line_no) + ": bad number '" +
                          std::string(fields[i + 1]) + "'");
      }
    }
    ++local.lines;
    if (!store->add(std::string(fields[0]), values)) ++local.duplicates;
  }
  if (!store) {
    if (!dim) throw DimensionError("empty vector file and no expected dimension given");
    store.emplace(*dim);
  }
  if (report) *report = local;
  return std::move(*store);
}

EmbeddingStore EmbeddingStore::load_text(const std::filesystem::path& path,
                                         std::optional<std::size_t> expected_dim,
                                         VectorLoadReport* report) {
  return parse_text(read_file(path), expected_dim, report);
}

void EmbeddingStore::save_binary(const std::filesystem::path& path) const {
  nlohmann::json manifest = {{"dim", dim_},
                             {"vocab_size", tokens_.size()},
                             {"oov_policy", std::string(to_string(policy_))},
                             {"buckets", buckets_}};
  std::string out(kVectorMagic, 4);
  binio::write_u32(out, kVectorFormatVersion);
  binio::write_bytes(out, manifest.dump());
  for (const auto& t : tokens_) binio::write_bytes(out, t);
  binio::write_floats(out, matrix_);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

EmbeddingStore EmbeddingStore::load_binary(const std::filesystem::path& path) {
  const auto buffer = read_file(path);
  binio::Reader in(buffer);
  if (in.raw(4) != std::string(kVectorMagic, 4)) {
    throw FormatError(path.string() + ": not a vector cache file");
  }
  if (auto version = in.u32(); version != kVectorFormatVersion) {
    throw FormatError("unsupported vector cache version " + std::to_string(version));
  }
  auto manifest = nlohmann::json::parse(in.bytes());
  EmbeddingStore store(manifest.at("dim").get<std::size_t>(),
                       parse_oov_policy(manifest.at("oov_policy").get<std::string>()),
                       manifest.at("buckets").get<std::size_t>());
  const auto vocab = manifest.at("vocab_size").get<std::size_t>();
  store.tokens_.reserve(vocab);
  for (std::size_t i = 0; i < vocab; ++i) {
    store.index_.emplace(store.tokens_.emplace_back(in.bytes()), i);
  }
  store.matrix_.resize(vocab * store.dim_);
  in.floats(store.matrix_);
  if (in.remaining() != 0) throw CorruptionError(path.string() + ": trailing bytes");
  return store;
}

std::optional<std::size_t> EmbeddingStore::index_of(std::string_view token) const {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  if (auto it = index_.find(ascii_lower(token)); it != index_.end()) return it->second;
  return std::nullopt;
}

std::span<const float> EmbeddingStore::row(std::size_t index) const {
  return std::span<const float>(matrix_).subspan(index * dim_, dim_);
}

void EmbeddingStore::lookup_into(std::string_view token, std::span<float> out) const {
  if (out.size() != dim_) throw DimensionError("lookup buffer has wrong size");
  if (auto idx = index_of(token)) {
    auto r = row(*idx);
    std::copy(r.begin(), r.end(), out.begin());
    return;
  }
  if (policy_ == OovPolicy::kZeros) {
    std::fill(out.begin(), out.end(), 0.0f);
    return;
  }
  std::uint64_t state = fnv1a(ascii_lower(token)) % buckets_;
  for (auto& v : out) {
    const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    v = static_cast<float>(0.2 * u - 0.1);
  }
}

std::vector<float> EmbeddingStore::lookup(std::string_view token) const {
  std::vector<float> out(dim_);
  lookup_into(token, out);
  return out;
}

std::vector<float> EmbeddingStore::embed_tokens(std::span<const std::string> tokens) const {
  std::vector<double> acc(dim_, 0.0);
  std::vector<float> buf(dim_);
  for (const auto& t : tokens) {
    lookup_into(t, buf);
    for (std::size_t i = 0; i < dim_; ++i) acc[i] += buf[i];
  }
  std::vector<float> out(dim_, 0.0f);
  if (tokens.empty()) return out;
  for (std::size_t i = 0; i < dim_; ++i) {
    out[i] = static_cast<float>(acc[i] / static_cast<double>(tokens.size()));
  }
  return out;
}

}  // namespace ade
