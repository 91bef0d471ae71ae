#include "ade/bundle.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include <zlib.h>

#include "ade/binio.hpp"
#include "ade/error.hpp"

namespace ade {

namespace {

constexpr std::string_view kMagic = "ADEB";

std::uint32_t checksum(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
              static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::string_view to_string(StageKind kind) {
  switch (kind) {
    case StageKind::kClassifier:
      return "classifier";
    case StageKind::kNer:
      return "ner";
    case StageKind::kRe:
      return "re";
  }
  return "classifier";
}

StageKind parse_stage_kind(std::string_view name) {
  if (name == "classifier") return StageKind::kClassifier;
  if (name == "ner") return StageKind::kNer;
  if (name == "re") return StageKind::kRe;
  throw FormatError("unknown stage kind '" + std::string(name) + "'");
}

const Tensor& Bundle::tensor(std::string_view name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw FormatError("bundle has no tensor '" + std::string(name) + "'");
}

void Bundle::add(std::string name, const Tensor& t) {
  for (const auto& [n, existing] : tensors) {
    if (n == name) throw FormatError("duplicate tensor name '" + name + "'");
  }
  tensors.emplace_back(std::move(name), t);
}

std::size_t Bundle::embedding_dim() const {
  if (!manifest.contains("embedding_dim")) throw FormatError("manifest lacks embedding_dim");
  return manifest.at("embedding_dim").get<std::size_t>();
}

nlohmann::json bundle_manifest(StageKind kind, std::size_t embedding_dim,
                               nlohmann::json config, nlohmann::json labels) {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  return {
      {"format_version", kBundleVersion},
      {"stage", std::string(to_string(kind))},
      {"embedding_dim", embedding_dim},
      {"config", std::move(config)},
      {"labels", std::move(labels)},
      {"created",
       {{"tool", "adepipe"},
        {"unix_time", std::chrono::duration_cast<std::chrono::seconds>(now).count()}}},
  };
}

std::string serialize_bundle(const Bundle& bundle) {
  auto manifest = bundle.manifest;
  manifest["stage"] = std::string(to_string(bundle.kind));
  manifest["format_version"] = kBundleVersion;

  std::string out(kMagic);
  binio::write_u32(out, kBundleVersion);
  binio::write_bytes(out, manifest.dump());
  binio::write_u32(out, static_cast<std::uint32_t>(bundle.tensors.size()));
  std::set<std::string> seen;
  for (const auto& [name, t] : bundle.tensors) {
    if (!seen.insert(name).second) throw FormatError("duplicate tensor name '" + name + "'");
    binio::write_bytes(out, name);
    binio::write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) binio::write_u64(out, d);
    binio::write_floats(out, t.data());
  }
  binio::write_u32(out, checksum(out));
  return out;
}

Bundle parse_bundle(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 8) throw CorruptionError("bundle is truncated");
  const auto body = bytes.substr(0, bytes.size() - 4);
  binio::Reader tail(bytes.substr(bytes.size() - 4));
  if (tail.u32() != checksum(body)) throw CorruptionError("bundle checksum mismatch");

  binio::Reader in(body);
  if (in.raw(kMagic.size()) != kMagic) throw FormatError("not a model bundle");
  const auto version = in.u32();
  if (version != kBundleVersion) {
    throw FormatError("unsupported bundle version " + std::to_string(version) + " (expected " +
                      std::to_string(kBundleVersion) + ")");
  }
  Bundle b;
  try {
    b.manifest = nlohmann::json::parse(in.bytes());
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("bad bundle manifest: ") + e.what());
  }
  if (!b.manifest.is_object() || !b.manifest.contains("stage") ||
      !b.manifest.at("stage").is_string()) {
    throw FormatError("bundle manifest lacks a stage kind");
  }
  b.kind = parse_stage_kind(b.manifest.at("stage").get<std::string>());
  const auto n = in.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto name = in.bytes();
    const auto rank = in.u32();
    if (rank == 0 || rank > 8) throw CorruptionError("bad tensor rank for '" + name + "'");
    Shape shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
      d = in.u64();
      if (d == 0 || d > in.remaining()) throw CorruptionError("bad tensor dims for '" + name + "'");
      count *= d;
    }
    if (count > in.remaining() / sizeof(float)) throw CorruptionError("truncated tensor '" + name + "'");
    std::vector<float> data(count);
    in.floats(data);
    b.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (in.remaining() != 0) throw CorruptionError("trailing bytes in bundle");
  return b;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

void save_bundle(const Bundle& bundle, const std::filesystem::path& path) {
  write_file(path, serialize_bundle(bundle));
}

Bundle load_bundle(const std::filesystem::path& path) { return parse_bundle(read_file(path)); }

void check_bundle_dim(const Bundle& bundle, std::size_t store_dim) {
  const auto dim = bundle.embedding_dim();
  if (dim != store_dim) {
    throw ConfigError(std::string(to_string(bundle.kind)) + " bundle expects embedding dim " +
                      std::to_string(dim) + ", store has " + std::to_string(store_dim));
  }
}

}  // namespace ade
