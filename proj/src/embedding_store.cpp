#include "wilding/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "wilding/error.hpp"

namespace wilding {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint64_t get_u64(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[at + i];
  return v;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::IoError, "read failed for " + path.string());
  return bytes;
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedJson, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

template <typename T>
T json_field(const json& doc, const char* key, const fs::path& where) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedJson, where.string() + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

EmbeddingMatrix EmbeddingMatrix::with_index_ids(Matrix values) {
  EmbeddingMatrix m{std::move(values), {}};
  m.ids.reserve(m.values.rows());
  for (std::size_t i = 0; i < m.values.rows(); ++i) m.ids.push_back(std::to_string(i));
  return m;
}

void EmbeddingMatrix::validate() const {
  if (dim() == 0) fail(ErrorCode::InvalidDimension, "embedding dim must be >= 1");
  if (ids.size() != rows()) {
    fail(ErrorCode::ManifestMismatch, std::to_string(ids.size()) + " ids for " +
                                          std::to_string(rows()) + " rows");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) fail(ErrorCode::DuplicateId, "id '" + id + "' repeated");
  }
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < dim(); ++c) {
      if (!std::isfinite(values(r, c))) {
        fail(ErrorCode::NonFiniteValue,
             "row " + std::to_string(r) + ", column " + std::to_string(c));
      }
    }
  }
}

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  fail(ErrorCode::MalformedJson, "unknown split '" + std::string(name) + "'");
}

std::vector<std::string> ClassPack::catalog() const {
  std::vector<std::string> names;
  names.reserve(classes.size());
  for (const auto& c : classes) names.push_back(c.name);
  return names;
}

std::size_t ClassPack::dim() const { return classes.empty() ? 0 : classes.front().llm.dim(); }

void ClassPack::validate() const {
  std::set<std::string> names;
  const std::size_t d = dim();
  for (const auto& c : classes) {
    if (!names.insert(c.name).second) {
      fail(ErrorCode::DuplicateId, "class '" + c.name + "' listed twice");
    }
    if (c.llm.dim() != d || (c.templates && c.templates->dim() != d)) {
      fail(ErrorCode::DimMismatch, "class '" + c.name + "' has a matrix whose dim differs from " +
                                       std::to_string(d));
    }
    c.llm.validate();
    if (c.templates) c.templates->validate();
  }
}

fs::path manifest_path(const fs::path& embedding_path) {
  fs::path p = embedding_path;
  p += ".manifest.json";
  return p;
}

std::vector<std::uint8_t> encode_embedding_bytes(const Matrix& values) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + values.size() * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u16(out, kFormatVersion);
  put_u16(out, 0);
  put_u64(out, values.rows());
  put_u64(out, values.cols());
  const auto flat = values.values();
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const float f = static_cast<float>(flat[k]);
    if (!std::isfinite(f)) {
      fail(ErrorCode::NonFiniteValue, "row " + std::to_string(k / values.cols()) +
                                          " does not fit in float32");
    }
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

EmbeddingMatrix decode_embedding_bytes(std::span<const std::uint8_t> bytes) {
  const std::size_t magic_len = std::min<std::size_t>(bytes.size(), 4);
  if (magic_len > 0 && std::memcmp(bytes.data(), kMagic, magic_len) != 0) {
    fail(ErrorCode::BadMagic, "offset 0: expected 'WING'");
  }
  if (bytes.size() < kHeaderBytes) {
    fail(ErrorCode::TruncatedFile, "header needs " + std::to_string(kHeaderBytes) +
                                       " bytes, file has " + std::to_string(bytes.size()));
  }
  const std::uint16_t version = get_u16(bytes, 4);
  if (version != kFormatVersion) {
    fail(ErrorCode::VersionUnsupported, "offset 4: version " + std::to_string(version));
  }
  const std::uint16_t flags = get_u16(bytes, 6);
  if (flags != 0) fail(ErrorCode::BadFlags, "offset 6: flags " + std::to_string(flags));
  const std::uint64_t rows = get_u64(bytes, 8);
  const std::uint64_t dim = get_u64(bytes, 16);
  if (dim == 0) fail(ErrorCode::InvalidDimension, "offset 16: dim is 0");

  const std::uint64_t available = bytes.size() - kHeaderBytes;
  // rows * dim * 4 may overflow for a corrupted count; compare by division.
  if (rows > available / 4 / dim) {
    fail(ErrorCode::TruncatedFile, "header declares " + std::to_string(rows) + "x" +
                                       std::to_string(dim) + " floats, payload has " +
                                       std::to_string(available) + " bytes");
  }
  const std::uint64_t expected = rows * dim * 4;
  if (available != expected) {
    fail(ErrorCode::TrailingBytes, "offset " + std::to_string(kHeaderBytes + expected) + ": " +
                                       std::to_string(available - expected) +
                                       " bytes past declared payload");
  }

  Matrix values(rows, dim);
  auto out = values.values();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::size_t at = kHeaderBytes + 4 * k;
    std::uint32_t bits = 0;
    for (int i = 3; i >= 0; --i) bits = (bits << 8) | bytes[at + i];
    const float f = std::bit_cast<float>(bits);
    if (!std::isfinite(f)) {
      fail(ErrorCode::NonFiniteValue, "offset " + std::to_string(at) + " (row " +
                                          std::to_string(k / dim) + ")");
    }
    out[k] = static_cast<double>(f);
  }
  return EmbeddingMatrix::with_index_ids(std::move(values));
}

EmbeddingMatrix load_embedding_file(const fs::path& path) {
  auto bytes = read_bytes(path);
  EmbeddingMatrix m = decode_embedding_bytes(bytes);
  const fs::path sidecar = manifest_path(path);
  if (fs::exists(sidecar)) {
    SampleManifest manifest = load_manifest(sidecar);
    if (manifest.ids.size() != m.rows()) {
      fail(ErrorCode::ManifestMismatch, sidecar.string() + " lists " +
                                            std::to_string(manifest.ids.size()) + " ids for " +
                                            std::to_string(m.rows()) + " rows");
    }
    m.ids = std::move(manifest.ids);
  }
  m.validate();
  return m;
}

void write_embedding_file(const EmbeddingMatrix& matrix, const fs::path& path) {
  write_embedding_file(matrix, SampleManifest{matrix.ids, std::nullopt, std::nullopt}, path);
}

void write_embedding_file(const EmbeddingMatrix& matrix, const SampleManifest& manifest,
                          const fs::path& path) {
  matrix.validate();
  if (manifest.ids != matrix.ids) {
    fail(ErrorCode::ManifestMismatch, "manifest ids differ from matrix ids");
  }
  if (manifest.labels && manifest.labels->size() != matrix.rows()) {
    fail(ErrorCode::ManifestMismatch, "manifest has " + std::to_string(manifest.labels->size()) +
                                          " labels for " + std::to_string(matrix.rows()) + " rows");
  }
  write_bytes(path, encode_embedding_bytes(matrix.values));
  write_manifest(manifest, manifest_path(path));
}

SampleManifest load_manifest(const fs::path& manifest_file) {
  const json doc = read_json(manifest_file);
  SampleManifest m;
  m.ids = json_field<std::vector<std::string>>(doc, "ids", manifest_file);
  if (doc.contains("labels")) {
    m.labels = json_field<std::vector<std::string>>(doc, "labels", manifest_file);
    if (m.labels->size() != m.ids.size()) {
      fail(ErrorCode::ManifestMismatch, manifest_file.string() + ": labels and ids differ in length");
    }
  }
  if (doc.contains("split")) m.split = parse_split(json_field<std::string>(doc, "split", manifest_file));
  return m;
}

void write_manifest(const SampleManifest& manifest, const fs::path& manifest_file) {
  json doc;
  doc["ids"] = manifest.ids;
  if (manifest.labels) doc["labels"] = *manifest.labels;
  if (manifest.split) doc["split"] = std::string(to_string(*manifest.split));
  write_json(manifest_file, doc);
}

void check_labels(const SampleManifest& manifest, std::span<const std::string> catalog) {
  if (!manifest.labels) return;
  const std::set<std::string> known(catalog.begin(), catalog.end());
  for (std::size_t i = 0; i < manifest.labels->size(); ++i) {
    const auto& label = (*manifest.labels)[i];
    if (!known.contains(label)) {
      fail(ErrorCode::UnknownLabel, "row " + std::to_string(i) + ": label '" + label +
                                        "' not in class catalog");
    }
  }
}

ClassPack load_class_pack(const fs::path& dir) {
  const fs::path index = dir / "pack.json";
  const json doc = read_json(index);
  if (!doc.contains("classes") || !doc["classes"].is_array()) {
    fail(ErrorCode::MalformedJson, index.string() + ": missing 'classes' array");
  }
  ClassPack pack;
  for (const auto& entry : doc["classes"]) {
    ClassEntry c;
    c.name = json_field<std::string>(entry, "name", index);
    c.llm = load_embedding_file(dir / json_field<std::string>(entry, "llm", index));
    if (entry.contains("template")) {
      c.templates = load_embedding_file(dir / json_field<std::string>(entry, "template", index));
    }
    pack.classes.push_back(std::move(c));
  }
  pack.validate();
  return pack;
}

void write_class_pack(const ClassPack& pack, const fs::path& dir) {
  pack.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  json classes = json::array();
  for (std::size_t i = 0; i < pack.classes.size(); ++i) {
    const auto& c = pack.classes[i];
    char stem[32];
    std::snprintf(stem, sizeof stem, "class_%03zu", i);
    json entry;
    entry["name"] = c.name;
    entry["llm"] = std::string(stem) + ".llm.wing";
    write_embedding_file(c.llm, dir / entry["llm"].get<std::string>());
    if (c.templates) {
      entry["template"] = std::string(stem) + ".template.wing";
      write_embedding_file(*c.templates, dir / entry["template"].get<std::string>());
    }
    classes.push_back(std::move(entry));
  }
  write_json(dir / "pack.json", json{{"classes", classes}});
}

}  // namespace wilding
