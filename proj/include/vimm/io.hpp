#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vimm/dataset.hpp"
#include "vimm/error.hpp"

namespace vimm {

namespace detail {

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
  write_u32_le(os, static_cast<std::uint32_t>(v & 0xffffffffULL));
  write_u32_le(os, static_cast<std::uint32_t>(v >> 32));
}

inline void write_f32_le(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32_le(os, bits);
}

inline bool read_u32_le(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

inline bool read_u64_le(std::istream& is, std::uint64_t& v) {
  std::uint32_t lo, hi;
  if (!read_u32_le(is, lo) || !read_u32_le(is, hi)) return false;
  v = static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
  return true;
}

inline bool read_f32_le(std::istream& is, float& v) {
  std::uint32_t bits;
  if (!read_u32_le(is, bits)) return false;
  std::memcpy(&v, &bits, 4);
  return true;
}

// Strict non-negative decimal parse; rejects sign, spaces and overflow.
inline bool parse_u32(const std::string& s, std::uint32_t& out) {
  if (s.empty() || s.size() > 10) return false;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  if (v > 0xffffffffULL) return false;
  out = static_cast<std::uint32_t>(v);
  return true;
}

}  // namespace detail

inline constexpr char kInteractionMagic[] = "VIMM-INT";
inline constexpr char kEmbeddingMagic[] = "VIMMEMB1";

// --- Interaction file: "VIMM-INT 1 <U> <I>\n" then "<user>\t<item>\n" lines.

inline void save_interactions(
    const std::filesystem::path& path, std::size_t user_count, std::size_t item_count,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& interactions) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open for writing: " + path.string());
  os << kInteractionMagic << " 1 " << user_count << " " << item_count << "\n";
  for (const auto& [u, i] : interactions) os << u << "\t" << i << "\n";
  os.flush();
  require(os.good(), "write failed: " + path.string());
}

struct InteractionFile {
  std::size_t user_count = 0;
  std::size_t item_count = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> interactions;
};

inline InteractionFile load_interactions(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open: " + path.string());
  const std::string where = path.string();
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), where + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::uint32_t version = 0, users = 0, items = 0;
    std::size_t p0 = line.find(' ');
    require(p0 != std::string::npos && line.substr(0, p0) == kInteractionMagic,
            where + ":1: malformed header (expected '" + std::string(kInteractionMagic) +
                " 1 <U> <I>')");
    std::size_t p1 = line.find(' ', p0 + 1);
    std::size_t p2 = line.find(' ', p1 + 1);
    require(p1 != std::string::npos && p2 != std::string::npos &&
                line.find(' ', p2 + 1) == std::string::npos,
            where + ":1: malformed header field count");
    require(detail::parse_u32(line.substr(p0 + 1, p1 - p0 - 1), version) && version == 1,
            where + ":1: unsupported format version");
    require(detail::parse_u32(line.substr(p1 + 1, p2 - p1 - 1), users),
            where + ":1: malformed user count");
    require(detail::parse_u32(line.substr(p2 + 1), items), where + ":1: malformed item count");
    require(users > 0 && items > 0, where + ":1: counts must be positive");
    InteractionFile out;
    out.user_count = users;
    out.item_count = items;
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string at = where + ":" + std::to_string(lineno);
      require(!line.empty(), at + ": empty line");
      const std::size_t tab = line.find('\t');
      require(tab != std::string::npos && line.find('\t', tab + 1) == std::string::npos,
              at + ": expected '<user>\\t<item>'");
      std::uint32_t u = 0, i = 0;
      require(detail::parse_u32(line.substr(0, tab), u), at + ": malformed user index");
      require(detail::parse_u32(line.substr(tab + 1), i), at + ": malformed item index");
      require(u < users, at + ": user index " + std::to_string(u) + " out of range (|U|=" +
                             std::to_string(users) + ")");
      require(i < items, at + ": item index " + std::to_string(i) + " out of range (|I|=" +
                             std::to_string(items) + ")");
      require(seen.insert({u, i}).second, at + ": duplicate interaction");
      out.interactions.emplace_back(u, i);
    }
    return out;
  }
}

// --- Embedding file: magic "VIMMEMB1", u32 item_count, u32 dim, f32 rows.

inline void save_embeddings(const std::filesystem::path& path, const ModalityEmbeddings& emb) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open for writing: " + path.string());
  os.write(kEmbeddingMagic, 8);
  detail::write_u32_le(os, static_cast<std::uint32_t>(emb.item_count));
  detail::write_u32_le(os, static_cast<std::uint32_t>(emb.dim));
  for (float v : emb.values) detail::write_f32_le(os, v);
  os.flush();
  require(os.good(), "write failed: " + path.string());
}

inline ModalityEmbeddings load_embeddings(const std::filesystem::path& path,
                                          const std::string& modality) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open: " + path.string());
  const std::string where = path.string();
  char magic[8];
  require(static_cast<bool>(is.read(magic, 8)) && std::memcmp(magic, kEmbeddingMagic, 8) == 0,
          where + ": bad magic (offset 0), expected " + std::string(kEmbeddingMagic));
  ModalityEmbeddings emb;
  emb.modality = modality;
  std::uint32_t items = 0, dim = 0;
  require(detail::read_u32_le(is, items), where + ": truncated header (offset 8)");
  require(detail::read_u32_le(is, dim), where + ": truncated header (offset 12)");
  require(items > 0 && dim > 0, where + ": zero item count or dim in header");
  emb.item_count = items;
  emb.dim = dim;
  emb.values.resize(static_cast<std::size_t>(items) * dim);
  for (std::size_t i = 0; i < emb.values.size(); ++i) {
    require(detail::read_f32_le(is, emb.values[i]),
            where + ": truncated at value " + std::to_string(i) + " (offset " +
                std::to_string(16 + i * 4) + ")");
  }
  char extra;
  require(!is.read(&extra, 1), where + ": trailing bytes after embedding data");
  emb.validate();
  return emb;
}

// --- Optional id map sidecar: "<external-id>\t<index>" per line.

inline void save_id_map(const std::filesystem::path& path,
                        const std::vector<std::pair<std::string, std::uint32_t>>& entries) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open for writing: " + path.string());
  for (const auto& [id, idx] : entries) os << id << "\t" << idx << "\n";
  os.flush();
  require(os.good(), "write failed: " + path.string());
}

inline std::map<std::string, std::uint32_t> load_id_map(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open: " + path.string());
  std::map<std::string, std::uint32_t> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string at = path.string() + ":" + std::to_string(lineno);
    const std::size_t tab = line.find('\t');
    require(tab != std::string::npos, at + ": expected '<external-id>\\t<index>'");
    std::uint32_t idx = 0;
    require(detail::parse_u32(line.substr(tab + 1), idx), at + ": malformed index");
    require(out.emplace(line.substr(0, tab), idx).second, at + ": duplicate external id");
  }
  return out;
}

// --- Whole-dataset helpers.

inline Dataset load_dataset(const std::filesystem::path& interactions_path,
                            const std::map<std::string, std::filesystem::path>& embedding_paths) {
  InteractionFile f = load_interactions(interactions_path);
  Dataset ds;
  ds.user_count = f.user_count;
  ds.item_count = f.item_count;
  ds.interactions = std::move(f.interactions);
  require(!embedding_paths.empty(), "load_dataset: at least one modality required");
  for (const auto& [name, path] : embedding_paths) {
    ModalityEmbeddings emb = load_embeddings(path, name);
    require(emb.item_count == ds.item_count,
            path.string() + ": embedding row count " + std::to_string(emb.item_count) +
                " does not match dataset item count " + std::to_string(ds.item_count));
    ds.modalities.emplace(name, std::move(emb));
  }
  ds.validate();
  return ds;
}

// Dataset directory convention: <dir>/interactions.tsv plus one
// <dir>/<modality>.emb per modality.
inline void save_dataset_dir(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  save_interactions(dir / "interactions.tsv", ds.user_count, ds.item_count, ds.interactions);
  for (const auto& [name, emb] : ds.modalities) save_embeddings(dir / (name + ".emb"), emb);
}

inline Dataset load_dataset_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::filesystem::path> embs;
  require(std::filesystem::is_directory(dir), "not a dataset directory: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".emb")
      embs.emplace(entry.path().stem().string(), entry.path());
  }
  return load_dataset(dir / "interactions.tsv", embs);
}

// Interactions only (used when modality features must not be touched).
inline Dataset load_dataset_dir_interactions_only(const std::filesystem::path& dir) {
  InteractionFile f = load_interactions(dir / "interactions.tsv");
  Dataset ds;
  ds.user_count = f.user_count;
  ds.item_count = f.item_count;
  ds.interactions = std::move(f.interactions);
  return ds;
}

}  // namespace vimm
