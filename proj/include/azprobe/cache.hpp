#pragma once

// Activation cache files (little-endian):
//   "AZAC" u32 version=1 u64 step u16 layer u64 N u32 d u8 layout
//   N x (u32 byte length, UTF-8 FEN)
//   N x d f32, row-major, each row in the plane-major (ch * 8 + row) * 8 + col layout

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "azprobe/binio.hpp"
#include "azprobe/concepts/dataset.hpp"
#include "azprobe/encoding.hpp"
#include "azprobe/network.hpp"
#include "azprobe/parallel.hpp"
#include "azprobe/probes.hpp"

namespace azprobe::cache {

inline constexpr std::uint32_t cache_version = 1;
inline constexpr std::uint8_t layout_plane_major = 1;
inline constexpr std::uint64_t cache_header_bytes = 4 + 4 + 8 + 2 + 8 + 4 + 1;

enum class CacheErrorKind { io, magic, version, truncated, shape, layout };

class CacheError : public std::runtime_error {
 public:
  CacheError(CacheErrorKind k, const std::string& what) : std::runtime_error(what), kind(k) {}
  CacheErrorKind kind;
};

struct ActivationCache {
  probes::ActivationMatrix matrix;
  std::vector<std::string> fens;  // row k of the matrix is fens[k]
};

/// 64-bit FNV-1a over the concatenated FENs.
inline std::uint64_t corpus_hash(const std::vector<std::string>& fens) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& f : fens)
    for (unsigned char c : f) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  return h;
}

inline std::string cache_file_name(std::uint64_t step, int layer, const std::vector<std::string>& fens) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(corpus_hash(fens)));
  return "acts_t" + std::to_string(step) + "_l" + std::to_string(layer) + "_" + hash + ".azac";
}

inline void write_cache(std::ostream& out, const ActivationCache& c) {
  const auto& m = c.matrix;
  if (m.data.size() != m.rows * m.cols || c.fens.size() != m.rows)
    throw CacheError(CacheErrorKind::shape, "cache matrix and manifest sizes disagree");
  if (m.layer < 0 || m.layer > 0xffff) throw CacheError(CacheErrorKind::shape, "layer does not fit the cache header");
  binio::put_bytes(out, "AZAC");
  binio::put_uint<std::uint32_t>(out, cache_version);
  binio::put_uint<std::uint64_t>(out, m.step);
  binio::put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(m.layer));
  binio::put_uint<std::uint64_t>(out, m.rows);
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols));
  binio::put_uint<std::uint8_t>(out, layout_plane_major);
  for (const auto& f : c.fens) {
    binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(f.size()));
    binio::put_bytes(out, f);
  }
  binio::put_f32s(out, m.data.data(), m.data.size());
}

inline void save_cache(const std::filesystem::path& path, const ActivationCache& c) {
  try {
    binio::write_atomically(path, [&](std::ostream& out) { write_cache(out, c); });
  } catch (const CacheError&) {
    throw;
  } catch (const std::exception& e) {
    throw CacheError(CacheErrorKind::io, e.what());
  }
}

namespace detail {

/// Bytes left in a seekable stream, or -1.
inline std::int64_t remaining(std::istream& in) {
  const auto here = in.tellg();
  if (here < 0) return -1;
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(here);
  return end < 0 ? -1 : static_cast<std::int64_t>(end - here);
}

}  // namespace detail

inline ActivationCache read_cache(std::istream& in) {
  try {
    if (binio::get_bytes(in, 4) != "AZAC") throw CacheError(CacheErrorKind::magic, "not an activation cache (bad magic)");
    const auto version = binio::get_uint<std::uint32_t>(in);
    if (version != cache_version)
      throw CacheError(CacheErrorKind::version, "unsupported cache version " + std::to_string(version) +
                                                    " (this reader supports version " + std::to_string(cache_version) + ")");
    ActivationCache c;
    auto& m = c.matrix;
    m.step = binio::get_uint<std::uint64_t>(in);
    m.layer = binio::get_uint<std::uint16_t>(in);
    m.rows = binio::get_uint<std::uint64_t>(in);
    m.cols = binio::get_uint<std::uint32_t>(in);
    const auto layout = binio::get_uint<std::uint8_t>(in);
    if (layout != layout_plane_major)
      throw CacheError(CacheErrorKind::layout, "unknown activation layout tag " + std::to_string(layout));
    if (m.cols == 0 || m.cols % encoding::board_cells != 0)
      throw CacheError(CacheErrorKind::shape, "row width " + std::to_string(m.cols) + " is not a whole number of 8x8 planes");
    const std::int64_t left = detail::remaining(in);
    if (left >= 0 && m.rows > static_cast<std::uint64_t>(left) / 4)
      throw CacheError(CacheErrorKind::truncated, "cache declares " + std::to_string(m.rows) +
                                                      " rows but only " + std::to_string(left) + " bytes follow the header");
    c.fens.reserve(m.rows);
    for (std::uint64_t i = 0; i < m.rows; ++i) {
      const auto len = binio::get_uint<std::uint32_t>(in);
      c.fens.push_back(binio::get_bytes(in, len));
    }
    const std::uint64_t payload = m.rows * m.cols * 4;
    const std::int64_t have = detail::remaining(in);
    if (have >= 0 && static_cast<std::uint64_t>(have) < payload)
      throw CacheError(CacheErrorKind::truncated, "truncated payload: expected " + std::to_string(payload) +
                                                      " bytes, got " + std::to_string(have));
    m.data.resize(m.rows * m.cols);
    binio::get_f32s(in, m.data.data(), m.data.size());
    if (in.peek() != std::char_traits<char>::eof())
      throw CacheError(CacheErrorKind::shape, "trailing bytes after cache payload");
    return c;
  } catch (const binio::Truncated& e) {
    throw CacheError(CacheErrorKind::truncated, std::string("truncated cache: ") + e.what());
  }
}

inline ActivationCache load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheError(CacheErrorKind::io, "cannot open " + path.string());
  return read_cache(in);
}

/// One matrix per requested layer (0 = input encoding) from a single forward pass per position.
inline std::vector<probes::ActivationMatrix> compute_activations(const network::Checkpoint& ck,
                                                                 const std::vector<concepts::PositionRecord>& records,
                                                                 const std::vector<int>& layers, int jobs = 1) {
  const auto params = ck.config.encoding();
  std::vector<probes::ActivationMatrix> out;
  for (int l : layers) {
    if (l < 0 || l > ck.config.blocks)
      throw CacheError(CacheErrorKind::shape, "layer " + std::to_string(l) + " out of range 0.." +
                                                  std::to_string(ck.config.blocks));
    probes::ActivationMatrix m;
    m.layer = l;
    m.step = ck.step;
    m.rows = records.size();
    m.cols = static_cast<std::size_t>(l == 0 ? params.planes() * encoding::board_cells : ck.config.activation_size());
    m.data.resize(m.rows * m.cols);
    out.push_back(std::move(m));
  }
  bool need_forward = false;
  for (int l : layers) need_forward = need_forward || l > 0;
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const auto& r = records[i];
    const auto x = r.history.empty() ? encoding::encode_input(r.position, params)
                                     : encoding::encode_input(std::span<const chess::Position>(r.history), params);
    network::ActivationSet acts;
    if (need_forward) acts = network::forward(ck, x, {.heads = false}).second;
    for (auto& m : out) {
      const auto& src = m.layer == 0 ? x.data : acts.layer(m.layer);
      std::copy(src.begin(), src.end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * m.cols));
    }
  });
  return out;
}

inline std::vector<std::string> manifest(const std::vector<concepts::PositionRecord>& records) {
  std::vector<std::string> out;
  for (const auto& r : records) out.push_back(r.fen);
  return out;
}

/// Writes one cache per layer into `dir`, skipping layers whose file exists unless `force`.
/// Returns the paths in layer order.
inline std::vector<std::filesystem::path> write_caches(const network::Checkpoint& ck,
                                                       const std::vector<concepts::PositionRecord>& records,
                                                       const std::vector<int>& layers,
                                                       const std::filesystem::path& dir, bool force = false,
                                                       int jobs = 1) {
  const auto fens = manifest(records);
  std::vector<std::filesystem::path> paths;
  std::vector<int> todo;
  for (int l : layers) {
    paths.push_back(dir / cache_file_name(ck.step, l, fens));
    if (force || !std::filesystem::exists(paths.back())) todo.push_back(l);
  }
  if (todo.empty()) return paths;
  std::filesystem::create_directories(dir);
  auto mats = compute_activations(ck, records, todo, jobs);
  for (std::size_t k = 0; k < todo.size(); ++k)
    save_cache(dir / cache_file_name(ck.step, todo[k], fens), {std::move(mats[k]), fens});
  return paths;
}

}  // namespace azprobe::cache
