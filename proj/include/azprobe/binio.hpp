#pragma once

// Little-endian binary helpers shared by the checkpoint and cache formats, plus
// write-to-temp-then-rename for atomic file creation.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace azprobe::binio {

/// Thrown when a stream ends before a value could be read.
class Truncated : public std::runtime_error {
 public:
  Truncated(std::uint64_t expected, std::uint64_t actual)
      : std::runtime_error("truncated: expected " + std::to_string(expected) + " bytes, got " + std::to_string(actual)),
        expected_bytes(expected),
        actual_bytes(actual) {}
  std::uint64_t expected_bytes;
  std::uint64_t actual_bytes;
};

template <typename U>
void put_uint(std::ostream& out, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U get_uint(std::istream& in) {
  unsigned char buf[sizeof(U)];
  in.read(reinterpret_cast<char*>(buf), sizeof(U));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(U)))
    throw Truncated(sizeof(U), static_cast<std::uint64_t>(in.gcount()));
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(buf[i]) << (8 * i));
  return v;
}

inline void put_f32(std::ostream& out, float v) { put_uint<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v)); }
inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_uint<std::uint32_t>(in)); }

inline void put_f32s(std::ostream& out, const float* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
  } else {
    for (std::size_t i = 0; i < n; ++i) put_f32(out, data[i]);
  }
}

inline void get_f32s(std::istream& in, float* data, std::size_t n) {
  const auto want = static_cast<std::streamsize>(n * sizeof(float));
  in.read(reinterpret_cast<char*>(data), want);
  if (in.gcount() != want) throw Truncated(static_cast<std::uint64_t>(want), static_cast<std::uint64_t>(in.gcount()));
  if constexpr (std::endian::native != std::endian::little) {
    for (std::size_t i = 0; i < n; ++i) {
      auto u = std::bit_cast<std::uint32_t>(data[i]);
      u = ((u & 0xffu) << 24) | ((u & 0xff00u) << 8) | ((u >> 8) & 0xff00u) | (u >> 24);
      data[i] = std::bit_cast<float>(u);
    }
  }
}

inline void put_bytes(std::ostream& out, const std::string& s) { out.write(s.data(), static_cast<std::streamsize>(s.size())); }

inline std::string get_bytes(std::istream& in, std::size_t n) {
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) throw Truncated(n, static_cast<std::uint64_t>(in.gcount()));
  return s;
}

/// Writes via `body` into `path.tmp`, then renames over `path`. On any failure
/// the temp file is removed and the target is left untouched.
inline void write_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  auto tmp = path;
  tmp += ".tmp";
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
      body(out);
      out.flush();
      if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

}  // namespace azprobe::binio
