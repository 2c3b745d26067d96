#pragma once

// Forward pass for AlphaZero-shaped residual networks.
//
//   z1 = clip(relu(in_conv(x)))
//   zl = clip(relu(z(l-1) + g_l(z(l-1))))    g_l = conv_b . relu . conv_a, l = 2..L
//   policy = policy_conv(zL)                 3x3, C -> 73
//   value  = tanh(fc2(relu(fc1(relu(value_conv(zL))))))   value_conv is 1x1, C -> 1
//
// Every conv carries a folded batch-norm as per-output-channel scale and bias.
// Activations use the same plane-major layout as the input: (ch * 8 + row) * 8 + col.
//
// Checkpoint file (all little-endian):
//   "AZPW" u32 version=1
//   u32 L, u32 C, u32 h, f32 clip_max, f32 halfmove_divisor, f32 fullmove_divisor,
//   u32 value_hidden, u64 step
//   tensors, each as f32 arrays in this order:
//     in_conv   weight[C][14h+7][3][3] scale[C] bias[C]
//     per block (L-1 of them): conv_a, conv_b, each weight[C][C][3][3] scale[C] bias[C]
//     policy    weight[73][C][3][3] scale[73] bias[73]
//     value     weight[1][C][1][1] scale[1] bias[1]
//     fc1       weight[hidden][64] bias[hidden]
//     fc2       weight[hidden] bias[1]

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "azprobe/binio.hpp"
#include "azprobe/encoding.hpp"
#include "azprobe/rng.hpp"

namespace azprobe::network {

using encoding::board_cells;
using encoding::InputTensor;
using encoding::policy_planes;

struct NetworkConfig {
  int blocks = 4;  // L: number of activation layers z1..zL
  int channels = 32;
  int history = 1;
  float clip_max = 15.0f;
  float halfmove_divisor = 100.0f;
  float fullmove_divisor = 512.0f;
  int value_hidden = 256;

  int input_planes() const { return 14 * history + 7; }
  int activation_size() const { return channels * board_cells; }
  encoding::EncodingParams encoding() const { return {history, halfmove_divisor, fullmove_divisor}; }
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

enum class CheckpointErrorKind { io, magic, version, truncated, shape };

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointErrorKind k, const std::string& what) : std::runtime_error(what), kind(k) {}
  CheckpointErrorKind kind;
};

struct Conv {
  int in = 0;
  int out = 0;
  int kernel = 3;  // 3 or 1
  std::vector<float> weight;  // [out][in][kernel][kernel]
  std::vector<float> scale;   // [out]
  std::vector<float> bias;    // [out]

  Conv() = default;
  Conv(int in_ch, int out_ch, int k)
      : in(in_ch),
        out(out_ch),
        kernel(k),
        weight(static_cast<std::size_t>(out_ch * in_ch * k * k), 0.0f),
        scale(static_cast<std::size_t>(out_ch), 1.0f),
        bias(static_cast<std::size_t>(out_ch), 0.0f) {}

  float& w(int o, int i, int ky, int kx) {
    return weight[static_cast<std::size_t>(((o * in + i) * kernel + ky) * kernel + kx)];
  }
  float& center(int o, int i) { return w(o, i, kernel / 2, kernel / 2); }
  friend bool operator==(const Conv&, const Conv&) = default;
};

struct Block {
  Conv a;
  Conv b;
  friend bool operator==(const Block&, const Block&) = default;
};

struct Checkpoint {
  NetworkConfig config;
  std::uint64_t step = 0;
  Conv input;
  std::vector<Block> blocks;  // L - 1
  Conv policy;
  Conv value;
  std::vector<float> fc1_weight;  // [hidden][64]
  std::vector<float> fc1_bias;    // [hidden]
  std::vector<float> fc2_weight;  // [hidden]
  float fc2_bias = 0.0f;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct ActivationSet {
  int channels = 0;
  std::vector<std::vector<float>> layers;  // layers[l - 1] holds z^l

  const std::vector<float>& layer(int l) const { return layers.at(static_cast<std::size_t>(l - 1)); }
  float at(int l, int row, int col, int ch) const {
    return layer(l)[static_cast<std::size_t>((ch * 8 + row) * 8 + col)];
  }
};

struct NetworkOutput {
  std::vector<float> policy;  // 73 * 64, plane-major, same indexing as PolicyIndex::flat
  double value = 0.0;
};

inline void validate_config(const NetworkConfig& c) {
  if (c.blocks < 1 || c.channels < 1 || c.history < 1 || c.value_hidden < 1)
    throw ShapeError("network config needs blocks, channels, history and value_hidden >= 1");
  if (!(c.clip_max > 0.0f) || !(c.halfmove_divisor > 0.0f) || !(c.fullmove_divisor > 0.0f))
    throw ShapeError("network config needs positive clip_max and counter divisors");
}

/// All-zero weights (unit conv scales) with consistent shapes.
inline Checkpoint zero_checkpoint(const NetworkConfig& config, std::uint64_t step = 0) {
  validate_config(config);
  Checkpoint ck;
  ck.config = config;
  ck.step = step;
  const int c = config.channels;
  ck.input = Conv(config.input_planes(), c, 3);
  ck.blocks.assign(static_cast<std::size_t>(config.blocks - 1), Block{Conv(c, c, 3), Conv(c, c, 3)});
  ck.policy = Conv(c, policy_planes, 3);
  ck.value = Conv(c, 1, 1);
  ck.fc1_weight.assign(static_cast<std::size_t>(config.value_hidden * board_cells), 0.0f);
  ck.fc1_bias.assign(static_cast<std::size_t>(config.value_hidden), 0.0f);
  ck.fc2_weight.assign(static_cast<std::size_t>(config.value_hidden), 0.0f);
  return ck;
}

/// Number of f32 parameters stored for a config.
inline std::uint64_t parameter_count(const NetworkConfig& c) {
  auto conv = [](std::uint64_t in, std::uint64_t out, std::uint64_t k) { return out * in * k * k + 2 * out; };
  const std::uint64_t ch = static_cast<std::uint64_t>(c.channels);
  const std::uint64_t hidden = static_cast<std::uint64_t>(c.value_hidden);
  return conv(static_cast<std::uint64_t>(c.input_planes()), ch, 3) +
         static_cast<std::uint64_t>(c.blocks - 1) * 2 * conv(ch, ch, 3) + conv(ch, policy_planes, 3) +
         conv(ch, 1, 1) + hidden * 64 + hidden + hidden + 1;
}

inline constexpr std::uint64_t checkpoint_header_bytes = 4 + 4 + 4 * 3 + 4 * 3 + 4 + 8;

inline std::uint64_t checkpoint_file_size(const NetworkConfig& c) {
  return checkpoint_header_bytes + 4 * parameter_count(c);
}

namespace detail {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Same-size zero-padded convolution of a plane-major (in x 64) map.
inline RowMatrix conv(const Conv& cv, const float* x) {
  const int k = cv.kernel;
  const int half = k / 2;
  RowMatrix patches = RowMatrix::Zero(cv.in * k * k, board_cells);
  for (int i = 0; i < cv.in; ++i)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const int prow = (i * k + ky) * k + kx;
        for (int r = 0; r < 8; ++r) {
          const int sr = r + ky - half;
          if (sr < 0 || sr > 7) continue;
          for (int c = 0; c < 8; ++c) {
            const int sc = c + kx - half;
            if (sc < 0 || sc > 7) continue;
            patches(prow, r * 8 + c) = x[(i * 8 + sr) * 8 + sc];
          }
        }
      }
  const Eigen::Map<const RowMatrix> w(cv.weight.data(), cv.out, cv.in * k * k);
  RowMatrix y = w * patches;
  for (int o = 0; o < cv.out; ++o)
    y.row(o) = y.row(o).array() * cv.scale[static_cast<std::size_t>(o)] + cv.bias[static_cast<std::size_t>(o)];
  return y;
}

inline float relu_clip(float v, float clip) { return std::min(std::max(v, 0.0f), clip); }

}  // namespace detail

struct ForwardOptions {
  bool heads = true;  // skip policy/value when only activations are wanted
};

inline std::pair<NetworkOutput, ActivationSet> forward(const Checkpoint& ck, const InputTensor& x,
                                                       ForwardOptions opts = {}) {
  const auto& cfg = ck.config;
  if (x.history != cfg.history || x.data.size() != static_cast<std::size_t>(cfg.input_planes() * board_cells))
    throw ShapeError("input tensor has " + std::to_string(x.data.size() / board_cells) + " planes, network expects " +
                     std::to_string(cfg.input_planes()));
  const std::size_t d = static_cast<std::size_t>(cfg.activation_size());
  ActivationSet acts;
  acts.channels = cfg.channels;
  acts.layers.reserve(static_cast<std::size_t>(cfg.blocks));

  std::vector<float> z(d);
  {
    const auto y = detail::conv(ck.input, x.data.data());
    for (std::size_t i = 0; i < d; ++i) z[i] = detail::relu_clip(y.data()[i], cfg.clip_max);
  }
  acts.layers.push_back(z);
  for (const auto& blk : ck.blocks) {
    auto h = detail::conv(blk.a, z.data());
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = std::max(h.data()[i], 0.0f);
    const auto g = detail::conv(blk.b, h.data());
    for (std::size_t i = 0; i < d; ++i) z[i] = detail::relu_clip(z[i] + g.data()[i], cfg.clip_max);
    acts.layers.push_back(z);
  }

  NetworkOutput out;
  if (!opts.heads) return {std::move(out), std::move(acts)};
  const auto p = detail::conv(ck.policy, z.data());
  out.policy.assign(p.data(), p.data() + p.size());

  const auto vplane = detail::conv(ck.value, z.data());
  float acc = ck.fc2_bias;
  for (int j = 0; j < cfg.value_hidden; ++j) {
    float hj = ck.fc1_bias[static_cast<std::size_t>(j)];
    const float* row = ck.fc1_weight.data() + static_cast<std::size_t>(j) * board_cells;
    for (int s = 0; s < board_cells; ++s) hj += row[s] * std::max(vplane.data()[s], 0.0f);
    acc += ck.fc2_weight[static_cast<std::size_t>(j)] * std::max(hj, 0.0f);
  }
  out.value = std::tanh(static_cast<double>(acc));
  return {std::move(out), std::move(acts)};
}

// ---- planted and random constructors -----------------------------------------

/// Sets channel k of the input conv to a centre-only linear map of the input planes.
inline void add_planted_channel(Checkpoint& ck, int channel, const std::map<int, float>& coeffs, float bias) {
  if (channel < 0 || channel >= ck.config.channels) throw ShapeError("planted channel out of range");
  for (int p = 0; p < ck.input.in; ++p)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) ck.input.w(channel, p, ky, kx) = 0.0f;
  for (auto [plane, c] : coeffs) {
    if (plane < 0 || plane >= ck.config.input_planes()) throw ShapeError("planted input plane out of range");
    ck.input.center(channel, plane) = c;
  }
  ck.input.scale[static_cast<std::size_t>(channel)] = 1.0f;
  ck.input.bias[static_cast<std::size_t>(channel)] = bias;
}

/// Zero network whose channel k at every layer is clip(relu(sum_p coeffs[p] * x_p + bias)),
/// evaluated per square; all residual branches are zero so the feature persists to z^L.
inline Checkpoint plant_linear_feature(const NetworkConfig& config, int channel, const std::map<int, float>& coeffs,
                                       float bias, std::uint64_t step = 0) {
  auto ck = zero_checkpoint(config, step);
  add_planted_channel(ck, channel, coeffs, bias);
  return ck;
}

/// Value head reading channel k of z^L: v = tanh(gain * (sum over squares of z_k - 64 * offset)).
/// Uses two hidden units so the pre-tanh value can take either sign.
inline void plant_value_head(Checkpoint& ck, int channel, float offset, float gain) {
  if (channel < 0 || channel >= ck.config.channels) throw ShapeError("value channel out of range");
  if (ck.config.value_hidden < 2) throw ShapeError("planted value head needs at least two hidden units");
  ck.value = Conv(ck.config.channels, 1, 1);
  ck.value.center(0, channel) = 1.0f;
  std::fill(ck.fc1_weight.begin(), ck.fc1_weight.end(), 0.0f);
  std::fill(ck.fc1_bias.begin(), ck.fc1_bias.end(), 0.0f);
  std::fill(ck.fc2_weight.begin(), ck.fc2_weight.end(), 0.0f);
  for (int s = 0; s < board_cells; ++s) {
    ck.fc1_weight[static_cast<std::size_t>(s)] = 1.0f;
    ck.fc1_weight[static_cast<std::size_t>(board_cells + s)] = -1.0f;
  }
  ck.fc1_bias[0] = -64.0f * offset;
  ck.fc1_bias[1] = 64.0f * offset;
  ck.fc2_weight[0] = gain;
  ck.fc2_weight[1] = -gain;
  ck.fc2_bias = 0.0f;
}

/// Raises the policy logit of every move on one policy plane.
inline void plant_policy_plane(Checkpoint& ck, int plane, float boost) {
  if (plane < 0 || plane >= policy_planes) throw ShapeError("policy plane out of range");
  ck.policy.bias[static_cast<std::size_t>(plane)] += boost;
}

/// Weights and biases i.i.d. normal(0, scale^2 / fan_in); conv scales are 1.
inline Checkpoint random_checkpoint(const NetworkConfig& config, std::uint64_t seed, double scale,
                                    std::uint64_t step = 0) {
  if (!(scale > 0.0)) throw std::invalid_argument("random_checkpoint scale must be positive");
  auto ck = zero_checkpoint(config, step);
  Rng rng(seed);
  auto fill = [&](std::vector<float>& v, double fan_in) {
    const double sd = scale / std::sqrt(fan_in);
    for (auto& x : v) x = static_cast<float>(sd * rng.normal());
  };
  auto fill_conv = [&](Conv& c) {
    const double fan_in = static_cast<double>(c.in * c.kernel * c.kernel);
    fill(c.weight, fan_in);
    fill(c.bias, fan_in);
  };
  fill_conv(ck.input);
  for (auto& b : ck.blocks) {
    fill_conv(b.a);
    fill_conv(b.b);
  }
  fill_conv(ck.policy);
  fill_conv(ck.value);
  fill(ck.fc1_weight, board_cells);
  fill(ck.fc1_bias, board_cells);
  fill(ck.fc2_weight, config.value_hidden);
  std::vector<float> b2(1);
  fill(b2, config.value_hidden);
  ck.fc2_bias = b2[0];
  return ck;
}

// ---- file I/O -------------------------------------------------------------------

inline void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
  using namespace binio;
  const auto& c = ck.config;
  put_bytes(out, "AZPW");
  put_uint<std::uint32_t>(out, 1);
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(c.blocks));
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(c.channels));
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(c.history));
  put_f32(out, c.clip_max);
  put_f32(out, c.halfmove_divisor);
  put_f32(out, c.fullmove_divisor);
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(c.value_hidden));
  put_uint<std::uint64_t>(out, ck.step);
  auto vec = [&](const std::vector<float>& v) { put_f32s(out, v.data(), v.size()); };
  auto conv = [&](const Conv& cv) {
    vec(cv.weight);
    vec(cv.scale);
    vec(cv.bias);
  };
  conv(ck.input);
  for (const auto& b : ck.blocks) {
    conv(b.a);
    conv(b.b);
  }
  conv(ck.policy);
  conv(ck.value);
  vec(ck.fc1_weight);
  vec(ck.fc1_bias);
  vec(ck.fc2_weight);
  put_f32(out, ck.fc2_bias);
}

inline Checkpoint read_checkpoint(std::istream& in) {
  using namespace binio;
  try {
    const auto magic = get_bytes(in, 4);
    if (magic != "AZPW") throw CheckpointError(CheckpointErrorKind::magic, "not a checkpoint file (bad magic)");
    const auto version = get_uint<std::uint32_t>(in);
    if (version != 1)
      throw CheckpointError(CheckpointErrorKind::version,
                            "unsupported checkpoint version " + std::to_string(version) + " (reader supports 1)");
    NetworkConfig c;
    const auto blocks = get_uint<std::uint32_t>(in);
    const auto channels = get_uint<std::uint32_t>(in);
    const auto history = get_uint<std::uint32_t>(in);
    c.clip_max = get_f32(in);
    c.halfmove_divisor = get_f32(in);
    c.fullmove_divisor = get_f32(in);
    const auto hidden = get_uint<std::uint32_t>(in);
    const auto step = get_uint<std::uint64_t>(in);
    constexpr std::uint32_t sane = 1u << 16;
    if (blocks == 0 || channels == 0 || history == 0 || hidden == 0 || blocks > sane || channels > sane ||
        history > 1024 || hidden > sane)
      throw CheckpointError(CheckpointErrorKind::shape, "checkpoint header has inconsistent shape fields");
    c.blocks = static_cast<int>(blocks);
    c.channels = static_cast<int>(channels);
    c.history = static_cast<int>(history);
    c.value_hidden = static_cast<int>(hidden);
    try {
      validate_config(c);
    } catch (const ShapeError& e) {
      throw CheckpointError(CheckpointErrorKind::shape, e.what());
    }
    Checkpoint ck = zero_checkpoint(c, step);
    auto vec = [&](std::vector<float>& v) { get_f32s(in, v.data(), v.size()); };
    auto conv = [&](Conv& cv) {
      vec(cv.weight);
      vec(cv.scale);
      vec(cv.bias);
    };
    conv(ck.input);
    for (auto& b : ck.blocks) {
      conv(b.a);
      conv(b.b);
    }
    conv(ck.policy);
    conv(ck.value);
    vec(ck.fc1_weight);
    vec(ck.fc1_bias);
    vec(ck.fc2_weight);
    ck.fc2_bias = get_f32(in);
    if (in.peek() != std::char_traits<char>::eof())
      throw CheckpointError(CheckpointErrorKind::shape, "trailing bytes after checkpoint tensors");
    return ck;
  } catch (const Truncated& e) {
    throw CheckpointError(CheckpointErrorKind::truncated, std::string("checkpoint ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  binio::write_atomically(path, [&](std::ostream& out) { write_checkpoint(out, ck); });
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointErrorKind::io, "cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace azprobe::network
