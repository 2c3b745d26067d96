#pragma once

// Unsupervised views of layer activations: NMF factors over the square-by-channel matrix,
// and activation-input covariance maps.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "azprobe/concepts/dataset.hpp"
#include "azprobe/csv.hpp"
#include "azprobe/encoding.hpp"
#include "azprobe/network.hpp"
#include "azprobe/parallel.hpp"
#include "azprobe/rng.hpp"
#include "azprobe/svg.hpp"

namespace azprobe::unsup {

class UnsupError : public std::runtime_error {
 public:
  explicit UnsupError(const std::string& what) : std::runtime_error(what) {}
};

using Matrix = Eigen::MatrixXd;

/// One position's z^l (plane-major, C x 64) as a 64 x C square-by-channel matrix.
inline Matrix square_by_channel(std::span<const float> layer, int channels) {
  if (layer.size() != static_cast<std::size_t>(channels) * 64) throw UnsupError("activation size does not match channels");
  Matrix z(64, channels);
  for (int ch = 0; ch < channels; ++ch)
    for (int s = 0; s < 64; ++s) z(s, ch) = layer[static_cast<std::size_t>(ch * 64 + s)];
  return z;
}

/// Stacks several positions' square-by-channel matrices: row n * 64 + row * 8 + col.
inline Matrix stack_positions(const std::vector<std::vector<float>>& layers, int channels) {
  Matrix out(static_cast<Eigen::Index>(layers.size() * 64), channels);
  for (std::size_t n = 0; n < layers.size(); ++n)
    out.middleRows(static_cast<Eigen::Index>(n * 64), 64) = square_by_channel(layers[n], channels);
  return out;
}

// ---- NMF ----------------------------------------------------------------------------

struct NmfOptions {
  int factors = 8;
  std::uint64_t seed = 0;
  int restarts = 5;
  int max_iterations = 500;
  double tolerance = 1e-5;  // relative objective improvement
  double epsilon = 1e-12;
};

struct NmfModel {
  Matrix F;  // K x C
  int layer = 0;
  double objective = 0.0;  // ||Z - Omega F||^2
  double relative_error = 0.0;  // ||Z - Omega F|| / ||Z||
  int iterations = 0;
  int best_restart = 0;
  std::vector<double> objective_trace;  // of the kept restart

  int factors() const { return static_cast<int>(F.rows()); }
};

struct NmfFit {
  NmfModel model;
  Matrix omega;  // M x K
};

namespace detail {

inline void check_nonnegative(const Matrix& z) {
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (!(z.data()[i] >= 0.0)) throw UnsupError("NMF input must be non-negative and finite");
}

inline Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() * scale;
  return m;
}

}  // namespace detail

/// Lee-Seung multiplicative updates for min ||Z - Omega F||^2 with Omega, F >= 0.
/// Every restart asserts that the objective never rises.
inline NmfFit nmf_fit(const Matrix& z, const NmfOptions& opts = {}) {
  detail::check_nonnegative(z);
  const Eigen::Index K = opts.factors, C = z.cols(), M = z.rows();
  if (K < 1) throw UnsupError("NMF needs at least one factor");
  if (K >= C) throw UnsupError("NMF factor count must be below the channel count");
  if (M == 0) throw UnsupError("NMF input has no rows");
  if (opts.restarts < 1) throw UnsupError("NMF needs at least one restart");

  const double norm2 = z.squaredNorm();
  const double scale = z.mean() / static_cast<double>(K);
  Rng rng(opts.seed);
  NmfFit best;
  best.model.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    Matrix omega = detail::uniform_matrix(M, K, scale, rng);
    Matrix f = detail::uniform_matrix(K, C, scale, rng);
    double obj = (z - omega * f).squaredNorm();
    std::vector<double> trace{obj};
    int it = 0;
    while (it < opts.max_iterations && obj > 0.0) {
      ++it;
      const Matrix wtz = omega.transpose() * z;
      const Matrix wtw = omega.transpose() * omega;
      f = f.cwiseProduct(wtz.cwiseQuotient((wtw * f).array().matrix() + Matrix::Constant(K, C, opts.epsilon)));
      const Matrix zft = z * f.transpose();
      const Matrix fft = f * f.transpose();
      omega = omega.cwiseProduct(zft.cwiseQuotient(omega * fft + Matrix::Constant(M, K, opts.epsilon)));
      const double next = (z - omega * f).squaredNorm();
      if (next > obj + 1e-12 * norm2 + 1e-300)
        throw std::logic_error("NMF objective increased from " + std::to_string(obj) + " to " + std::to_string(next));
      const double improvement = obj > 0 ? (obj - next) / obj : 0.0;
      obj = next;
      trace.push_back(obj);
      if (improvement < opts.tolerance) break;
    }
    if (obj < best.model.objective) {
      best.model.F = std::move(f);
      best.omega = std::move(omega);
      best.model.objective = obj;
      best.model.iterations = it;
      best.model.best_restart = r;
      best.model.objective_trace = std::move(trace);
    }
  }
  best.model.relative_error = norm2 > 0 ? std::sqrt(best.model.objective / norm2) : 0.0;
  return best;
}

/// Omega >= 0 minimising ||z - Omega F||^2 for fixed F, by multiplicative updates on Omega.
inline Matrix nmf_project(const Matrix& z, const Matrix& F, int max_iterations = 20000, double tolerance = 1e-13,
                          double epsilon = 1e-12) {
  if (z.cols() != F.cols()) throw UnsupError("projection: activation channels do not match the factor matrix");
  detail::check_nonnegative(z);
  const Eigen::Index K = F.rows();
  Matrix omega = Matrix::Constant(z.rows(), K, z.mean() / static_cast<double>(K));
  const Matrix zft = z * F.transpose();
  const Matrix fft = F * F.transpose();
  double obj = (z - omega * F).squaredNorm();
  for (int it = 0; it < max_iterations && obj > 0.0; ++it) {
    omega = omega.cwiseProduct(zft.cwiseQuotient(omega * fft + Matrix::Constant(z.rows(), K, epsilon)));
    const double next = (z - omega * F).squaredNorm();
    const double improvement = obj > 0 ? (obj - next) / obj : 0.0;
    obj = next;
    if (improvement < tolerance) break;
  }
  return omega;
}

using Grid = std::array<std::array<double, 8>, 8>;  // [row][col] in the mover's frame

/// Column k of a 64 x K weight matrix reshaped to 8 x 8.
inline Grid factor_heatmap(const Matrix& omega, int k) {
  if (omega.rows() != 64) throw UnsupError("factor heatmap needs one position's 64 x K weights");
  if (k < 0 || k >= omega.cols()) throw UnsupError("factor index out of range");
  Grid g{};
  for (int s = 0; s < 64; ++s) g[static_cast<std::size_t>(s / 8)][static_cast<std::size_t>(s % 8)] = omega(s, k);
  return g;
}

/// Position diagram with the grid drawn as a highlight, opacity normalised to max 1.
inline std::string heatmap_svg(const Grid& g, const chess::Position& pos, const std::string& title) {
  double peak = 0;
  for (const auto& row : g)
    for (double v : row) peak = std::max(peak, v);
  svg::Board b;
  b.title = title;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      const auto sq = encoding::from_oriented({r, c}, pos.side_to_move);
      auto& cell = b.cells[static_cast<std::size_t>(sq.rank())][static_cast<std::size_t>(sq.file())];
      cell.overlay = peak > 0 ? g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] / peak : 0.0;
      if (const auto piece = pos.at(sq))
        cell.glyphs.push_back({svg::piece_glyph(encoding::piece_plane(piece->kind), piece->color == chess::Color::white), 1.0});
    }
  if (peak <= 0) b.note = "factor has no weight on this position";
  return svg::render(b);
}

inline std::string heatmap_file_name(int layer, int factor, const std::string& position_id) {
  return std::to_string(layer) + "_" + std::to_string(factor) + "_" + position_id + ".svg";
}

inline void write_factor_csv(std::ostream& out, const Matrix& F) {
  out << "factor";
  for (Eigen::Index c = 0; c < F.cols(); ++c) out << ",channel_" << c;
  out << '\n';
  for (Eigen::Index k = 0; k < F.rows(); ++k) {
    out << k;
    for (Eigen::Index c = 0; c < F.cols(); ++c) out << ',' << csv::fmt(F(k, c));
    out << '\n';
  }
}

inline void write_weights_csv(std::ostream& out, const Matrix& omega) {
  out << "row,col";
  for (Eigen::Index k = 0; k < omega.cols(); ++k) out << ",factor_" << k;
  out << '\n';
  for (Eigen::Index s = 0; s < omega.rows(); ++s) {
    out << s / 8 << ',' << s % 8;
    for (Eigen::Index k = 0; k < omega.cols(); ++k) out << ',' << csv::fmt(omega(s, k));
    out << '\n';
  }
}

// ---- activation-input covariance -------------------------------------------------------

struct ActivationIndex {
  int row = 0;
  int col = 0;
  int channel = 0;
};

struct CovarianceMap {
  int layer = 0;
  ActivationIndex index;
  int planes = 0;
  std::size_t samples = 0;
  std::vector<double> values;  // plane-major like the input tensor

  double at(int plane, int row, int col) const { return values[static_cast<std::size_t>((plane * 8 + row) * 8 + col)]; }
};

/// Streaming co-moment of one activation against every input entry (Welford / Chan merge).
struct CovarianceAccumulator {
  std::size_t n = 0;
  double mean_a = 0.0;
  std::vector<double> mean_x;
  std::vector<double> comoment;

  explicit CovarianceAccumulator(std::size_t size = 0) : mean_x(size, 0.0), comoment(size, 0.0) {}

  void add(double a, std::span<const float> x) {
    ++n;
    const double inv = 1.0 / static_cast<double>(n);
    const double da = a - mean_a;
    mean_a += da * inv;
    for (std::size_t k = 0; k < mean_x.size(); ++k) {
      mean_x[k] += (x[k] - mean_x[k]) * inv;
      comoment[k] += da * (x[k] - mean_x[k]);
    }
  }

  void merge(const CovarianceAccumulator& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n), nt = na + nb;
    const double da = o.mean_a - mean_a;
    for (std::size_t k = 0; k < mean_x.size(); ++k) {
      const double dx = o.mean_x[k] - mean_x[k];
      comoment[k] += o.comoment[k] + da * dx * na * nb / nt;
      mean_x[k] += dx * nb / nt;
    }
    mean_a += da * nb / nt;
    n += o.n;
  }

  std::vector<double> covariance() const {
    std::vector<double> out(comoment.size(), 0.0);
    if (n == 0) return out;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = comoment[k] / static_cast<double>(n);
    return out;
  }
};

inline constexpr std::size_t covariance_shard_size = 256;

/// cov(z^l_i, z^0) over the corpus for each requested index, in one pass of forward evaluations.
/// Shards are fixed-size and merged in order, so the result does not depend on `jobs`.
inline std::vector<CovarianceMap> activation_input_covariance(const std::vector<concepts::PositionRecord>& corpus,
                                                              const network::Checkpoint& ck, int layer,
                                                              const std::vector<ActivationIndex>& indices,
                                                              int jobs = 1) {
  if (corpus.empty()) throw UnsupError("covariance needs a non-empty corpus");
  if (layer < 1 || layer > ck.config.blocks) throw UnsupError("covariance layer out of range");
  for (const auto& i : indices)
    if (i.row < 0 || i.row > 7 || i.col < 0 || i.col > 7 || i.channel < 0 || i.channel >= ck.config.channels)
      throw UnsupError("activation index out of range");
  const auto params = ck.config.encoding();
  const std::size_t input_size = static_cast<std::size_t>(params.planes()) * 64;
  const std::size_t shards = (corpus.size() + covariance_shard_size - 1) / covariance_shard_size;
  std::vector<std::vector<CovarianceAccumulator>> partial(shards);
  parallel_for(shards, jobs, [&](std::size_t s) {
    auto& acc = partial[s];
    acc.assign(indices.size(), CovarianceAccumulator(input_size));
    const std::size_t end = std::min(corpus.size(), (s + 1) * covariance_shard_size);
    for (std::size_t p = s * covariance_shard_size; p < end; ++p) {
      const auto& r = corpus[p];
      const auto x = r.history.empty() ? encoding::encode_input(r.position, params)
                                       : encoding::encode_input(std::span<const chess::Position>(r.history), params);
      const auto acts = network::forward(ck, x, {.heads = false}).second;
      for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto& i = indices[k];
        acc[k].add(acts.at(layer, i.row, i.col, i.channel), x.data);
      }
    }
  });
  std::vector<CovarianceMap> out;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    CovarianceAccumulator total(input_size);
    for (const auto& shard : partial) total.merge(shard[k]);
    out.push_back({layer, indices[k], params.planes(), total.n, total.covariance()});
  }
  return out;
}

/// All channels at one square.
inline std::vector<CovarianceMap> covariance_sweep(const std::vector<concepts::PositionRecord>& corpus,
                                                   const network::Checkpoint& ck, int layer, int row, int col,
                                                   int jobs = 1) {
  std::vector<ActivationIndex> idx;
  for (int ch = 0; ch < ck.config.channels; ++ch) idx.push_back({row, col, ch});
  return activation_input_covariance(corpus, ck, layer, idx, jobs);
}

/// Opacities of the 12 current-position piece planes: clipped at 0 and jointly scaled to max 1.
inline std::vector<double> covariance_opacities(const CovarianceMap& m) {
  std::vector<double> out(12 * 64, 0.0);
  double peak = 0;
  for (std::size_t k = 0; k < out.size(); ++k) peak = std::max(peak, m.values[k]);
  if (peak <= 0) return out;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::max(0.0, m.values[k]) / peak;
  return out;
}

/// Translucent pieces on one board; the side to move is drawn as White, rank 1 at the bottom.
inline std::string covariance_svg(const CovarianceMap& m) {
  const auto op = covariance_opacities(m);
  svg::Board b;
  b.title = "layer " + std::to_string(m.layer) + " (" + std::to_string(m.index.row) + "," +
            std::to_string(m.index.col) + ") channel " + std::to_string(m.index.channel);
  bool any = false;
  for (int plane = 0; plane < 12; ++plane)
    for (int s = 0; s < 64; ++s) {
      const double o = op[static_cast<std::size_t>(plane * 64 + s)];
      if (o <= 0) continue;
      any = true;
      b.cells[static_cast<std::size_t>(s / 8)][static_cast<std::size_t>(s % 8)].glyphs.push_back(
          {svg::piece_glyph(plane % 6, plane < 6), o});
    }
  if (!any) b.note = "no positive covariance";
  return svg::render(b);
}

inline std::string covariance_file_name(const CovarianceMap& m) {
  return "cov_" + std::to_string(m.layer) + "_" + std::to_string(m.index.row) + std::to_string(m.index.col) + "_" +
         std::to_string(m.index.channel) + ".svg";
}

/// Long-format CSV: plane,row,col,covariance.
inline void write_covariance_csv(std::ostream& out, const CovarianceMap& m) {
  out << "plane,row,col,covariance\n";
  for (int p = 0; p < m.planes; ++p)
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) out << p << ',' << r << ',' << c << ',' << csv::fmt(m.at(p, r, c)) << '\n';
}

}  // namespace azprobe::unsup
