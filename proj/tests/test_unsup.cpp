#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "azprobe/unsup.hpp"
#include "support/positions.hpp"

using namespace azprobe;
using namespace azprobe::unsup;

namespace {

Matrix random_nonnegative(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

std::vector<concepts::PositionRecord> corpus(int games, int plies, unsigned seed) {
  std::vector<concepts::PositionRecord> out;
  for (const auto& p : support::playout_positions(games, plies, seed)) out.push_back({chess::emit_fen(p), p, {p}, {}, false});
  return out;
}

network::NetworkConfig small_config() {
  network::NetworkConfig cfg;
  cfg.blocks = 3;
  cfg.channels = 4;
  cfg.value_hidden = 4;
  return cfg;
}

/// Naive two-pass covariance of one activation against every input entry.
std::vector<double> two_pass(const std::vector<concepts::PositionRecord>& rs, const network::Checkpoint& ck, int layer,
                             ActivationIndex i) {
  std::vector<double> a;
  std::vector<std::vector<float>> xs;
  for (const auto& r : rs) {
    const auto x = encoding::encode_input(r.position, ck.config.encoding());
    a.push_back(network::forward(ck, x).second.at(layer, i.row, i.col, i.channel));
    xs.push_back(x.data);
  }
  const double n = static_cast<double>(rs.size());
  double ma = 0;
  for (double v : a) ma += v;
  ma /= n;
  std::vector<double> out(xs[0].size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    double mx = 0;
    for (const auto& x : xs) mx += x[k];
    mx /= n;
    double s = 0;
    for (std::size_t p = 0; p < xs.size(); ++p) s += (a[p] - ma) * (xs[p][k] - mx);
    out[k] = s / n;
  }
  return out;
}

}  // namespace

TEST(Nmf, ZeroInputGivesZeroFactors) {
  const Matrix z = Matrix::Zero(128, 6);
  const auto fit = nmf_fit(z, {.factors = 3});
  EXPECT_EQ(fit.model.objective, 0.0);
  EXPECT_EQ(fit.model.F.norm(), 0.0);
  EXPECT_EQ(fit.omega.norm(), 0.0);
}

TEST(Nmf, RejectsBadInput) {
  Matrix z = random_nonnegative(64, 6, 1);
  EXPECT_THROW(nmf_fit(z, {.factors = 6}), UnsupError);
  EXPECT_THROW(nmf_fit(z, {.factors = 0}), UnsupError);
  z(3, 2) = -0.5;
  EXPECT_THROW(nmf_fit(z, {.factors = 2}), UnsupError);
}

TEST(Nmf, ExactRankProgressAndMonotoneObjective) {
  const Matrix omega = random_nonnegative(6400, 8, 2);
  const Matrix f = random_nonnegative(8, 32, 3);
  const Matrix z = omega * f;
  const auto fit = nmf_fit(z, {.factors = 8, .seed = 11});
  // Multiplicative updates on dense random factors converge slowly; 500 iterations get to ~1%.
  EXPECT_LT(fit.model.relative_error, 0.02);
  const auto& t = fit.model.objective_trace;
  for (std::size_t k = 1; k < t.size(); ++k) EXPECT_LE(t[k], t[k - 1]);
  EXPECT_TRUE((fit.model.F.array() >= 0).all());
  EXPECT_TRUE((fit.omega.array() >= 0).all());

  const Matrix small = z.topRows(640);
  const auto short_run = nmf_fit(small, {.factors = 8, .seed = 11, .restarts = 1, .max_iterations = 200});
  const auto long_run =
      nmf_fit(small, {.factors = 8, .seed = 11, .restarts = 1, .max_iterations = 4000, .tolerance = 0.0});
  EXPECT_LT(long_run.model.relative_error, 0.5 * short_run.model.relative_error);
}

TEST(Nmf, SeededFitIsReproducible) {
  const Matrix z = random_nonnegative(640, 10, 4);
  const auto a = nmf_fit(z, {.factors = 3, .seed = 5, .restarts = 2, .max_iterations = 50});
  const auto b = nmf_fit(z, {.factors = 3, .seed = 5, .restarts = 2, .max_iterations = 50});
  EXPECT_EQ(a.model.F, b.model.F);
  EXPECT_EQ(a.model.objective, b.model.objective);
}

TEST(Nmf, ProjectionMatchesTrainingError) {
  const Matrix z = random_nonnegative(64 * 20, 12, 6);
  const auto fit = nmf_fit(z, {.factors = 4, .seed = 1});
  for (int pos : {0, 7, 19}) {
    const Matrix block = z.middleRows(pos * 64, 64);
    const double train = (block - fit.omega.middleRows(pos * 64, 64) * fit.model.F).squaredNorm();
    const Matrix omega = nmf_project(block, fit.model.F);
    EXPECT_LE((block - omega * fit.model.F).squaredNorm(), train + 1e-6);
    EXPECT_TRUE((omega.array() >= 0).all());
  }
  EXPECT_EQ(nmf_project(Matrix::Zero(64, 12), fit.model.F).norm(), 0.0);
  EXPECT_THROW(nmf_project(Matrix::Zero(64, 11), fit.model.F), UnsupError);
}

TEST(Nmf, ProjectionConcentratesOnDisjointFactor) {
  Matrix f = Matrix::Zero(3, 9);
  for (int k = 0; k < 3; ++k)
    for (int c = 0; c < 3; ++c) f(k, k * 3 + c) = 1.0 + 0.5 * c;
  const Matrix z = (2.5 * f.row(1)).replicate(64, 1);
  const Matrix omega = nmf_project(z, f);
  for (int s = 0; s < 64; ++s) {
    EXPECT_NEAR(omega(s, 1), 2.5, 1e-6);
    EXPECT_LT(omega(s, 0), 1e-3);
    EXPECT_LT(omega(s, 2), 1e-3);
  }
}

TEST(Nmf, PlantedPawnChannelFactor) {
  auto ck = network::plant_linear_feature(small_config(), 0, {{5, 1.0f}}, 0.0f);
  network::add_planted_channel(ck, 1, {{11, 1.0f}}, 0.0f);
  const auto rs = corpus(4, 30, 3);
  std::vector<std::vector<float>> layers;
  for (const auto& r : rs)
    layers.push_back(network::forward(ck, encoding::encode_input(r.position, ck.config.encoding())).second.layer(3));
  const auto fit = nmf_fit(stack_positions(layers, 4), {.factors = 2, .seed = 2});
  const int pawn_factor = fit.model.F(0, 0) > fit.model.F(1, 0) ? 0 : 1;
  for (std::size_t p = 0; p < rs.size(); p += 17) {
    const auto g = factor_heatmap(fit.omega.middleRows(static_cast<Eigen::Index>(p * 64), 64), pawn_factor);
    double peak = 0;
    for (const auto& row : g)
      for (double v : row) peak = std::max(peak, v);
    const auto mover = rs[p].position.side_to_move;
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        const auto piece = rs[p].position.at(encoding::from_oriented({r, c}, mover));
        const bool own_pawn = piece && piece->kind == chess::PieceKind::pawn && piece->color == mover;
        EXPECT_EQ(g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] > 1e-3 * peak, own_pawn)
            << rs[p].fen << " row " << r << " col " << c;
      }
  }
}

TEST(Nmf, HeatmapRendering) {
  const auto pos = chess::start_position();
  const auto blank = heatmap_svg(factor_heatmap(Matrix::Zero(64, 2), 1), pos, "blank");
  EXPECT_EQ(blank.find("fill=\"#d62728\""), std::string::npos);
  Matrix omega = Matrix::Zero(64, 2);
  omega(12, 0) = 0.2;
  omega(13, 0) = 0.4;
  const auto svg = heatmap_svg(factor_heatmap(omega, 0), pos, "f0");
  EXPECT_NE(svg.find("fill-opacity=\"1.0000\""), std::string::npos);
  EXPECT_NE(svg.find("fill-opacity=\"0.5000\""), std::string::npos);
  EXPECT_EQ(heatmap_file_name(3, 1, "p7"), "3_1_p7.svg");
  EXPECT_THROW(factor_heatmap(omega, 2), UnsupError);
  std::ostringstream f, w;
  write_factor_csv(f, Matrix::Ones(2, 3));
  EXPECT_EQ(f.str(), "factor,channel_0,channel_1,channel_2\n0,1,1,1\n1,1,1,1\n");
  write_weights_csv(w, omega);
  EXPECT_EQ(w.str().substr(0, 27), "row,col,factor_0,factor_1\n0");
}

TEST(Covariance, StreamingMatchesTwoPassOracle) {
  const auto ck = network::random_checkpoint(small_config(), 3, 1.0);
  const auto rs = corpus(15, 80, 4);
  ASSERT_GE(rs.size(), 1000u);
  const ActivationIndex idx{5, 4, 2};
  const auto maps = activation_input_covariance(rs, ck, 2, {idx}, 3);
  const auto oracle = two_pass(rs, ck, 2, idx);
  double scale = 0;
  for (double v : oracle) scale = std::max(scale, std::abs(v));
  ASSERT_GT(scale, 0.0);
  for (std::size_t k = 0; k < oracle.size(); ++k) EXPECT_LE(std::abs(maps[0].values[k] - oracle[k]), 1e-10 * scale);
  const auto serial = activation_input_covariance(rs, ck, 2, {idx}, 1);
  EXPECT_EQ(serial[0].values, maps[0].values);
  for (double v : maps[0].values) {
    EXPECT_GE(v, -15.0);
    EXPECT_LE(v, 15.0);
  }
}

TEST(Covariance, ConstantActivationHasZeroCovariance) {
  const auto ck = network::plant_linear_feature(small_config(), 1, {}, 3.0f);
  const auto maps = activation_input_covariance(corpus(3, 40, 5), ck, 1, {{2, 2, 1}});
  for (double v : maps[0].values) EXPECT_EQ(v, 0.0);
  EXPECT_NE(covariance_svg(maps[0]).find("no positive covariance"), std::string::npos);
}

TEST(Covariance, PlantedChannelPeaksAtItsPlaneEntry) {
  const auto ck = network::plant_linear_feature(small_config(), 0, {{5, 1.0f}}, 0.0f);
  const auto rs = corpus(15, 80, 6);
  const auto m = activation_input_covariance(rs, ck, 1, {{1, 4, 0}})[0];
  double mean = 0, sq = 0;
  for (const auto& r : rs) {
    const double x = encoding::encode_input(r.position, ck.config.encoding()).at(5, 1, 4);
    mean += x;
    sq += x * x;
  }
  mean /= static_cast<double>(rs.size());
  const double var = sq / static_cast<double>(rs.size()) - mean * mean;
  EXPECT_NEAR(m.at(5, 1, 4), var, 1e-12);
  const auto top = std::max_element(m.values.begin(), m.values.end()) - m.values.begin();
  EXPECT_EQ(top, (5 * 8 + 1) * 8 + 4);
}

TEST(Covariance, IdentityResidualMapsPersistAcrossLayers) {
  const auto ck = network::plant_linear_feature(small_config(), 0, {{5, 1.0f}, {4, 0.5f}}, 0.25f);
  const auto rs = corpus(5, 60, 7);
  const auto first = activation_input_covariance(rs, ck, 1, {{3, 3, 0}})[0];
  const auto last = activation_input_covariance(rs, ck, 3, {{3, 3, 0}})[0];
  for (std::size_t k = 0; k < first.values.size(); ++k) EXPECT_NEAR(first.values[k], last.values[k], 1e-10);
}

TEST(Covariance, AccumulatorMergeIsExact) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  CovarianceAccumulator whole(2), a(2), b(2);
  for (int i = 0; i < 500; ++i) {
    const float x[2] = {static_cast<float>(g(rng)), static_cast<float>(g(rng))};
    const double v = x[0] + g(rng);
    whole.add(v, x);
    (i < 123 ? a : b).add(v, x);
  }
  a.merge(b);
  EXPECT_NEAR(a.covariance()[0], whole.covariance()[0], 1e-12);
  EXPECT_NEAR(a.covariance()[1], whole.covariance()[1], 1e-12);
}

TEST(Covariance, VisualisationScaling) {
  CovarianceMap m;
  m.layer = 2;
  m.index = {5, 4, 7};
  m.planes = 21;
  m.values.assign(21 * 64, 0.0);
  m.values[(5 * 8 + 3) * 8 + 4] = 0.8;   // mover pawn on e4
  m.values[(1 * 8 + 0) * 8 + 0] = 0.4;   // mover queen on a1
  m.values[(7 * 8 + 2) * 8 + 2] = -2.0;  // never drawn
  const auto op = covariance_opacities(m);
  EXPECT_EQ(op[(5 * 8 + 3) * 8 + 4], 1.0);
  EXPECT_EQ(op[(1 * 8 + 0) * 8 + 0], 0.5);
  EXPECT_EQ(op[(7 * 8 + 2) * 8 + 2], 0.0);
  const auto svg = covariance_svg(m);
  EXPECT_NE(svg.find("♙"), std::string::npos);
  EXPECT_EQ(svg.find("♛"), std::string::npos);
  EXPECT_EQ(covariance_file_name(m), "cov_2_54_7.svg");
}
