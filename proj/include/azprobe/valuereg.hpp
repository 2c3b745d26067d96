#pragma once

// Value regression: v_hat = tanh(w . c + b), fitted under mean absolute error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "azprobe/concepts/dataset.hpp"
#include "azprobe/concepts/table.hpp"
#include "azprobe/csv.hpp"
#include "azprobe/network.hpp"
#include "azprobe/parallel.hpp"
#include "azprobe/rng.hpp"
#include "azprobe/svg.hpp"

namespace azprobe::valuereg {

class ValueError : public std::runtime_error {
 public:
  explicit ValueError(const std::string& what) : std::runtime_error(what) {}
};

/// N x J, row-major.
struct ConceptMatrix {
  std::vector<std::string> names;
  std::size_t rows = 0;
  std::vector<double> data;

  std::size_t cols() const { return names.size(); }
  double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols(), cols()}; }
};

struct GlmOptions {
  bool normalize = false;  // divide columns by their standard deviation
  std::size_t max_iterations = 100000;
  std::size_t window = 50;
  double min_improvement = 1e-8;
  double initial_step = 1.0;
  bool trace = false;
};

struct ValueModel {
  std::vector<std::string> concepts;
  std::vector<double> divisors;  // column normalisers, all > 0
  std::vector<double> w;         // in normalised units
  double b = 0.0;
  std::uint64_t step = 0;
  double train_loss = 0.0;
  std::size_t iterations = 0;
  std::vector<double> loss_trace;
  std::vector<std::string> warnings;

  double predict(std::span<const double> c) const {
    double u = b;
    for (std::size_t j = 0; j < w.size(); ++j) u += w[j] * c[j] / divisors[j];
    return std::tanh(u);
  }
};

inline double l1_loss(const ValueModel& m, const ConceptMatrix& c, std::span<const double> v) {
  if (c.rows == 0) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < c.rows; ++i) s += std::abs(m.predict(c.row(i)) - v[i]);
  return s / static_cast<double>(c.rows);
}

namespace detail {

inline void check_inputs(const ConceptMatrix& c, std::span<const double> v) {
  if (c.data.size() != c.rows * c.cols()) throw ValueError("concept matrix has inconsistent shape");
  if (v.size() != c.rows) throw ValueError("value vector length does not match concept rows");
  if (c.rows == 0) throw ValueError("no samples to fit");
  for (double x : c.data)
    if (!std::isfinite(x)) throw ValueError("non-finite concept value");
  for (double x : v)
    if (!std::isfinite(x) || std::abs(x) > 1.0) throw ValueError("value targets must be finite and within [-1, 1]");
}

}  // namespace detail

/// Full-batch descent along sign(r) (1 - tanh^2) c from zero, each coordinate scaled by
/// 1 / mean(c_j^2), halving the step until the loss drops. Stops when the loss fell by less than `min_improvement` over `window` iterations.
inline ValueModel fit_value_glm(const ConceptMatrix& c, std::span<const double> v, const GlmOptions& opts = {}) {
  detail::check_inputs(c, v);
  const std::size_t n = c.rows, J = c.cols();
  ValueModel m;
  m.concepts = c.names;
  m.divisors.assign(J, 1.0);
  if (opts.normalize) {
    for (std::size_t j = 0; j < J; ++j) {
      double mean = 0, sq = 0;
      for (std::size_t i = 0; i < n; ++i) mean += c.at(i, j);
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) sq += (c.at(i, j) - mean) * (c.at(i, j) - mean);
      const double sd = std::sqrt(sq / static_cast<double>(n));
      if (sd > 0) m.divisors[j] = sd;
    }
  }
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; }))
    m.warnings.push_back("all value targets are equal");

  // Column-major normalised copy.
  std::vector<double> x(n * J);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < J; ++j) x[j * n + i] = c.at(i, j) / m.divisors[j];

  // Diagonal preconditioner: rarely non-zero columns would otherwise barely move.
  std::vector<double> precond(J, 1.0);
  for (std::size_t j = 0; j < J; ++j) {
    double sq = 0;
    for (std::size_t i = 0; i < n; ++i) sq += x[j * n + i] * x[j * n + i];
    if (sq > 0) precond[j] = static_cast<double>(n) / sq;
  }

  std::vector<double> u(n, 0.0);
  auto loss_of = [&](const std::vector<double>& w, double b, std::vector<double>& pre) {
    pre.assign(n, b);
    for (std::size_t j = 0; j < J; ++j) {
      if (w[j] == 0.0) continue;
      const double* col = x.data() + j * n;
      for (std::size_t i = 0; i < n; ++i) pre[i] += w[j] * col[i];
    }
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(std::tanh(pre[i]) - v[i]);
    return s / static_cast<double>(n);
  };

  m.w.assign(J, 0.0);
  double loss = loss_of(m.w, m.b, u);
  std::vector<double> history{loss};
  std::vector<double> gw(J), trial_w(J), trial_u;
  double step = opts.initial_step;
  for (m.iterations = 0; m.iterations < opts.max_iterations && loss > 0.0;) {
    ++m.iterations;
    double gb = 0;
    std::fill(gw.begin(), gw.end(), 0.0);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = std::tanh(u[i]);
      const double r = t - v[i];
      s[i] = r > 0 ? 1.0 - t * t : r < 0 ? -(1.0 - t * t) : 0.0;
      gb += s[i];
    }
    for (std::size_t j = 0; j < J; ++j) {
      const double* col = x.data() + j * n;
      double g = 0;
      for (std::size_t i = 0; i < n; ++i) g += s[i] * col[i];
      gw[j] = precond[j] * g / static_cast<double>(n);
    }
    gb /= static_cast<double>(n);

    bool accepted = false;
    for (; step > 1e-14; step *= 0.5) {
      for (std::size_t j = 0; j < J; ++j) trial_w[j] = m.w[j] - step * gw[j];
      const double trial_b = m.b - step * gb;
      const double trial = loss_of(trial_w, trial_b, trial_u);
      if (trial < loss) {
        m.w = trial_w;
        m.b = trial_b;
        u.swap(trial_u);
        loss = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    step = std::min(step * 2.0, 1e3);
    history.push_back(loss);
    if (history.size() > opts.window && history[history.size() - 1 - opts.window] - loss < opts.min_improvement) break;
  }
  m.train_loss = loss;
  if (opts.trace) m.loss_trace = std::move(history);
  return m;
}

// ---- trajectories -----------------------------------------------------------------

struct TrajectoryPoint {
  ValueModel model;
  double test_loss = 0.0;
};

struct WeightTrajectory {
  std::vector<std::string> concepts;
  std::vector<TrajectoryPoint> points;  // one per checkpoint, in input order
  std::vector<std::string> warnings;
};

struct RegressionOptions {
  GlmOptions glm;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct CheckpointValues {
  std::uint64_t step = 0;
  std::vector<double> values;
};

/// Fits one model per checkpoint on a shared seeded train/test split of the rows.
inline WeightTrajectory fit_trajectory(const ConceptMatrix& c, const std::vector<CheckpointValues>& targets,
                                       const RegressionOptions& opts = {}) {
  if (c.rows == 0) throw ValueError("no positions to regress on");
  if (!(opts.test_fraction >= 0.0 && opts.test_fraction < 1.0)) throw ValueError("test fraction must be in [0, 1)");
  std::vector<std::size_t> order(c.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(opts.seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_test = static_cast<std::size_t>(std::floor(opts.test_fraction * static_cast<double>(c.rows)));
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  if (train.empty()) throw ValueError("training split is empty");
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  auto take = [&](const std::vector<std::size_t>& idx) {
    ConceptMatrix out;
    out.names = c.names;
    out.rows = idx.size();
    for (auto i : idx) out.data.insert(out.data.end(), c.row(i).begin(), c.row(i).end());
    return out;
  };
  const auto ctr = take(train), cte = take(test);

  WeightTrajectory out;
  out.concepts = c.names;
  out.points.resize(targets.size());
  parallel_for(targets.size(), opts.jobs, [&](std::size_t k) {
    const auto& t = targets[k];
    if (t.values.size() != c.rows) throw ValueError("value vector length does not match concept rows");
    std::vector<double> vtr, vte;
    for (auto i : train) vtr.push_back(t.values[i]);
    for (auto i : test) vte.push_back(t.values[i]);
    auto& p = out.points[k];
    p.model = fit_value_glm(ctr, vtr, opts.glm);
    p.model.step = t.step;
    p.test_loss = l1_loss(p.model, cte, vte);
  });
  for (const auto& p : out.points)
    for (const auto& w : p.model.warnings) out.warnings.push_back("checkpoint " + std::to_string(p.model.step) + ": " + w);
  return out;
}

/// Network value output for each record, from the side to move's point of view.
inline std::vector<double> network_values(const network::Checkpoint& ck,
                                          const std::vector<concepts::PositionRecord>& records, int jobs = 1) {
  std::vector<double> out(records.size());
  const auto params = ck.config.encoding();
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const auto& r = records[i];
    const auto x = r.history.empty() ? encoding::encode_input(r.position, params)
                                     : encoding::encode_input(std::span<const chess::Position>(r.history), params);
    out[i] = network::forward(ck, x).first.value;
  });
  return out;
}

inline const std::vector<std::string>& piece_concepts() {
  static const std::vector<std::string> names = {"pawn_diff", "knight_diff", "bishop_diff", "rook_diff", "queen_diff"};
  return names;
}

/// [d_P, d_N, d_B, d_R, d_Q], side to move minus opponent.
inline std::vector<double> material_differences(const chess::Position& p) {
  using chess::PieceKind;
  const auto me = p.side_to_move, them = !p.side_to_move;
  std::vector<double> d;
  for (auto k : {PieceKind::pawn, PieceKind::knight, PieceKind::bishop, PieceKind::rook, PieceKind::queen})
    d.push_back(static_cast<double>(p.count(me, k) - p.count(them, k)));
  return d;
}

inline WeightTrajectory piece_value_regression(std::span<const network::Checkpoint> checkpoints,
                                               const std::vector<concepts::PositionRecord>& records,
                                               const RegressionOptions& opts = {}) {
  ConceptMatrix c;
  c.names = piece_concepts();
  std::vector<concepts::PositionRecord> kept;
  for (const auto& r : records) {
    const auto d = material_differences(r.position);
    if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) continue;
    c.data.insert(c.data.end(), d.begin(), d.end());
    kept.push_back(r);
  }
  c.rows = kept.size();
  if (kept.empty()) throw ValueError("no positions with a piece-count difference");
  std::vector<CheckpointValues> targets;
  for (const auto& ck : checkpoints) targets.push_back({ck.step, network_values(ck, kept, opts.jobs)});
  return fit_trajectory(c, targets, opts);
}

inline const std::vector<std::string>& highlevel_concepts() {
  static const std::vector<std::string> names = {"imbalance_t_ph", "king_safety_t_ph", "material_t_ph",
                                                 "mobility_t_ph",  "space_t_ph",       "threats_t_ph"};
  return names;
}

/// Rows are the records found in the table; columns default to the six phase-weighted totals.
/// Columns are always normalised by their standard deviation.
inline WeightTrajectory highlevel_concept_regression(std::span<const network::Checkpoint> checkpoints,
                                                     const std::vector<concepts::PositionRecord>& records,
                                                     const concepts::ExternalConcepts& table,
                                                     RegressionOptions opts = {},
                                                     std::vector<std::string> columns = highlevel_concepts()) {
  for (const auto& col : columns)
    if (std::find(table.columns.begin(), table.columns.end(), col) == table.columns.end())
      throw ValueError("concept table is missing column '" + col + "'");
  ConceptMatrix c;
  c.names = columns;
  std::vector<concepts::PositionRecord> kept;
  std::size_t missing = 0;
  for (const auto& r : records) {
    auto it = table.by_fen.find(r.fen);
    if (it == table.by_fen.end()) {
      ++missing;
      continue;
    }
    for (const auto& col : columns) c.data.push_back(it->second.values.at(col));
    kept.push_back(r);
  }
  c.rows = kept.size();
  if (kept.empty()) throw ValueError("no positions found in the concept table");
  opts.glm.normalize = true;
  std::vector<CheckpointValues> targets;
  for (const auto& ck : checkpoints) targets.push_back({ck.step, network_values(ck, kept, opts.jobs)});
  auto out = fit_trajectory(c, targets, opts);
  if (missing) out.warnings.push_back(std::to_string(missing) + " positions absent from the concept table were skipped");
  return out;
}

inline void write_trajectory_csv(std::ostream& out, const WeightTrajectory& t) {
  out << "checkpoint,concept,weight,bias,train_loss,test_loss\n";
  for (const auto& p : t.points)
    for (std::size_t j = 0; j < t.concepts.size(); ++j)
      out << p.model.step << ',' << t.concepts[j] << ',' << csv::fmt(p.model.w[j]) << ',' << csv::fmt(p.model.b) << ','
          << csv::fmt(p.model.train_loss) << ',' << csv::fmt(p.test_loss) << '\n';
}

inline std::string trajectory_svg(const WeightTrajectory& t, const std::string& title) {
  svg::Chart ch;
  ch.title = title;
  ch.x_label = "checkpoint";
  ch.y_label = "weight";
  for (const auto& p : t.points) ch.x_ticks.push_back(std::to_string(p.model.step));
  for (std::size_t j = 0; j < t.concepts.size(); ++j) {
    svg::Series s{t.concepts[j], {}};
    for (const auto& p : t.points) s.y.push_back(p.model.w[j]);
    ch.series.push_back(std::move(s));
  }
  return svg::render(ch);
}

}  // namespace azprobe::valuereg
