#pragma once

// Sparse concept probes on activation matrices.
//
// Continuous:  min (1/N)||Xw + b - y||^2 + lambda (||w||_1 + |b|)      cyclic coordinate descent
// Binary:      min (1/N)||sigmoid(Xw + b) - y||^2 + lambda (||w||_1 + |b|)   proximal gradient
//
// For one coordinate with a_j = (1/N) sum x_ij^2 and rho_j = (1/N) sum x_ij (r_i + x_ij w_j)
// the minimiser is w_j = S(rho_j, lambda/2) / a_j, S the soft threshold. The bias has
// a_b = 1, giving b = S(mean(r + b), lambda/2).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "azprobe/csv.hpp"
#include "azprobe/parallel.hpp"
#include "azprobe/rng.hpp"
#include "azprobe/svg.hpp"

namespace azprobe::probes {

class ProbeError : public std::invalid_argument {
 public:
  explicit ProbeError(const std::string& what) : std::invalid_argument(what) {}
};

/// N x d activations, row-major; row order follows the FEN manifest.
struct ActivationMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;
  int layer = 0;  // 0 is the network input z0
  std::uint64_t step = 0;

  const float* row(std::size_t i) const { return data.data() + i * cols; }
  float at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline ActivationMatrix subset_rows(const ActivationMatrix& x, std::span<const std::size_t> rows) {
  ActivationMatrix out;
  out.rows = rows.size();
  out.cols = x.cols;
  out.layer = x.layer;
  out.step = x.step;
  out.data.reserve(rows.size() * x.cols);
  for (auto r : rows) {
    if (r >= x.rows) throw ProbeError("row index " + std::to_string(r) + " out of range");
    out.data.insert(out.data.end(), x.row(r), x.row(r) + x.cols);
  }
  return out;
}

inline std::vector<double> subset(std::span<const double> v, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

enum class ProbeKind { continuous, binary };
enum class BinaryLoss { squared_sigmoid, cross_entropy };

struct FitOptions {
  double tolerance = 1e-6;     // max parameter change between iterations
  int max_iterations = 10000;  // sweeps (continuous) or proximal steps (binary)
  bool standardize = false;
  BinaryLoss binary_loss = BinaryLoss::squared_sigmoid;
  bool trace = false;          // record the objective after every iteration
};

struct ProbeModel {
  ProbeKind kind = ProbeKind::continuous;
  std::vector<double> w;
  double b = 0.0;
  double lambda = 0.0;
  std::string target;
  int layer = 0;
  std::uint64_t step = 0;
  std::vector<double> center;  // standardisation, empty when off
  std::vector<double> scale;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  std::vector<double> objective_trace;

  double sparsity() const {
    if (w.empty()) return 0.0;
    const auto nz = std::count_if(w.begin(), w.end(), [](double v) { return std::abs(v) > 1e-8; });
    return static_cast<double>(nz) / static_cast<double>(w.size());
  }

  double linear(const float* x) const {
    double z = b;
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[j] == 0.0) continue;
      const double v = center.empty() ? x[j] : (x[j] - center[j]) / scale[j];
      z += w[j] * v;
    }
    return z;
  }

  /// Continuous value, or the sigmoid probability for binary probes.
  double predict(const float* x) const {
    const double z = linear(x);
    return kind == ProbeKind::binary ? 1.0 / (1.0 + std::exp(-z)) : z;
  }

  std::vector<double> predict(const ActivationMatrix& x) const {
    if (x.cols != w.size()) throw ProbeError("probe expects " + std::to_string(w.size()) + " features");
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row(i));
    return out;
  }
};

namespace detail {

inline double soft(double v, double t) { return v > t ? v - t : v < -t ? v + t : 0.0; }

inline double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

/// Column-major copy of the features in double precision, optionally standardised.
struct Design {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> x;
  std::vector<double> center;
  std::vector<double> scale;
  const double* col(std::size_t j) const { return x.data() + j * n; }
};

inline Design make_design(const ActivationMatrix& m, std::span<const double> y, bool standardize) {
  if (m.rows == 0) throw ProbeError("activation matrix has zero rows");
  if (m.rows != y.size())
    throw ProbeError("activation rows (" + std::to_string(m.rows) + ") differ from targets (" +
                     std::to_string(y.size()) + ")");
  if (m.data.size() != m.rows * m.cols) throw ProbeError("activation matrix payload does not match its shape");
  for (double v : y)
    if (!std::isfinite(v)) throw ProbeError("non-finite target value");
  Design d;
  d.n = m.rows;
  d.d = m.cols;
  d.x.resize(d.n * d.d);
  for (std::size_t i = 0; i < d.n; ++i) {
    const float* r = m.row(i);
    for (std::size_t j = 0; j < d.d; ++j) {
      if (!std::isfinite(r[j])) throw ProbeError("non-finite activation at row " + std::to_string(i));
      d.x[j * d.n + i] = r[j];
    }
  }
  if (standardize) {
    d.center.assign(d.d, 0.0);
    d.scale.assign(d.d, 1.0);
    for (std::size_t j = 0; j < d.d; ++j) {
      double* c = d.x.data() + j * d.n;
      double mean = 0;
      for (std::size_t i = 0; i < d.n; ++i) mean += c[i];
      mean /= static_cast<double>(d.n);
      double var = 0;
      for (std::size_t i = 0; i < d.n; ++i) var += (c[i] - mean) * (c[i] - mean);
      var /= static_cast<double>(d.n);
      const double sd = var > 0 ? std::sqrt(var) : 1.0;
      for (std::size_t i = 0; i < d.n; ++i) c[i] = (c[i] - mean) / sd;
      d.center[j] = mean;
      d.scale[j] = sd;
    }
  }
  return d;
}

inline double l1(const std::vector<double>& w, double b) {
  double s = std::abs(b);
  for (double v : w) s += std::abs(v);
  return s;
}

inline std::vector<double> margins(const Design& d, const std::vector<double>& w, double b) {
  std::vector<double> z(d.n, b);
  for (std::size_t j = 0; j < d.d; ++j) {
    if (w[j] == 0.0) continue;
    const double* c = d.col(j);
    for (std::size_t i = 0; i < d.n; ++i) z[i] += c[i] * w[j];
  }
  return z;
}

inline double binary_loss(const std::vector<double>& z, std::span<const double> y, BinaryLoss loss,
                          std::vector<double>* dz) {
  const double n = static_cast<double>(z.size());
  double f = 0;
  if (dz) dz->resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double s = sigmoid(z[i]);
    if (loss == BinaryLoss::squared_sigmoid) {
      f += (s - y[i]) * (s - y[i]);
      if (dz) (*dz)[i] = 2.0 * (s - y[i]) * s * (1.0 - s) / n;
    } else {
      // log(1 + e^z) - y z, computed stably
      f += (z[i] > 0 ? z[i] + std::log1p(std::exp(-z[i])) : std::log1p(std::exp(z[i]))) - y[i] * z[i];
      if (dz) (*dz)[i] = (s - y[i]) / n;
    }
  }
  return f / n;
}

}  // namespace detail

inline ProbeModel fit_sparse_linear(const ActivationMatrix& x, std::span<const double> y, double lambda,
                                    const FitOptions& opts = {}) {
  if (!(lambda >= 0.0)) throw ProbeError("lambda must be >= 0");
  const auto d = detail::make_design(x, y, opts.standardize);
  const double n = static_cast<double>(d.n);
  ProbeModel m;
  m.kind = ProbeKind::continuous;
  m.lambda = lambda;
  m.layer = x.layer;
  m.step = x.step;
  m.center = d.center;
  m.scale = d.scale;
  m.w.assign(d.d, 0.0);

  std::vector<double> a(d.d, 0.0);
  for (std::size_t j = 0; j < d.d; ++j) {
    const double* c = d.col(j);
    double s = 0;
    for (std::size_t i = 0; i < d.n; ++i) s += c[i] * c[i];
    a[j] = s / n;
  }
  std::vector<double> r(y.begin(), y.end());
  const double t = lambda / 2.0;
  auto objective = [&] {
    double s = 0;
    for (double v : r) s += v * v;
    return s / n + lambda * detail::l1(m.w, m.b);
  };

  std::vector<std::size_t> all(d.d), active;
  std::iota(all.begin(), all.end(), std::size_t{0});
  bool full = true;
  for (m.iterations = 0; m.iterations < opts.max_iterations;) {
    ++m.iterations;
    double max_change = 0;
    {
      double mean = 0;
      for (double v : r) mean += v;
      const double nb = detail::soft(mean / n + m.b, t);
      const double delta = nb - m.b;
      if (delta != 0.0)
        for (auto& v : r) v -= delta;
      max_change = std::max(max_change, std::abs(delta));
      m.b = nb;
    }
    for (auto j : full ? all : active) {
      if (a[j] == 0.0) continue;
      const double* c = d.col(j);
      double rho = 0;
      for (std::size_t i = 0; i < d.n; ++i) rho += c[i] * r[i];
      rho = rho / n + a[j] * m.w[j];
      const double nw = detail::soft(rho, t) / a[j];
      const double delta = nw - m.w[j];
      if (delta == 0.0) continue;
      for (std::size_t i = 0; i < d.n; ++i) r[i] -= c[i] * delta;
      m.w[j] = nw;
      max_change = std::max(max_change, std::abs(delta));
    }
    if (opts.trace) m.objective_trace.push_back(objective());
    if (max_change < opts.tolerance) {
      if (full) {
        m.converged = true;
        break;
      }
      full = true;
      continue;
    }
    if (full) {
      active.clear();
      for (std::size_t j = 0; j < d.d; ++j)
        if (m.w[j] != 0.0) active.push_back(j);
      full = false;
    }
  }
  m.objective = objective();
  return m;
}

/// Accelerated proximal gradient with backtracking on the step size and a
/// restart whenever the objective would increase.
inline ProbeModel fit_sparse_binary(const ActivationMatrix& x, std::span<const double> y, double lambda,
                                    const FitOptions& opts = {}) {
  if (!(lambda >= 0.0)) throw ProbeError("lambda must be >= 0");
  for (double v : y)
    if (v != 0.0 && v != 1.0) throw ProbeError("binary probe targets must be 0 or 1");
  const auto d = detail::make_design(x, y, opts.standardize);
  ProbeModel m;
  m.kind = ProbeKind::binary;
  m.lambda = lambda;
  m.layer = x.layer;
  m.step = x.step;
  m.center = d.center;
  m.scale = d.scale;

  const std::size_t p = d.d + 1;  // last entry is the bias
  auto split = [&](const std::vector<double>& th, std::vector<double>& w) {
    w.assign(th.begin(), th.end() - 1);
    return th.back();
  };
  std::vector<double> wtmp;
  auto smooth = [&](const std::vector<double>& th, std::vector<double>* grad) {
    const double b = split(th, wtmp);
    const auto z = detail::margins(d, wtmp, b);
    std::vector<double> dz;
    const double f = detail::binary_loss(z, y, opts.binary_loss, grad ? &dz : nullptr);
    if (grad) {
      grad->assign(p, 0.0);
      for (std::size_t j = 0; j < d.d; ++j) {
        const double* c = d.col(j);
        double g = 0;
        for (std::size_t i = 0; i < d.n; ++i) g += c[i] * dz[i];
        (*grad)[j] = g;
      }
      (*grad)[d.d] = std::accumulate(dz.begin(), dz.end(), 0.0);
    }
    return f;
  };
  auto l1 = [&](const std::vector<double>& th) {
    double s = 0;
    for (double v : th) s += std::abs(v);
    return s;
  };

  std::vector<double> xk(p, 0.0), yk = xk, grad, xn(p);
  double fx = smooth(xk, nullptr) + lambda * l1(xk);
  double step = 1.0, tk = 1.0;
  for (m.iterations = 0; m.iterations < opts.max_iterations;) {
    ++m.iterations;
    const double fy = smooth(yk, &grad);
    double fn = 0;
    for (;;) {
      double lin = 0, quad = 0;
      for (std::size_t j = 0; j < p; ++j) {
        xn[j] = detail::soft(yk[j] - step * grad[j], step * lambda);
        const double diff = xn[j] - yk[j];
        lin += grad[j] * diff;
        quad += diff * diff;
      }
      fn = smooth(xn, nullptr);
      if ((std::isfinite(fn) && fn <= fy + lin + quad / (2.0 * step) + 1e-15 * std::abs(fy)) || step < 1e-12) break;
      step *= 0.5;
    }
    const double Fn = fn + lambda * l1(xn);
    if (!(Fn <= fx)) {
      // Momentum overshot: restart from the last accepted point.
      if (yk == xk) {
        m.converged = true;
        break;
      }
      yk = xk;
      tk = 1.0;
      continue;
    }
    double max_change = 0;
    for (std::size_t j = 0; j < p; ++j) max_change = std::max(max_change, std::abs(xn[j] - xk[j]));
    const double tn = (1.0 + std::sqrt(1.0 + 4.0 * tk * tk)) / 2.0;
    for (std::size_t j = 0; j < p; ++j) yk[j] = xn[j] + (tk - 1.0) / tn * (xn[j] - xk[j]);
    tk = tn;
    xk = xn;
    fx = Fn;
    if (opts.trace) m.objective_trace.push_back(fx);
    if (max_change < opts.tolerance) {
      m.converged = true;
      break;
    }
    step = std::min(step * 1.5, 1e6);
  }
  m.b = split(xk, m.w);
  m.objective = fx;
  return m;
}

inline ProbeModel fit_probe(ProbeKind kind, const ActivationMatrix& x, std::span<const double> y, double lambda,
                            const FitOptions& opts = {}) {
  return kind == ProbeKind::binary ? fit_sparse_binary(x, y, lambda, opts) : fit_sparse_linear(x, y, lambda, opts);
}

// ---- scores ---------------------------------------------------------------------

/// Coefficient of determination; nullopt when y_true has zero variance.
inline std::optional<double> r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw ProbeError("r_squared: length mismatch");
  if (y_true.size() < 2) throw ProbeError("r_squared: need at least two values");
  const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(y_true.size());
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (ss_tot == 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

inline bool is_balanced(std::span<const double> y_true) {
  const auto pos = std::count_if(y_true.begin(), y_true.end(), [](double v) { return v > 0.5; });
  return 2 * static_cast<std::size_t>(pos) == y_true.size();
}

/// s = 2 * accuracy - 1. Classes are v > 0.5. Appends a warning if y_true is not balanced.
inline double balanced_accuracy_gain(std::span<const double> y_true, std::span<const double> class_pred,
                                     std::vector<std::string>* warnings = nullptr) {
  if (y_true.size() != class_pred.size()) throw ProbeError("balanced_accuracy_gain: length mismatch");
  if (y_true.empty()) throw ProbeError("balanced_accuracy_gain: empty input");
  if (warnings && !is_balanced(y_true)) warnings->push_back("balanced_accuracy_gain: classes are not balanced");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) correct += (y_true[i] > 0.5) == (class_pred[i] > 0.5);
  return 2.0 * static_cast<double>(correct) / static_cast<double>(y_true.size()) - 1.0;
}

/// Validation/test metric of a fitted probe: r^2 (continuous) or accuracy gain (binary).
inline std::optional<double> probe_score(const ProbeModel& m, const ActivationMatrix& x, std::span<const double> y) {
  const auto pred = m.predict(x);
  if (m.kind == ProbeKind::continuous) return r_squared(y, pred);
  const auto pos = std::count_if(y.begin(), y.end(), [](double v) { return v > 0.5; });
  if (pos == 0 || static_cast<std::size_t>(pos) == y.size()) return std::nullopt;
  return balanced_accuracy_gain(y, pred);
}

struct CvResult {
  ProbeModel model;
  std::vector<double> lambdas;
  std::vector<std::optional<double>> validation;  // per lambda, same order
  std::optional<double> best_validation;
};

/// Fits at every lambda on the training rows and keeps the best validation score.
/// Ties (and all-undefined scores) go to the larger lambda.
inline CvResult cross_validate(ProbeKind kind, const ActivationMatrix& x_train, std::span<const double> y_train,
                               const ActivationMatrix& x_val, std::span<const double> y_val,
                               const std::vector<double>& lambda_grid, const FitOptions& opts = {}) {
  if (lambda_grid.empty()) throw ProbeError("cross_validate: empty lambda grid");
  CvResult out;
  out.lambdas = lambda_grid;
  std::vector<std::size_t> order(lambda_grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lambda_grid[a] > lambda_grid[b]; });
  out.validation.assign(lambda_grid.size(), std::nullopt);
  bool have = false;
  for (auto k : order) {
    auto m = fit_probe(kind, x_train, y_train, lambda_grid[k], opts);
    const auto s = probe_score(m, x_val, y_val);
    out.validation[k] = s;
    const bool better = !have || (s && (!out.best_validation || *s > *out.best_validation));
    if (better) {
      out.model = std::move(m);
      out.best_validation = s;
      have = true;
    }
  }
  return out;
}

// ---- what-when-where grids ------------------------------------------------------

enum class MetricKind { r2, balanced_accuracy_gain };
enum class CellStatus { ok, degenerate, absent };

inline const char* metric_name(MetricKind m) { return m == MetricKind::r2 ? "r2" : "balanced_accuracy_gain"; }

struct GridCell {
  std::string target;
  int layer = 0;  // 0 = input row
  std::uint64_t step = 0;
  MetricKind metric = MetricKind::r2;
  CellStatus status = CellStatus::absent;
  double value = 0.0;
  double lambda = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double sparsity = 0.0;

  std::string layer_label() const { return layer == 0 ? "input" : std::to_string(layer); }
};

struct ScoreGrid {
  std::string target;
  MetricKind metric = MetricKind::r2;
  std::vector<GridCell> cells;  // the target's cells followed by random-control cells

  const GridCell* find(const std::string& concept_name, int layer, std::uint64_t step) const {
    for (const auto& c : cells)
      if (c.target == concept_name && c.layer == layer && c.step == step) return &c;
    return nullptr;
  }
};

struct GridSplits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

struct GridRequest {
  std::string target;
  ProbeKind kind = ProbeKind::continuous;
  std::vector<double> targets;  // one per matrix row
  GridSplits splits;
  std::vector<std::uint64_t> steps;
  std::vector<int> layers;
  std::vector<double> lambdas;
  bool input_row = true;
  bool random_control = true;
  std::uint64_t random_seed = 0;
  std::vector<double> random_lambdas = {0.003, 0.006, 0.01};
  FitOptions options;
  int jobs = 1;
};

/// Returns the activation matrix for (step, layer); layer 0 asks for the input
/// encoding. nullopt marks a missing cache. Called concurrently.
using ActivationSource = std::function<std::optional<ActivationMatrix>(std::uint64_t step, int layer)>;

/// i.i.d. standard normal control targets.
inline std::vector<double> random_targets(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.normal();
  return out;
}

namespace detail {

inline GridCell fit_cell(const std::string& target, ProbeKind kind, MetricKind metric, const ActivationMatrix& x,
                         std::span<const double> targets, const GridSplits& s, const std::vector<double>& lambdas,
                         const FitOptions& opts, int layer, std::uint64_t step) {
  GridCell cell;
  cell.target = target;
  cell.layer = layer;
  cell.step = step;
  cell.metric = metric;
  cell.n_train = s.train.size();
  cell.n_test = s.test.size();
  if (targets.size() != x.rows) throw ProbeError("targets do not match activation rows for " + target);
  const auto xtr = subset_rows(x, s.train);
  const auto xva = subset_rows(x, s.validation);
  const auto xte = subset_rows(x, s.test);
  const auto ytr = subset(targets, s.train);
  const auto yva = subset(targets, s.validation);
  const auto yte = subset(targets, s.test);
  const auto cv = cross_validate(kind, xtr, ytr, xva, yva, lambdas, opts);
  cell.lambda = cv.model.lambda;
  cell.sparsity = cv.model.sparsity();
  const auto score = probe_score(cv.model, xte, yte);
  cell.status = score ? CellStatus::ok : CellStatus::degenerate;
  cell.value = score.value_or(0.0);
  return cell;
}

}  // namespace detail

inline ScoreGrid build_score_grid(const GridRequest& req, const ActivationSource& source) {
  if (req.lambdas.empty()) throw ProbeError("score grid needs a lambda grid");
  ScoreGrid grid;
  grid.target = req.target;
  grid.metric = req.kind == ProbeKind::binary ? MetricKind::balanced_accuracy_gain : MetricKind::r2;

  struct Task {
    int layer;
    std::uint64_t step;
  };
  std::vector<Task> tasks;
  if (req.input_row && !req.steps.empty()) tasks.push_back({0, req.steps.front()});
  for (auto t : req.steps)
    for (int l : req.layers) tasks.push_back({l, t});

  std::vector<double> random;
  if (req.random_control) random = random_targets(req.random_seed, req.targets.size());

  std::vector<std::vector<GridCell>> results(tasks.size());
  parallel_for(tasks.size(), req.jobs, [&](std::size_t k) {
    const auto& task = tasks[k];
    auto x = source(task.step, task.layer);
    auto absent = [&](const std::string& target, MetricKind metric) {
      GridCell c;
      c.target = target;
      c.layer = task.layer;
      c.step = task.step;
      c.metric = metric;
      c.status = CellStatus::absent;
      return c;
    };
    if (!x) {
      results[k].push_back(absent(req.target, grid.metric));
      if (req.random_control) results[k].push_back(absent("random", MetricKind::r2));
      return;
    }
    results[k].push_back(detail::fit_cell(req.target, req.kind, grid.metric, *x, req.targets, req.splits, req.lambdas,
                                          req.options, task.layer, task.step));
    if (req.random_control)
      results[k].push_back(detail::fit_cell("random", ProbeKind::continuous, MetricKind::r2, *x, random, req.splits,
                                            req.random_lambdas, req.options, task.layer, task.step));
  });

  std::vector<GridCell> controls;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    auto cells = results[k];
    if (tasks[k].layer == 0) {
      // The input row does not depend on the checkpoint: replicate it across steps.
      for (auto t : req.steps)
        for (auto c : cells) {
          c.step = t;
          (c.target == req.target ? grid.cells : controls).push_back(c);
        }
      continue;
    }
    for (auto& c : cells) (c.target == req.target ? grid.cells : controls).push_back(c);
  }
  grid.cells.insert(grid.cells.end(), controls.begin(), controls.end());
  return grid;
}

inline void write_grid_csv(std::ostream& out, const std::vector<ScoreGrid>& grids) {
  out << "concept,layer,checkpoint,metric,value,lambda,n_train,n_test,sparsity\n";
  for (const auto& g : grids)
    for (const auto& c : g.cells) {
      out << c.target << ',' << c.layer_label() << ',' << c.step << ',' << metric_name(c.metric) << ',';
      switch (c.status) {
        case CellStatus::ok: out << csv::fmt(c.value); break;
        case CellStatus::degenerate: out << "degenerate"; break;
        case CellStatus::absent: out << "absent"; break;
      }
      out << ',' << (c.status == CellStatus::absent ? std::string() : csv::fmt(c.lambda)) << ',' << c.n_train << ','
          << c.n_test << ',' << (c.status == CellStatus::absent ? std::string() : csv::fmt(c.sparsity)) << '\n';
    }
}

/// Heatmap of one target's cells: layers bottom-up (input first), checkpoints left to right.
inline std::string grid_svg(const ScoreGrid& g, const std::string& target) {
  std::vector<int> layers;
  std::vector<std::uint64_t> steps;
  for (const auto& c : g.cells) {
    if (c.target != target) continue;
    if (std::find(layers.begin(), layers.end(), c.layer) == layers.end()) layers.push_back(c.layer);
    if (std::find(steps.begin(), steps.end(), c.step) == steps.end()) steps.push_back(c.step);
  }
  std::sort(layers.begin(), layers.end());
  std::sort(steps.begin(), steps.end());
  svg::Heatmap h;
  const auto metric = target == "random" ? MetricKind::r2 : g.metric;
  h.title = target + " (" + metric_name(metric) + ")";
  h.x_label = "checkpoint step";
  h.y_label = "layer";
  for (auto t : steps) h.x_ticks.push_back(std::to_string(t));
  for (int l : layers) h.y_ticks.push_back(l == 0 ? "input" : std::to_string(l));
  h.values.assign(layers.size(), std::vector<std::optional<double>>(steps.size()));
  for (std::size_t r = 0; r < layers.size(); ++r)
    for (std::size_t c = 0; c < steps.size(); ++c)
      if (const auto* cell = g.find(target, layers[r], steps[c]); cell && cell->status == CellStatus::ok)
        h.values[r][c] = cell->value;
  h.vmin = 0.0;
  h.vmax = 1.0;
  return svg::render(h);
}

// ---- residual analysis ------------------------------------------------------------

struct ResidualRow {
  std::string fen;
  double truth = 0.0;
  double pred = 0.0;
  double residual = 0.0;  // squared error
  bool outlier = false;
};

struct ResidualReport {
  std::vector<ResidualRow> rows;
  double percentile = 0.0;
  double threshold = 0.0;

  std::vector<std::string> outlier_fens() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
      if (r.outlier) out.push_back(r.fen);
    return out;
  }
};

/// Linear-interpolation percentile of the values (p in [0, 100]).
inline double percentile_of(std::vector<double> v, double p) {
  if (v.empty()) throw ProbeError("percentile of empty set");
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Squared residuals of the probe on the test rows; outliers lie strictly above the percentile.
inline ResidualReport residual_report(const ProbeModel& m, const ActivationMatrix& x_test, std::span<const double> y_test,
                                      const std::vector<std::string>& fens, double percentile) {
  if (!(percentile > 0.0 && percentile < 100.0)) throw ProbeError("percentile must lie in (0, 100)");
  if (x_test.rows != y_test.size() || fens.size() != y_test.size())
    throw ProbeError("residual report: rows, targets and FENs differ in length");
  ResidualReport rep;
  rep.percentile = percentile;
  const auto pred = m.predict(x_test);
  std::vector<double> eps(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    eps[i] = (y_test[i] - pred[i]) * (y_test[i] - pred[i]);
    rep.rows.push_back({fens[i], y_test[i], pred[i], eps[i], false});
  }
  rep.threshold = percentile_of(eps, percentile);
  for (auto& r : rep.rows) r.outlier = r.residual > rep.threshold;
  return rep;
}

inline void write_residual_csv(std::ostream& out, const ResidualReport& rep) {
  out << "fen,true,pred,residual,outlier\n";
  for (const auto& r : rep.rows)
    out << r.fen << ',' << csv::fmt(r.truth) << ',' << csv::fmt(r.pred) << ',' << csv::fmt(r.residual) << ','
        << (r.outlier ? 1 : 0) << '\n';
}

}  // namespace azprobe::probes
