#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "azprobe/cache.hpp"
#include "azprobe/chess.hpp"
#include "azprobe/concepts.hpp"
#include "azprobe/config.hpp"
#include "azprobe/network.hpp"
#include "azprobe/openings.hpp"
#include "azprobe/probes.hpp"
#include "azprobe/unsup.hpp"
#include "azprobe/valuereg.hpp"

namespace azprobe::cli {

namespace fs = std::filesystem;

enum ExitCode { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_internal = 3 };

class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class InvariantFailure : public std::logic_error {
 public:
  explicit InvariantFailure(const std::string& what) : std::logic_error(what) {}
};

struct Context {
  config::Config cfg;
  fs::path out;
  int jobs = 1;
  bool force = false;
  std::ostream* log = &std::cerr;

  std::ostream& note() const { return *log; }
  fs::path dir(const std::string& sub) const {
    auto d = out / sub;
    fs::create_directories(d);
    return d;
  }
};

// ---- inputs --------------------------------------------------------------------------

inline void write_text(const fs::path& path, const std::string& text) {
  binio::write_atomically(path, [&](std::ostream& o) { o << text; });
}

inline std::vector<chess::Game> load_games(const std::vector<fs::path>& paths, std::ostream& log) {
  std::vector<chess::Game> games;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot open " + p.string());
    auto res = chess::parse_pgn(in);
    for (const auto& issue : res.issues)
      log << "warning: " << p.filename().string() << " game " << issue.game_index + 1 << " skipped: " << issue.message << '\n';
    games.insert(games.end(), std::make_move_iterator(res.games.begin()), std::make_move_iterator(res.games.end()));
  }
  if (games.empty()) throw DataError("no readable games in the corpus");
  return games;
}

inline std::vector<std::string> load_fen_lines(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line))
    if (auto t = config::trim(line); !t.empty() && t[0] != '#') out.push_back(t);
  return out;
}

/// Positions from [corpus] pgn and/or fens, deduplicated by FEN, optionally capped by max_positions.
inline std::vector<concepts::PositionRecord> load_corpus(const Context& ctx, int history = 8) {
  const auto& cfg = ctx.cfg;
  std::vector<concepts::PositionRecord> records;
  if (cfg.has("corpus", "pgn")) {
    auto r = concepts::collect_positions(load_games(cfg.existing_paths("corpus", "pgn"), ctx.note()), history);
    records.insert(records.end(), r.begin(), r.end());
  }
  if (cfg.has("corpus", "fens"))
    for (const auto& p : cfg.existing_paths("corpus", "fens")) {
      try {
        auto r = concepts::records_from_fens(load_fen_lines(p));
        records.insert(records.end(), r.begin(), r.end());
      } catch (const chess::FenError& e) {
        throw DataError(p.filename().string() + ": " + e.what());
      }
    }
  if (!cfg.has("corpus", "pgn") && !cfg.has("corpus", "fens"))
    throw config::ConfigError("config needs corpus.pgn or corpus.fens");
  records = concepts::dedup_by_fen(std::move(records));
  const auto cap = cfg.integer("corpus", "max_positions", 0);
  if (cap < 0) throw config::ConfigError("corpus.max_positions must be non-negative");
  if (cap > 0 && records.size() > static_cast<std::size_t>(cap)) records.resize(static_cast<std::size_t>(cap));
  if (records.empty()) throw DataError("corpus has no positions");
  return records;
}

inline std::vector<network::Checkpoint> load_checkpoints(const Context& ctx) {
  std::vector<network::Checkpoint> out;
  for (const auto& p : ctx.cfg.existing_paths("checkpoints", "paths")) out.push_back(network::load_checkpoint(p));
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i].config == out[0].config)) throw DataError("checkpoints have different architectures");
  std::set<std::uint64_t> steps;
  for (const auto& ck : out)
    if (!steps.insert(ck.step).second) throw DataError("two checkpoints share step " + std::to_string(ck.step));
  return out;
}

inline std::vector<int> layer_list(const Context& ctx, const std::string& section, const network::NetworkConfig& net,
                                   bool allow_input) {
  auto layers = ctx.cfg.int_list(section, "layers");
  if (layers.empty())
    for (int l = 1; l <= net.blocks; ++l) layers.push_back(l);
  for (int l : layers)
    if (l < (allow_input ? 0 : 1) || l > net.blocks)
      throw UsageError(section + ".layers: layer " + std::to_string(l) + " out of range " +
                       (allow_input ? "0" : "1") + ".." + std::to_string(net.blocks));
  return layers;
}

inline std::string valid_concept_names() {
  std::string s;
  for (const auto& c : concepts::native_concepts()) s += (s.empty() ? "" : ", ") + c.name;
  return s;
}

inline std::vector<concepts::ConceptSpec> concept_list(const Context& ctx, const std::string& section, bool have_context) {
  std::vector<concepts::ConceptSpec> out;
  const auto names = ctx.cfg.list(section, "concepts");
  if (names.empty() || (names.size() == 1 && names[0] == "all")) {
    for (const auto& c : concepts::native_concepts())
      if (have_context || !concepts::needs_context(c)) out.push_back(c);
    return out;
  }
  for (const auto& n : names) {
    auto spec = concepts::find_concept(n);
    if (!spec) throw UsageError("unknown concept '" + n + "'; valid names: " + valid_concept_names());
    out.push_back(*spec);
  }
  return out;
}

// ---- extract-concepts ---------------------------------------------------------------

inline fs::path cmd_extract_concepts(const Context& ctx) {
  const auto records = load_corpus(ctx);
  bool context = true;
  for (const auto& r : records) context = context && r.has_context;
  const auto specs = concept_list(ctx, "concepts", context);
  std::vector<std::string> columns;
  for (const auto& s : specs) columns.push_back(s.name);
  std::vector<concepts::ConceptVector> rows(records.size());
  parallel_for(records.size(), ctx.jobs, [&](std::size_t i) {
    const auto& r = records[i];
    rows[i].fen = r.fen;
    for (const auto& s : specs) rows[i].values[s.name] = concepts::eval_concept(s, r.position, r.has_context ? &r.context : nullptr);
  });
  const auto path = ctx.dir(".") / "concepts.csv";
  binio::write_atomically(path, [&](std::ostream& o) { concepts::export_concepts(o, columns, rows); });
  ctx.note() << "wrote " << rows.size() << " positions x " << columns.size() << " concepts to " << path.string() << '\n';
  return path;
}

// ---- activations --------------------------------------------------------------------

inline fs::path cache_dir(const Context& ctx) {
  return ctx.cfg.has("activations", "cache_dir") ? ctx.cfg.resolve(*ctx.cfg.get("activations", "cache_dir"))
                                                  : ctx.out / "cache";
}

inline std::vector<fs::path> cmd_activations(const Context& ctx) {
  const auto cks = load_checkpoints(ctx);
  const auto records = load_corpus(ctx, cks.front().config.history);
  const auto layers = layer_list(ctx, "activations", cks.front().config, true);
  std::vector<fs::path> out;
  for (const auto& ck : cks) {
    const auto paths = cache::write_caches(ck, records, layers, cache_dir(ctx), ctx.force, ctx.jobs);
    out.insert(out.end(), paths.begin(), paths.end());
  }
  ctx.note() << out.size() << " cache files in " << cache_dir(ctx).string() << '\n';
  return out;
}

// ---- probe --------------------------------------------------------------------------

struct ProbeSetup {
  std::vector<network::Checkpoint> checkpoints;
  concepts::Dataset dataset;
  std::vector<std::string> fens;  // matrix row order
  std::vector<concepts::PositionRecord> records;
  std::vector<concepts::ConceptSpec> specs;
  std::vector<int> layers;
  std::map<std::pair<std::uint64_t, int>, fs::path> caches;
};

inline ProbeSetup prepare_probe(const Context& ctx) {
  ProbeSetup s;
  s.checkpoints = load_checkpoints(ctx);
  const auto& net = s.checkpoints.front().config;
  auto records = load_corpus(ctx, net.history);
  bool context = true;
  for (const auto& r : records) context = context && r.has_context;
  s.specs = concept_list(ctx, "probe", context);
  const concepts::SplitSizes sizes{static_cast<std::size_t>(ctx.cfg.integer("probe", "train", 800)),
                                   static_cast<std::size_t>(ctx.cfg.integer("probe", "validation", 100)),
                                   static_cast<std::size_t>(ctx.cfg.integer("probe", "test", 100))};
  s.dataset = concepts::build_dataset(std::move(records), s.specs, sizes, ctx.cfg.seed("split"));
  for (const auto& w : s.dataset.warnings) ctx.note() << "warning: " << w << '\n';
  for (const auto& [fen, rec] : s.dataset.records) {
    s.fens.push_back(fen);
    s.records.push_back(rec);
  }
  s.layers = layer_list(ctx, "probe", net, false);
  auto want = s.layers;
  want.insert(want.begin(), 0);
  for (const auto& ck : s.checkpoints) {
    const auto paths = cache::write_caches(ck, s.records, want, cache_dir(ctx), ctx.force, ctx.jobs);
    for (std::size_t k = 0; k < want.size(); ++k) s.caches[{ck.step, want[k]}] = paths[k];
  }
  return s;
}

inline probes::GridSplits splits_for(const ProbeSetup& s, const concepts::DatasetSplit& split) {
  std::map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < s.fens.size(); ++i) row[s.fens[i]] = i;
  probes::GridSplits g;
  for (const auto& f : split.train) g.train.push_back(row.at(f));
  for (const auto& f : split.validation) g.validation.push_back(row.at(f));
  for (const auto& f : split.test) g.test.push_back(row.at(f));
  return g;
}

inline probes::ActivationSource cache_source(const ProbeSetup& s) {
  return [&s](std::uint64_t step, int layer) -> std::optional<probes::ActivationMatrix> {
    auto it = s.caches.find({step, layer});
    if (it == s.caches.end() || !fs::exists(it->second)) return std::nullopt;
    auto c = cache::load_cache(it->second);
    if (c.fens != s.fens) throw DataError("cache " + it->second.string() + " does not match the corpus manifest");
    return std::move(c.matrix);
  };
}

inline std::vector<double> concept_targets(const ProbeSetup& s, const std::string& name) {
  std::vector<double> y;
  for (const auto& f : s.fens) y.push_back(s.dataset.vectors.at(f).values.at(name));
  return y;
}

inline std::vector<probes::ScoreGrid> cmd_probe(const Context& ctx) {
  const auto s = prepare_probe(ctx);
  const auto source = cache_source(s);
  const auto cont = ctx.cfg.has("probe", "lambdas_continuous") ? ctx.cfg.real_list("probe", "lambdas_continuous")
                                                                : std::vector<double>{0.003, 0.006, 0.01};
  const auto bin = ctx.cfg.has("probe", "lambdas_binary") ? ctx.cfg.real_list("probe", "lambdas_binary")
                                                           : std::vector<double>{0.01, 0.1};
  std::vector<std::uint64_t> steps;
  for (const auto& ck : s.checkpoints) steps.push_back(ck.step);
  const auto out_dir = ctx.dir("probe");
  std::vector<probes::ScoreGrid> grids;
  for (std::size_t k = 0; k < s.specs.size(); ++k) {
    const auto& spec = s.specs[k];
    const bool binary = spec.kind == concepts::ConceptKind::binary;
    if (binary && s.dataset.balance.at(spec.name).per_class == 0) {
      ctx.note() << "warning: concept " << spec.name << " has no balanced examples; skipped\n";
      continue;
    }
    probes::GridRequest req;
    req.target = spec.name;
    req.kind = binary ? probes::ProbeKind::binary : probes::ProbeKind::continuous;
    req.targets = concept_targets(s, spec.name);
    req.splits = splits_for(s, binary ? s.dataset.balanced.at(spec.name) : s.dataset.split);
    req.steps = steps;
    req.layers = s.layers;
    req.lambdas = binary ? bin : cont;
    req.random_control = grids.empty();
    req.random_seed = ctx.cfg.seed("random");
    req.random_lambdas = cont;
    req.jobs = ctx.jobs;
    grids.push_back(probes::build_score_grid(req, source));
    write_text(out_dir / ("grid_" + spec.name + ".svg"), probes::grid_svg(grids.back(), spec.name));
    if (req.random_control) write_text(out_dir / "grid_random.svg", probes::grid_svg(grids.back(), "random"));
  }
  binio::write_atomically(out_dir / "grid.csv", [&](std::ostream& o) { probes::write_grid_csv(o, grids); });
  ctx.note() << "score grids for " << grids.size() << " concepts in " << out_dir.string() << '\n';
  return grids;
}

// ---- residuals ----------------------------------------------------------------------

inline fs::path cmd_residuals(const Context& ctx) {
  const auto s = prepare_probe(ctx);
  const auto name = ctx.cfg.require("residuals", "concept");
  const auto spec = concepts::find_concept(name);
  if (!spec) throw UsageError("unknown concept '" + name + "'; valid names: " + valid_concept_names());
  if (std::find(s.specs.begin(), s.specs.end(), *spec) == s.specs.end())
    throw UsageError("residuals.concept must be one of probe.concepts");
  if (spec->kind == concepts::ConceptKind::binary) throw UsageError("residual analysis needs a continuous or integer concept");
  const int layer = static_cast<int>(ctx.cfg.integer("residuals", "layer"));
  const auto step = static_cast<std::uint64_t>(ctx.cfg.integer("residuals", "checkpoint", static_cast<long long>(s.checkpoints.back().step)));
  const double pct = ctx.cfg.real("residuals", "percentile", 95.0);
  auto x = cache_source(s)(step, layer);
  if (!x) throw UsageError("no activations for checkpoint " + std::to_string(step) + " layer " + std::to_string(layer));
  const auto y = concept_targets(s, name);
  const auto sp = splits_for(s, s.dataset.split);
  const auto lambdas = ctx.cfg.has("probe", "lambdas_continuous") ? ctx.cfg.real_list("probe", "lambdas_continuous")
                                                                   : std::vector<double>{0.003, 0.006, 0.01};
  const auto cv = probes::cross_validate(probes::ProbeKind::continuous, probes::subset_rows(*x, sp.train),
                                         probes::subset(y, sp.train), probes::subset_rows(*x, sp.validation),
                                         probes::subset(y, sp.validation), lambdas);
  std::vector<std::string> fens;
  for (auto i : sp.test) fens.push_back(s.fens[i]);
  const auto rep = probes::residual_report(cv.model, probes::subset_rows(*x, sp.test), probes::subset(y, sp.test), fens, pct);
  const auto path = ctx.dir("residuals") / ("residuals_" + name + "_l" + std::to_string(layer) + "_t" + std::to_string(step) + ".csv");
  binio::write_atomically(path, [&](std::ostream& o) { probes::write_residual_csv(o, rep); });
  ctx.note() << rep.outlier_fens().size() << " outliers above the " << pct << "th percentile; " << path.string() << '\n';
  return path;
}

// ---- value regression ---------------------------------------------------------------

inline valuereg::WeightTrajectory cmd_value_reg(const Context& ctx) {
  const auto cks = load_checkpoints(ctx);
  const auto records = load_corpus(ctx, cks.front().config.history);
  valuereg::RegressionOptions opts;
  opts.seed = ctx.cfg.seed("value");
  opts.jobs = ctx.jobs;
  opts.test_fraction = ctx.cfg.real("value", "test_fraction", opts.test_fraction);
  opts.glm.normalize = ctx.cfg.text("value", "normalize", "false") == "true";
  const auto mode = ctx.cfg.text("value", "mode", "pieces");
  valuereg::WeightTrajectory t;
  if (mode == "pieces") {
    t = valuereg::piece_value_regression(cks, records, opts);
  } else if (mode == "highlevel") {
    std::ifstream in(ctx.cfg.existing_path("value", "table"));
    const auto table = concepts::load_external_concepts(in);
    auto cols = ctx.cfg.list("value", "columns");
    if (cols.empty()) cols = valuereg::highlevel_concepts();
    t = valuereg::highlevel_concept_regression(cks, records, table, opts, cols);
  } else {
    throw UsageError("value.mode must be 'pieces' or 'highlevel'");
  }
  for (const auto& w : t.warnings) ctx.note() << "warning: " << w << '\n';
  const auto dir = ctx.dir("value");
  binio::write_atomically(dir / ("trajectory_" + mode + ".csv"), [&](std::ostream& o) { valuereg::write_trajectory_csv(o, t); });
  write_text(dir / ("trajectory_" + mode + ".svg"), valuereg::trajectory_svg(t, mode == "pieces" ? "piece weights" : "concept weights"));
  ctx.note() << "value regression over " << t.points.size() << " checkpoints in " << dir.string() << '\n';
  return t;
}

// ---- nmf ----------------------------------------------------------------------------

inline unsup::NmfFit cmd_nmf(const Context& ctx) {
  const auto cks = load_checkpoints(ctx);
  const auto step = static_cast<std::uint64_t>(ctx.cfg.integer("nmf", "checkpoint", static_cast<long long>(cks.back().step)));
  auto it = std::find_if(cks.begin(), cks.end(), [&](const auto& c) { return c.step == step; });
  if (it == cks.end()) throw UsageError("nmf.checkpoint: no checkpoint with step " + std::to_string(step));
  const auto& ck = *it;
  const int layer = static_cast<int>(ctx.cfg.integer("nmf", "layer"));
  if (layer < 1 || layer > ck.config.blocks) throw UsageError("nmf.layer out of range 1.." + std::to_string(ck.config.blocks));
  auto records = load_corpus(ctx, ck.config.history);
  const auto n = static_cast<std::size_t>(ctx.cfg.integer("nmf", "positions", 1000));
  if (records.size() > n) {
    Rng rng(ctx.cfg.seed("nmf_sample"));
    rng.shuffle(std::span(records));
    records.resize(n);
  }
  const auto acts = cache::compute_activations(ck, records, {layer}, ctx.jobs).front();
  std::vector<std::vector<float>> rows;
  for (std::size_t i = 0; i < acts.rows; ++i) rows.emplace_back(acts.row(i), acts.row(i) + acts.cols);
  const auto z = unsup::stack_positions(rows, ck.config.channels);
  unsup::NmfOptions opts;
  opts.factors = static_cast<int>(ctx.cfg.integer("nmf", "factors", opts.factors));
  opts.restarts = static_cast<int>(ctx.cfg.integer("nmf", "restarts", opts.restarts));
  opts.max_iterations = static_cast<int>(ctx.cfg.integer("nmf", "max_iterations", opts.max_iterations));
  opts.seed = ctx.cfg.seed("nmf");
  auto fit = unsup::nmf_fit(z, opts);
  fit.model.layer = layer;
  const auto dir = ctx.dir("nmf");
  binio::write_atomically(dir / ("factors_l" + std::to_string(layer) + ".csv"), [&](std::ostream& o) { unsup::write_factor_csv(o, fit.model.F); });
  binio::write_atomically(dir / ("weights_l" + std::to_string(layer) + ".csv"), [&](std::ostream& o) { unsup::write_weights_csv(o, fit.omega); });
  const auto show = std::min<std::size_t>(records.size(), static_cast<std::size_t>(ctx.cfg.integer("nmf", "heatmap_positions", 3)));
  for (std::size_t p = 0; p < show; ++p) {
    const unsup::Matrix omega = fit.omega.middleRows(static_cast<Eigen::Index>(p * 64), 64);
    for (int k = 0; k < opts.factors; ++k)
      write_text(dir / unsup::heatmap_file_name(layer, k, std::to_string(p)),
                 unsup::heatmap_svg(unsup::factor_heatmap(omega, k), records[p].position,
                                    "layer " + std::to_string(layer) + " factor " + std::to_string(k)));
  }
  ctx.note() << "NMF K=" << opts.factors << " relative error " << fit.model.relative_error << " after "
             << fit.model.iterations << " iterations (restart " << fit.model.best_restart << ")\n";
  return fit;
}

// ---- covariance ---------------------------------------------------------------------

/// "r c ch" triples separated by ';', e.g. "3 4 0; 0 0 1". ch may be '*' for every channel.
inline std::vector<unsup::ActivationIndex> parse_indices(const std::string& text, int channels) {
  std::vector<unsup::ActivationIndex> out;
  for (const auto& item : config::split_list(text, ';')) {
    std::istringstream in(item);
    int r = -1, c = -1;
    std::string ch;
    if (!(in >> r >> c >> ch)) throw UsageError("cov.indices: expected 'row col channel', got '" + item + "'");
    if (ch == "*") {
      for (int k = 0; k < channels; ++k) out.push_back({r, c, k});
      continue;
    }
    try {
      out.push_back({r, c, std::stoi(ch)});
    } catch (const std::exception&) {
      throw UsageError("cov.indices: bad channel '" + ch + "'");
    }
  }
  if (out.empty()) throw UsageError("cov.indices is empty");
  return out;
}

inline std::vector<unsup::CovarianceMap> cmd_cov(const Context& ctx) {
  const auto cks = load_checkpoints(ctx);
  const auto step = static_cast<std::uint64_t>(ctx.cfg.integer("cov", "checkpoint", static_cast<long long>(cks.back().step)));
  auto it = std::find_if(cks.begin(), cks.end(), [&](const auto& c) { return c.step == step; });
  if (it == cks.end()) throw UsageError("cov.checkpoint: no checkpoint with step " + std::to_string(step));
  const int layer = static_cast<int>(ctx.cfg.integer("cov", "layer"));
  const auto records = load_corpus(ctx, it->config.history);
  const auto idx = parse_indices(ctx.cfg.require("cov", "indices"), it->config.channels);
  std::vector<unsup::CovarianceMap> maps;
  try {
    maps = unsup::activation_input_covariance(records, *it, layer, idx, ctx.jobs);
  } catch (const unsup::UnsupError& e) {
    throw UsageError(e.what());
  }
  const auto dir = ctx.dir("cov");
  for (const auto& m : maps) {
    auto stem = unsup::covariance_file_name(m);
    stem = stem.substr(0, stem.size() - 4);
    binio::write_atomically(dir / (stem + ".csv"), [&](std::ostream& o) { unsup::write_covariance_csv(o, m); });
    write_text(dir / (stem + ".svg"), unsup::covariance_svg(m));
  }
  ctx.note() << maps.size() << " covariance maps over " << records.size() << " positions in " << dir.string() << '\n';
  return maps;
}

// ---- openings -----------------------------------------------------------------------

inline std::vector<openings::EraBucket> era_list(const Context& ctx) {
  if (!ctx.cfg.has("openings", "era_edges")) return openings::default_eras();
  try {
    return openings::eras_from_edges(ctx.cfg.int_list("openings", "era_edges"));
  } catch (const openings::OpeningsError& e) {
    throw UsageError(std::string("openings.era_edges: ") + e.what());
  }
}

inline fs::path cmd_openings(const Context& ctx) {
  const auto eras = era_list(ctx);
  std::vector<chess::Game> games;
  if (ctx.cfg.has("openings", "pgn")) games = load_games(ctx.cfg.existing_paths("openings", "pgn"), ctx.note());
  std::vector<network::Checkpoint> cks;
  if (ctx.cfg.has("checkpoints", "paths")) cks = load_checkpoints(ctx);
  if (games.empty() && cks.empty()) throw config::ConfigError("openings needs openings.pgn or checkpoints.paths");
  const auto dir = ctx.dir("openings");

  std::vector<openings::ProbabilitySeries> first;
  if (!games.empty()) {
    const auto rep = openings::corpus_first_move_distribution(games, eras, ctx.jobs);
    auto s = openings::to_series(rep.buckets);
    s.notes = rep.notes();
    for (const auto& n : s.notes) ctx.note() << "note: " << n << '\n';
    first.push_back(std::move(s));
  }
  if (!cks.empty()) {
    std::vector<openings::MoveDistribution> d(cks.size());
    const auto start = chess::start_position();
    parallel_for(cks.size(), ctx.jobs, [&](std::size_t i) { d[i] = openings::checkpoint_policy_distribution(cks[i], start); });
    for (const auto& x : d) ctx.note() << "step " << x.tag << ": policy entropy " << openings::entropy_bits(x) << " bits\n";
    first.push_back(openings::to_series(d));
  }
  const auto path = dir / "first_moves.csv";
  binio::write_atomically(path, [&](std::ostream& o) {
    openings::write_series_header(o);
    for (const auto& s : first) openings::write_series_rows(o, s);
  });
  for (const auto& s : first) write_text(dir / ("first_moves_" + s.source + ".svg"), openings::series_svg(s, "first move (" + s.source + ")"));

  const auto prefix_texts = config::split_list(ctx.cfg.text("openings", "prefixes", ""), ';');
  if (!prefix_texts.empty()) {
    std::vector<openings::Prefix> prefixes;
    for (const auto& t : prefix_texts) prefixes.push_back(openings::parse_prefix(t));
    chess::Position start;
    try {
      start = chess::parse_fen(ctx.cfg.text("openings", "start", std::string(chess::start_fen)));
    } catch (const chess::FenError& e) {
      throw UsageError(std::string("openings.start: ") + e.what());
    }
    std::vector<openings::ProbabilitySeries> lines;
    if (!games.empty()) lines.push_back(openings::corpus_line_distribution(games, start, prefixes, eras));
    if (!cks.empty()) lines.push_back(openings::line_mass_series(cks, start, prefixes, ctx.jobs));
    binio::write_atomically(dir / "lines.csv", [&](std::ostream& o) {
      openings::write_series_header(o);
      for (const auto& s : lines) openings::write_series_rows(o, s);
    });
    for (const auto& s : lines) write_text(dir / ("lines_" + s.source + ".svg"), openings::series_svg(s, "lines (" + s.source + ")"));
  }
  ctx.note() << "opening distributions in " << dir.string() << '\n';
  return path;
}

}  // namespace azprobe::cli
