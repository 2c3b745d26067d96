#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>

#include "commands.hpp"
#include "fixtures.hpp"
#include "oracle/brute_chess.hpp"
#include "oracle/brute_concepts.hpp"

namespace azprobe::cli {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

namespace detail {

inline std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

/// Rows of a CSV keyed by every column but the last, mapped to the last column's number.
inline std::map<std::string, double> keyed_values(const fs::path& p, const std::string& only_prefix = "") {
  std::istringstream in(read_all(p));
  std::string line;
  std::getline(in, line);
  std::map<std::string, double> out;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind(only_prefix, 0) != 0) continue;
    const auto cut = line.rfind(',');
    double v = 0;
    if (!csv::parse(line.substr(cut + 1), v)) throw DataError(p.filename().string() + ": bad number in '" + line + "'");
    out[line.substr(0, cut)] = v;
  }
  return out;
}

inline std::string compare_keyed(const std::map<std::string, double>& got, const std::map<std::string, double>& want,
                                 double tol) {
  if (got.size() != want.size())
    return std::to_string(got.size()) + " rows, golden has " + std::to_string(want.size());
  double worst = 0;
  for (const auto& [k, v] : want) {
    auto it = got.find(k);
    if (it == got.end()) return "missing row " + k;
    worst = std::max(worst, std::abs(it->second - v));
  }
  if (worst > tol) {
    std::ostringstream s;
    s << "max deviation " << worst << " > " << tol;
    return s.str();
  }
  return {};
}

}  // namespace detail

/// Runs the invariant suite against the fixtures in `fixture_dir`, writing scratch output under `work`.
inline std::vector<CheckResult> run_selftest(const fs::path& fixture_dir, const fs::path& work, int jobs,
                                             std::ostream& log) {
  std::vector<CheckResult> results;
  auto check = [&](const std::string& name, const std::function<std::string()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r{name, false, "", 0};
    try {
      r.detail = body();
      r.pass = r.detail.rfind("FAIL", 0) != 0;
      if (!r.pass) r.detail = r.detail.substr(std::min<std::size_t>(r.detail.size(), 6));
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back(r);
  };
  auto fail = [](const std::string& why) { return "FAIL: " + why; };

  std::ostringstream quiet;
  auto context = [&](const std::string& sub) {
    Context ctx;
    ctx.cfg = config::Config::load(fixture_dir / "selftest.cfg");
    ctx.out = work / sub;
    ctx.jobs = jobs;
    ctx.force = true;
    ctx.log = &quiet;
    return ctx;
  };

  check("fixture integrity", [&]() -> std::string {
    std::istringstream in(detail::read_all(fixture_dir / "MANIFEST"));
    std::string hash, name;
    std::size_t n = 0;
    std::vector<std::string> bad;
    while (in >> hash >> name) {
      ++n;
      if (!fs::exists(fixture_dir / name)) {
        bad.push_back(name + " (missing)");
        continue;
      }
      if (fixtures::hash_hex(detail::read_all(fixture_dir / name)) != hash) bad.push_back(name + " (corrupted)");
    }
    if (n != fixtures::hashed_files.size()) return fail("MANIFEST lists " + std::to_string(n) + " files");
    if (!bad.empty()) {
      std::string s;
      for (const auto& b : bad) s += (s.empty() ? "" : ", ") + b;
      return fail(s);
    }
    return std::to_string(n) + " files match MANIFEST";
  });

  check("perft 1-4 vs brute-force oracle", [&]() -> std::string {
    const auto start = chess::start_position();
    const auto ob = oracle::from_fen(std::string(chess::start_fen));
    std::string s;
    for (int d = 1; d <= 4; ++d) {
      const auto got = chess::perft(start, d), want = oracle::perft(ob, d);
      if (got != want) return fail("depth " + std::to_string(d) + ": " + std::to_string(got) + " vs oracle " + std::to_string(want));
      s += (d > 1 ? "; " : "") + std::to_string(got);
    }
    return s;
  });

  check("concepts vs brute-force oracle", [&]() -> std::string {
    std::ifstream in(fixture_dir / "random_games.pgn");
    const auto records = concepts::dedup_by_fen(concepts::collect_positions(chess::parse_pgn(in).games, 1));
    if (records.size() < 1000) return fail("only " + std::to_string(records.size()) + " fixture positions");
    std::size_t compared = 0;
    for (const auto& r : records) {
      const auto want = oracle::all_concepts(r.fen);
      for (const auto& spec : concepts::native_concepts()) {
        if (concepts::needs_context(spec)) continue;
        const double got = concepts::eval_concept(spec, r.position);
        if (got != want.at(spec.name)) return fail(spec.name + " disagrees at " + r.fen);
        ++compared;
      }
    }
    return std::to_string(records.size()) + " positions, " + std::to_string(compared) + " values, 0 disagreements";
  });

  check("planted probe grid", [&]() -> std::string {
    const auto grids = cmd_probe(context("probe"));
    double lo = 1e9, rnd = -1e9;
    for (const auto& g : grids)
      for (const auto& c : g.cells) {
        if (c.status != probes::CellStatus::ok) return fail("cell " + c.target + " layer " + std::to_string(c.layer) + " has no score");
        if (c.target == "random") rnd = std::max(rnd, c.value);
        else if (c.layer > 0) lo = std::min(lo, c.value);
      }
    std::ostringstream s;
    s << "min r2 over planted layers " << std::setprecision(5) << lo << ", max random-control r2 " << rnd;
    if (lo < 0.99) return fail(s.str());
    if (rnd > 0.05) return fail(s.str());
    return s.str();
  });

  check("covariance vs golden", [&]() -> std::string {
    cmd_cov(context("cov"));
    const auto got = detail::keyed_values(work / "cov" / "cov" / "cov_1_34_0.csv");
    const auto want = detail::keyed_values(fixture_dir / "cov_golden.csv");
    const auto diff = detail::compare_keyed(got, want, 1e-6);
    return diff.empty() ? std::to_string(want.size()) + " entries within 1e-6" : fail(diff);
  });

  check("openings vs golden", [&]() -> std::string {
    cmd_openings(context("openings"));
    const auto got = detail::keyed_values(work / "openings" / "openings" / "first_moves.csv", "corpus,");
    const auto want = detail::keyed_values(fixture_dir / "openings_golden.csv");
    const auto diff = detail::compare_keyed(got, want, 1e-12);
    return diff.empty() ? std::to_string(want.size()) + " rows match" : fail(diff);
  });

  check("value regression on planted head", [&]() -> std::string {
    const auto t = cmd_value_reg(context("value"));
    const auto& m = t.points.back().model;
    std::ostringstream s;
    s << std::setprecision(3) << "weights";
    for (double w : m.w) s << ' ' << w;
    const double want[5] = {0.05, 0.15, 0.15, 0.25, 0.45};
    for (int j = 0; j < 5; ++j)
      if (std::abs(m.w[static_cast<std::size_t>(j)] - want[j]) > 0.1 * want[j]) return fail(s.str());
    return s.str();
  });

  check("NMF objective monotone", [&]() -> std::string {
    const auto fit = cmd_nmf(context("nmf"));
    const auto& tr = fit.model.objective_trace;
    for (std::size_t i = 1; i < tr.size(); ++i)
      if (tr[i] > tr[i - 1]) return fail("objective rose at iteration " + std::to_string(i));
    std::ostringstream s;
    s << tr.size() << " iterations, relative error " << std::setprecision(4) << fit.model.relative_error;
    return s.str();
  });

  check("checkpoint and cache round trips", [&]() -> std::string {
    fs::create_directories(work / "roundtrip");
    for (const char* name : {"planted_t1000.azpw", "planted_t2000.azpw"}) {
      const auto ck = network::load_checkpoint(fixture_dir / name);
      network::save_checkpoint(ck, work / "roundtrip" / name);
      if (detail::read_all(work / "roundtrip" / name) != detail::read_all(fixture_dir / name))
        return fail(std::string(name) + " rewrite differs");
    }
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(work / "probe" / "cache")) {
      const auto c = cache::load_cache(e.path());
      std::ostringstream o(std::ios::binary);
      cache::write_cache(o, c);
      if (o.str() != detail::read_all(e.path())) return fail(e.path().filename().string() + " rewrite differs");
      ++files;
    }
    if (files == 0) return fail("no cache files to check");
    return "2 checkpoints, " + std::to_string(files) + " caches bit-exact";
  });

  log << std::left << std::setw(36) << "check" << std::setw(6) << "result" << std::setw(9) << "seconds" << "detail\n";
  for (const auto& r : results)
    log << std::setw(36) << r.name << std::setw(6) << (r.pass ? "PASS" : "FAIL") << std::setw(9) << std::fixed
        << std::setprecision(2) << r.seconds << std::defaultfloat << r.detail << '\n';
  return results;
}

}  // namespace azprobe::cli
