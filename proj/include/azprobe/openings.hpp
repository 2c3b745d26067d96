#pragma once

// Opening preferences: corpus move/line frequencies bucketed by era, masked-softmax policy
// distributions, entropy, and joint prior mass of move sequences across checkpoints.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "azprobe/chess.hpp"
#include "azprobe/csv.hpp"
#include "azprobe/encoding.hpp"
#include "azprobe/network.hpp"
#include "azprobe/parallel.hpp"
#include "azprobe/svg.hpp"

namespace azprobe::openings {

using chess::Game;
using chess::Move;
using chess::Position;

class OpeningsError : public std::runtime_error {
 public:
  explicit OpeningsError(const std::string& what) : std::runtime_error(what) {}
};

// ---- eras ---------------------------------------------------------------------------

struct EraBucket {
  std::string label;
  int lo = 0;  // inclusive year
  int hi = 0;  // exclusive year
};

inline constexpr const char* undated_label = "undated";

/// [1400,1800), [1800,1850), [1850,1900), then decades up to `last_year`.
inline std::vector<EraBucket> default_eras(int last_year = 2029) {
  std::vector<EraBucket> out = {{"1400-1799", 1400, 1800}, {"1800-1849", 1800, 1850}, {"1850-1899", 1850, 1900}};
  for (int y = 1900; y <= last_year; y += 10) out.push_back({std::to_string(y) + "s", y, y + 10});
  return out;
}

/// Buckets from ascending edges: e1,e2,...,en gives [e1,e2), ..., [e(n-1),en).
inline std::vector<EraBucket> eras_from_edges(const std::vector<int>& edges) {
  if (edges.size() < 2) throw OpeningsError("era edges need at least two years");
  std::vector<EraBucket> out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i + 1] <= edges[i]) throw OpeningsError("era edges must be strictly increasing");
    out.push_back({std::to_string(edges[i]) + "-" + std::to_string(edges[i + 1] - 1), edges[i], edges[i + 1]});
  }
  return out;
}

enum class DateStatus { dated, undated, unparseable };

/// Year from a PGN Date tag ("1851.07.??"); "????.??.??" or a missing tag is undated.
inline std::pair<DateStatus, int> game_year(const Game& g) {
  const auto d = g.header("Date");
  if (!d || d->empty() || d->front() == '?') return {DateStatus::undated, 0};
  if (d->size() < 4) return {DateStatus::unparseable, 0};
  int year = 0;
  for (int i = 0; i < 4; ++i) {
    const char c = (*d)[static_cast<std::size_t>(i)];
    if (c < '0' || c > '9') return {DateStatus::unparseable, 0};
    year = year * 10 + (c - '0');
  }
  if (d->size() > 4 && (*d)[4] != '.') return {DateStatus::unparseable, 0};
  return {DateStatus::dated, year};
}

// ---- distributions -------------------------------------------------------------------

struct MoveProbability {
  Move move;
  std::string san;
  double p = 0.0;
};

struct MoveDistribution {
  std::string fen;
  std::string source;  // "corpus" or "checkpoint"
  std::string tag;     // bucket label or step
  std::size_t samples = 0;  // games counted (corpus only)
  std::vector<MoveProbability> moves;  // descending p, ties by SAN

  double probability(const std::string& san) const {
    for (const auto& m : moves)
      if (m.san == san) return m.p;
    return 0.0;
  }
};

namespace detail {

inline void sort_moves(std::vector<MoveProbability>& v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.p != b.p ? a.p > b.p : a.san < b.san; });
}

/// Placement, side, castling and a capturable en-passant square: positions equal for repetition purposes.
inline std::string position_key(Position p) {
  if (p.en_passant) {
    const auto ep = *p.en_passant;
    bool capturable = false;
    for (const auto& m : chess::legal_moves(p)) {
      const auto piece = p.at(m.from);
      capturable = capturable || (m.to == ep && piece && piece->kind == chess::PieceKind::pawn);
    }
    if (!capturable) p.en_passant.reset();
  }
  p.halfmove_clock = 0;
  p.fullmove_number = 1;
  return chess::emit_fen(p);
}

struct BucketIndex {
  std::vector<EraBucket> eras;
  std::size_t of(const Game& g, DateStatus& status) const {
    const auto [st, year] = game_year(g);
    status = st;
    if (st != DateStatus::dated) return eras.size();  // undated slot
    for (std::size_t i = 0; i < eras.size(); ++i)
      if (year >= eras[i].lo && year < eras[i].hi) return i;
    return eras.size() + 1;  // out of range
  }
  std::string label(std::size_t i) const { return i < eras.size() ? eras[i].label : undated_label; }
};

}  // namespace detail

struct CorpusReport {
  std::vector<MoveDistribution> buckets;  // non-empty buckets in era order, undated last
  std::vector<std::string> empty_buckets;
  std::size_t unparseable_dates = 0;  // these games are counted as undated
  std::size_t out_of_range = 0;       // dated games outside every bucket, not counted
  std::size_t skipped = 0;            // games without moves or not from the standard start
  std::vector<std::string> notes() const {
    std::vector<std::string> out;
    for (const auto& b : empty_buckets) out.push_back("bucket " + b + " has no games");
    if (unparseable_dates) out.push_back(std::to_string(unparseable_dates) + " games with unparseable dates counted as undated");
    if (out_of_range) out.push_back(std::to_string(out_of_range) + " dated games fall outside every bucket");
    if (skipped) out.push_back(std::to_string(skipped) + " games skipped (no moves or non-standard start)");
    return out;
  }
};

/// Empirical frequency of White's first move per era bucket.
inline CorpusReport corpus_first_move_distribution(const std::vector<Game>& games,
                                                   const std::vector<EraBucket>& eras = default_eras(),
                                                   int jobs = 1) {
  const detail::BucketIndex index{eras};
  const std::string start_key = detail::position_key(chess::start_position());
  const std::size_t slots = eras.size() + 2;
  struct Partial {
    std::vector<std::map<std::string, std::size_t>> counts;  // by UCI
    std::size_t unparseable = 0, skipped = 0;
  };
  const std::size_t chunk = 512, chunks = (games.size() + chunk - 1) / chunk;
  std::vector<Partial> partial(chunks);
  parallel_for(chunks, jobs, [&](std::size_t c) {
    auto& part = partial[c];
    part.counts.assign(slots, {});
    for (std::size_t i = c * chunk; i < std::min(games.size(), (c + 1) * chunk); ++i) {
      const auto& g = games[i];
      if (g.moves.empty() || detail::position_key(g.initial) != start_key) {
        ++part.skipped;
        continue;
      }
      DateStatus st{};
      const auto slot = index.of(g, st);
      if (st == DateStatus::unparseable) ++part.unparseable;
      ++part.counts[slot][g.moves.front().uci()];
    }
  });
  std::vector<std::map<std::string, std::size_t>> counts(slots);
  CorpusReport report;
  for (const auto& part : partial) {
    for (std::size_t s = 0; s < slots; ++s)
      for (const auto& [k, n] : part.counts[s]) counts[s][k] += n;
    report.unparseable_dates += part.unparseable;
    report.skipped += part.skipped;
  }
  for (const auto& [k, n] : counts[eras.size() + 1]) report.out_of_range += n;

  const auto start = chess::start_position();
  const auto legal = chess::legal_moves(start);
  for (std::size_t s = 0; s <= eras.size(); ++s) {
    std::size_t total = 0;
    for (const auto& [k, n] : counts[s]) total += n;
    if (total == 0) {
      if (s < eras.size()) report.empty_buckets.push_back(eras[s].label);
      continue;
    }
    MoveDistribution d;
    d.fen = chess::emit_fen(start);
    d.source = "corpus";
    d.tag = index.label(s);
    d.samples = total;
    for (const auto& m : legal) {
      auto it = counts[s].find(m.uci());
      if (it != counts[s].end())
        d.moves.push_back({m, chess::to_san(start, m), static_cast<double>(it->second) / static_cast<double>(total)});
    }
    detail::sort_moves(d.moves);
    report.buckets.push_back(std::move(d));
  }
  return report;
}

/// Softmax of the policy logits restricted to the legal moves of the last position.
inline MoveDistribution checkpoint_policy_distribution(const network::Checkpoint& ck,
                                                       std::span<const Position> history) {
  if (history.empty()) throw OpeningsError("policy distribution needs a position");
  const auto& pos = history.back();
  const auto x = encoding::encode_input(history, ck.config.encoding());
  const auto out = network::forward(ck, x).first;
  MoveDistribution d;
  d.fen = chess::emit_fen(pos);
  d.source = "checkpoint";
  d.tag = std::to_string(ck.step);
  const auto legal = chess::legal_moves(pos);
  if (legal.empty()) return d;
  std::vector<double> logits;
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& m : legal) {
    const double z = out.policy[static_cast<std::size_t>(encoding::policy_index_of(pos.side_to_move, m).flat())];
    logits.push_back(z);
    peak = std::max(peak, z);
  }
  double total = 0;
  for (auto& z : logits) total += (z = std::exp(z - peak));
  for (std::size_t i = 0; i < legal.size(); ++i)
    d.moves.push_back({legal[i], chess::to_san(pos, legal[i]), logits[i] / total});
  detail::sort_moves(d.moves);
  return d;
}

inline MoveDistribution checkpoint_policy_distribution(const network::Checkpoint& ck, const Position& pos) {
  return checkpoint_policy_distribution(ck, std::span<const Position>(&pos, 1));
}

/// Shannon entropy in bits, 0 log 0 = 0.
inline double entropy_bits(std::span<const double> p) {
  double h = 0;
  for (double v : p)
    if (v > 0) h -= v * std::log2(v);
  return h;
}

inline double entropy_bits(const MoveDistribution& d) {
  std::vector<double> p;
  for (const auto& m : d.moves) p.push_back(m.p);
  return entropy_bits(p);
}

// ---- lines ------------------------------------------------------------------------------

using Prefix = std::vector<std::string>;  // SAN tokens

inline Prefix parse_prefix(const std::string& text) {
  Prefix out;
  std::istringstream in(text);
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

inline std::string prefix_text(const Prefix& p) {
  std::string out;
  for (const auto& t : p) out += (out.empty() ? "" : " ") + t;
  return out;
}

namespace detail {

inline std::vector<Move> resolve_prefix(const Position& start, const Prefix& prefix) {
  std::vector<Move> out;
  Position p = start;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    Move m;
    try {
      m = chess::parse_san(p, prefix[i]);
    } catch (const std::exception& e) {
      throw OpeningsError("prefix '" + prefix_text(prefix) + "': ply " + std::to_string(i + 1) + " '" + prefix[i] +
                          "' is not legal (" + e.what() + ")");
    }
    out.push_back(m);
    p = chess::apply_move(p, m);
  }
  return out;
}

/// Rejects duplicates and prefixes that extend another tracked prefix.
inline void check_disjoint(const std::vector<std::vector<Move>>& lines, const std::vector<Prefix>& prefixes) {
  for (std::size_t a = 0; a < lines.size(); ++a)
    for (std::size_t b = 0; b < lines.size(); ++b) {
      if (a == b || lines[a].size() > lines[b].size()) continue;
      if (std::equal(lines[a].begin(), lines[a].end(), lines[b].begin()))
        throw OpeningsError("prefix '" + prefix_text(prefixes[a]) + "' overlaps '" + prefix_text(prefixes[b]) + "'");
    }
}

}  // namespace detail

/// Probability table: rows are buckets or steps, columns are moves or prefixes plus "other".
struct ProbabilitySeries {
  std::string source;                   // "corpus" or "checkpoint"
  std::vector<std::string> keys;        // bucket labels or steps
  std::vector<std::string> items;       // moves or prefixes, "other" last when present
  std::vector<std::vector<double>> p;   // [key][item]
  std::vector<std::string> notes;
};

/// Joint prior of each prefix per checkpoint: the product of masked-softmax probabilities along it.
inline ProbabilitySeries line_mass_series(const std::vector<network::Checkpoint>& checkpoints, const Position& start,
                                          const std::vector<Prefix>& prefixes, int jobs = 1) {
  std::vector<std::vector<Move>> lines;
  for (const auto& p : prefixes) lines.push_back(detail::resolve_prefix(start, p));
  detail::check_disjoint(lines, prefixes);

  ProbabilitySeries s;
  s.source = "checkpoint";
  for (const auto& p : prefixes) s.items.push_back(prefix_text(p));
  s.items.push_back("other");
  s.p.assign(checkpoints.size(), std::vector<double>(s.items.size(), 0.0));
  for (const auto& ck : checkpoints) s.keys.push_back(std::to_string(ck.step));

  parallel_for(checkpoints.size(), jobs, [&](std::size_t c) {
    const auto& ck = checkpoints[c];
    std::map<std::string, MoveDistribution> cache;  // by move sequence, so shared prefixes are evaluated once
    double tracked = 0;
    for (std::size_t k = 0; k < lines.size(); ++k) {
      std::vector<Position> history{start};
      std::string key;
      double mass = 1.0;
      for (const auto& m : lines[k]) {
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, checkpoint_policy_distribution(ck, history)).first;
        double q = 0;
        for (const auto& mp : it->second.moves)
          if (mp.move == m) q = mp.p;
        mass *= q;
        key += m.uci() + " ";
        history.push_back(chess::apply_move(history.back(), m));
      }
      s.p[c][k] = mass;
      tracked += mass;
    }
    s.p[c].back() = std::max(0.0, 1.0 - tracked);
  });
  return s;
}

/// Frequency of each prefix among games reaching `start` (first occurrence), per era bucket.
inline ProbabilitySeries corpus_line_distribution(const std::vector<Game>& games, const Position& start,
                                                  const std::vector<Prefix>& prefixes,
                                                  const std::vector<EraBucket>& eras = default_eras()) {
  std::vector<std::vector<Move>> lines;
  for (const auto& p : prefixes) lines.push_back(detail::resolve_prefix(start, p));
  detail::check_disjoint(lines, prefixes);
  const detail::BucketIndex index{eras};
  const auto key = detail::position_key(start);

  std::vector<std::vector<std::size_t>> counts(eras.size() + 2, std::vector<std::size_t>(lines.size() + 1, 0));
  for (const auto& g : games) {
    const auto positions = g.positions();
    std::optional<std::size_t> at;
    for (std::size_t i = 0; i < positions.size(); ++i)
      if (detail::position_key(positions[i]) == key) {
        at = i;
        break;
      }
    if (!at) continue;
    DateStatus st{};
    const auto slot = index.of(g, st);
    std::size_t which = lines.size();  // other
    for (std::size_t k = 0; k < lines.size(); ++k)
      if (*at + lines[k].size() <= g.moves.size() &&
          std::equal(lines[k].begin(), lines[k].end(), g.moves.begin() + static_cast<std::ptrdiff_t>(*at))) {
        which = k;
        break;
      }
    ++counts[slot][which];
  }

  ProbabilitySeries s;
  s.source = "corpus";
  for (const auto& p : prefixes) s.items.push_back(prefix_text(p));
  s.items.push_back("other");
  for (std::size_t slot = 0; slot <= eras.size(); ++slot) {
    std::size_t total = 0;
    for (auto n : counts[slot]) total += n;
    if (total == 0) continue;
    s.keys.push_back(index.label(slot));
    std::vector<double> row;
    for (auto n : counts[slot]) row.push_back(static_cast<double>(n) / static_cast<double>(total));
    s.p.push_back(std::move(row));
  }
  if (s.keys.empty()) s.notes.push_back("no game reaches the position");
  return s;
}

/// Moves as columns (ordered by total mass), one row per distribution.
inline ProbabilitySeries to_series(const std::vector<MoveDistribution>& dists) {
  ProbabilitySeries s;
  s.source = dists.empty() ? "" : dists.front().source;
  std::map<std::string, double> mass;
  for (const auto& d : dists)
    for (const auto& m : d.moves) mass[m.san] += m.p;
  std::vector<std::pair<std::string, double>> order(mass.begin(), mass.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [san, _] : order) s.items.push_back(san);
  for (const auto& d : dists) {
    s.keys.push_back(d.tag);
    std::vector<double> row;
    for (const auto& san : s.items) row.push_back(d.probability(san));
    s.p.push_back(std::move(row));
  }
  return s;
}

inline void write_series_header(std::ostream& out) { out << "source,bucket_or_step,move_or_prefix,probability\n"; }

/// Rows with zero probability are omitted.
inline void write_series_rows(std::ostream& out, const ProbabilitySeries& s) {
  for (std::size_t k = 0; k < s.keys.size(); ++k)
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      if (s.p[k][i] == 0.0) continue;
      out << s.source << ',' << s.keys[k] << ',' << s.items[i] << ',' << csv::fmt(s.p[k][i]) << '\n';
    }
}

inline std::string series_svg(const ProbabilitySeries& s, const std::string& title) {
  svg::Chart ch;
  ch.title = title;
  ch.x_label = s.source == "checkpoint" ? "training step" : "era";
  ch.y_label = "probability";
  ch.x_ticks = s.keys;
  ch.stacked = true;
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    svg::Series line{s.items[i], {}};
    for (std::size_t k = 0; k < s.keys.size(); ++k) line.y.push_back(s.p[k][i]);
    ch.series.push_back(std::move(line));
  }
  return svg::render(ch);
}

}  // namespace azprobe::openings
