#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "azprobe/chess.hpp"
#include "azprobe/concepts/catalogue.hpp"
#include "azprobe/concepts/table.hpp"
#include "azprobe/rng.hpp"

namespace azprobe::concepts {

/// A position together with where it came from.
struct PositionRecord {
  std::string fen;
  Position position;
  std::vector<Position> history;  // oldest first, ending with `position`
  GameContext context;
  bool has_context = false;
};

/// Every position reached in the games (before each ply and after the last), with
/// the following two moves as context and up to `max_history` plies of history.
inline std::vector<PositionRecord> collect_positions(const std::vector<chess::Game>& games, int max_history = 8) {
  std::vector<PositionRecord> out;
  for (const auto& g : games) {
    const auto positions = g.positions();
    for (std::size_t i = 0; i < positions.size(); ++i) {
      PositionRecord r;
      r.position = positions[i];
      r.fen = chess::emit_fen(positions[i]);
      const std::size_t first = i + 1 >= static_cast<std::size_t>(max_history) ? i + 1 - static_cast<std::size_t>(max_history) : 0;
      r.history.assign(positions.begin() + static_cast<std::ptrdiff_t>(first),
                       positions.begin() + static_cast<std::ptrdiff_t>(i + 1));
      if (i < g.moves.size()) r.context.next_move = g.moves[i];
      if (i + 1 < g.moves.size()) r.context.move_after = g.moves[i + 1];
      r.has_context = true;
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline std::vector<PositionRecord> records_from_fens(const std::vector<std::string>& fens) {
  std::vector<PositionRecord> out;
  for (const auto& f : fens) {
    PositionRecord r;
    r.position = chess::parse_fen(f);
    r.fen = chess::emit_fen(r.position);
    r.history = {r.position};
    out.push_back(std::move(r));
  }
  return out;
}

/// Keeps the first record for each FEN, preserving order.
inline std::vector<PositionRecord> dedup_by_fen(std::vector<PositionRecord> records) {
  std::set<std::string> seen;
  std::vector<PositionRecord> out;
  for (auto& r : records)
    if (seen.insert(r.fen).second) out.push_back(std::move(r));
  return out;
}

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
  std::size_t total() const { return train + validation + test; }
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

struct BalanceInfo {
  std::size_t positives_available = 0;
  std::size_t negatives_available = 0;
  std::size_t per_class = 0;  // achieved positives (= negatives) across all splits
  bool shortfall = false;
};

struct Dataset {
  DatasetSplit split;                           // for continuous and integer concepts
  std::map<std::string, DatasetSplit> balanced;  // per binary concept
  std::map<std::string, BalanceInfo> balance;
  std::map<std::string, ConceptVector> vectors;  // every FEN in any split
  std::map<std::string, PositionRecord> records;
  std::vector<std::string> warnings;
};

namespace detail {

/// Splits `n` items in proportion to the requested sizes; the train split takes rounding slack.
inline SplitSizes scale_sizes(const SplitSizes& want, std::size_t n) {
  if (want.total() <= n) return want;
  SplitSizes s;
  const double f = static_cast<double>(n) / static_cast<double>(want.total());
  s.validation = static_cast<std::size_t>(static_cast<double>(want.validation) * f);
  s.test = static_cast<std::size_t>(static_cast<double>(want.test) * f);
  s.train = n - s.validation - s.test;
  return s;
}

inline void deal(const std::vector<std::string>& items, const SplitSizes& sizes, DatasetSplit& out) {
  auto it = items.begin();
  auto take = [&](std::size_t k, std::vector<std::string>& dst) {
    dst.insert(dst.end(), it, it + static_cast<std::ptrdiff_t>(k));
    it += static_cast<std::ptrdiff_t>(k);
  };
  take(sizes.train, out.train);
  take(sizes.validation, out.validation);
  take(sizes.test, out.test);
}

}  // namespace detail

/// Deduplicates by FEN, evaluates the concepts, and draws seeded splits. Binary
/// concepts get their own class-balanced splits drawn from the same pool.
inline Dataset build_dataset(std::vector<PositionRecord> records, const std::vector<ConceptSpec>& concepts,
                             const SplitSizes& sizes, std::uint64_t seed) {
  Dataset ds;
  auto unique = dedup_by_fen(std::move(records));
  Rng rng(seed);
  std::vector<std::size_t> order(unique.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span(order));

  for (const auto& spec : concepts)
    if (needs_context(spec))
      for (const auto& r : unique)
        if (!r.has_context) throw MissingContext(spec.name);

  std::vector<ConceptVector> vecs(unique.size());
  for (std::size_t i = 0; i < unique.size(); ++i) {
    vecs[i].fen = unique[i].fen;
    const GameContext* ctx = unique[i].has_context ? &unique[i].context : nullptr;
    for (const auto& spec : concepts) vecs[i].values[spec.name] = eval_concept(spec, unique[i].position, ctx);
  }

  std::vector<std::string> shuffled;
  shuffled.reserve(order.size());
  for (auto i : order) shuffled.push_back(unique[i].fen);

  const auto base = detail::scale_sizes(sizes, shuffled.size());
  if (base.total() < sizes.total())
    ds.warnings.push_back("only " + std::to_string(shuffled.size()) + " unique positions for " +
                          std::to_string(sizes.total()) + " requested");
  detail::deal(shuffled, base, ds.split);
  std::set<std::string> used(ds.split.train.begin(), ds.split.train.end());
  used.insert(ds.split.validation.begin(), ds.split.validation.end());
  used.insert(ds.split.test.begin(), ds.split.test.end());

  for (const auto& spec : concepts) {
    if (spec.kind != ConceptKind::binary) continue;
    std::vector<std::string> pos, neg;
    for (auto i : order) (vecs[i].values[spec.name] > 0.5 ? pos : neg).push_back(unique[i].fen);
    BalanceInfo info;
    info.positives_available = pos.size();
    info.negatives_available = neg.size();
    const std::size_t want_per_class = sizes.total() / 2;
    info.per_class = std::min({want_per_class, pos.size(), neg.size()});
    info.shortfall = info.per_class < want_per_class;
    const SplitSizes half{sizes.train / 2, sizes.validation / 2, sizes.test / 2};
    const auto per_split = detail::scale_sizes(half, info.per_class);
    // Any rounding slack between half.total() and per_class also goes to train.
    SplitSizes adj = per_split;
    adj.train += info.per_class - adj.total();
    DatasetSplit split, neg_split;
    detail::deal(pos, adj, split);
    detail::deal(neg, adj, neg_split);
    split.train.insert(split.train.end(), neg_split.train.begin(), neg_split.train.end());
    split.validation.insert(split.validation.end(), neg_split.validation.begin(), neg_split.validation.end());
    split.test.insert(split.test.end(), neg_split.test.begin(), neg_split.test.end());
    if (info.shortfall)
      ds.warnings.push_back("concept " + spec.name + ": " + std::to_string(pos.size()) + " positives available, " +
                            "balanced split has " + std::to_string(2 * info.per_class) + " of " +
                            std::to_string(2 * want_per_class) + " requested");
    for (auto* v : {&split.train, &split.validation, &split.test}) used.insert(v->begin(), v->end());
    ds.balanced[spec.name] = std::move(split);
    ds.balance[spec.name] = info;
  }

  for (std::size_t i = 0; i < unique.size(); ++i) {
    if (!used.count(unique[i].fen)) continue;
    ds.vectors[unique[i].fen] = std::move(vecs[i]);
    ds.records[unique[i].fen] = std::move(unique[i]);
  }
  return ds;
}

/// i.i.d. standard normal targets, one per position.
inline std::vector<double> random_concept(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.normal();
  return out;
}

}  // namespace azprobe::concepts
