#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "azprobe/chess.hpp"
#include "azprobe/concepts.hpp"
#include "oracle/brute_concepts.hpp"
#include "support/positions.hpp"

using namespace azprobe;
using namespace azprobe::chess;
using namespace azprobe::concepts;

namespace {

using support::playout_positions;
using support::scattered_positions;

double value(const char* name, const char* fen) { return eval_concept(name, parse_fen(fen)); }

}  // namespace

TEST(Concepts, ReferenceExamples) {
  EXPECT_EQ(value("material_diff", start_fen.data()), 0.0);
  EXPECT_EQ(value("knight_fork_mine", "r3k3/2N5/8/8/8/8/8/4K3 w - - 0 1"), 1.0);
  EXPECT_EQ(value("has_bishop_pair_mine", start_fen.data()), 1.0);
  EXPECT_EQ(value("num_pawn_islands_mine", "4k3/8/8/8/8/8/PP1P4/4K3 w - - 0 1"), 2.0);
  EXPECT_EQ(value("num_pieces_mine", start_fen.data()), 16.0);
  EXPECT_EQ(value("material_mine", start_fen.data()), 39.0);
}

TEST(Concepts, PinnedKnightForkDoesNotCount) {
  EXPECT_EQ(value("knight_fork_mine", "r1r1k3/2N5/8/8/8/8/8/4K3 w - - 0 1"), 1.0);
  EXPECT_EQ(value("knight_fork_mine", "r1r1k3/2N5/8/8/8/8/8/2K5 w - - 0 1"), 0.0);
  EXPECT_EQ(value("has_pinned_knight_mine", "r1r1k3/2N5/8/8/8/8/8/2K5 w - - 0 1"), 1.0);
  EXPECT_EQ(value("knight_fork_mine", "2b1k3/2N5/8/8/8/8/8/4K3 w - - 0 1"), 0.0);
}

TEST(Concepts, PawnStructureCases) {
  const char* fen = "4k3/8/8/8/8/8/PP1P4/4K3 w - - 0 1";
  EXPECT_EQ(value("num_isolated_pawns_mine", fen), 1.0);
  EXPECT_EQ(value("has_iqp_mine", fen), 1.0);
  EXPECT_EQ(value("num_passed_pawns_mine", fen), 3.0);
  EXPECT_EQ(value("num_double_pawn_files_mine", "4k3/8/8/8/8/P7/P7/4K3 w - - 0 1"), 1.0);
  EXPECT_EQ(value("num_double_pawn_files_mine", "4k3/8/8/8/8/8/P7/4K3 w - - 0 1"), 0.0);
  EXPECT_EQ(value("num_protected_passed_pawns_mine", "4k3/8/8/3P4/2P5/8/8/4K3 w - - 0 1"), 1.0);
  EXPECT_EQ(value("num_connected_passed_pawns_mine", "4k3/8/8/3P4/2P5/8/8/4K3 w - - 0 1"), 2.0);
  EXPECT_EQ(value("has_connected_passed_pawns_mine", "4k3/8/8/3P4/2P5/8/8/4K3 w - - 0 1"), 1.0);
  EXPECT_EQ(value("has_pawn_on_7th_rank_opponent", "4k3/8/8/8/8/8/p7/4K3 w - - 0 1"), 1.0);
}

TEST(Concepts, MateThreatAndCheck) {
  EXPECT_EQ(value("has_mate_threat", "6k1/8/8/8/8/8/5PPP/r5K1 w - - 0 1"), 0.0);
  EXPECT_EQ(value("in_check", "6k1/8/8/8/8/8/5PPP/r5K1 w - - 0 1"), 1.0);
  EXPECT_EQ(value("has_mate_threat", "r5k1/8/8/8/8/8/5PPP/6K1 w - - 0 1"), 1.0);
  EXPECT_EQ(value("has_mate_threat", start_fen.data()), 0.0);
}

TEST(Concepts, CaptureSquaresAreFromEachSidesView) {
  // Black to move, white knight on d8 is black's "d1" square.
  const char* fen = "3N3k/8/8/8/8/8/8/3rK3 b - - 0 1";
  EXPECT_EQ(value("capture_possible_on_d1_mine", fen), 1.0);
  EXPECT_EQ(value("capture_possible_on_d1_opponent", fen), 1.0);  // Kxd1 from white's view
}

TEST(Concepts, ContextConceptsRequireContext) {
  const auto pos = start_position();
  EXPECT_THROW(eval_concept("capture_happens_next_move_on_e2_mine", pos), MissingContext);
  EXPECT_THROW(eval_concept("no_such_concept", pos), UnknownConcept);
  const auto p = parse_fen("4k3/8/8/8/8/8/4q3/4K3 w - - 0 1");
  GameContext ctx{Move{*Square::parse("e1"), *Square::parse("e2"), std::nullopt}, std::nullopt};
  EXPECT_EQ(eval_concept("capture_happens_next_move_on_e2_mine", p, &ctx), 1.0);
  EXPECT_EQ(eval_concept("capture_happens_next_move_on_e2_opponent", p, &ctx), 0.0);
}

TEST(Concepts, AgreeWithBruteForceOracle) {
  auto positions = playout_positions(15, 100, 5);
  for (const auto& p : scattered_positions(1000, 6)) positions.push_back(p);
  ASSERT_GE(positions.size(), 2000u);
  std::map<std::string, int> positives;
  for (const auto& p : positions) {
    const auto fen = emit_fen(p);
    const auto expected = oracle::all_concepts(fen);
    for (const auto& spec : native_concepts()) {
      if (needs_context(spec)) continue;
      auto it = expected.find(spec.name);
      ASSERT_NE(it, expected.end()) << spec.name;
      const double got = eval_concept(spec, p);
      ASSERT_EQ(got, it->second) << spec.name << " @ " << fen;
      if (got != 0.0) positives[spec.name]++;
    }
  }
  // The sample should exercise the interesting concepts at least a few times.
  for (const char* name : {"knight_fork_mine", "has_pinned_knight_mine", "has_mate_threat", "num_passed_pawns_mine",
                           "has_control_of_open_file_mine", "has_check_move_mine"})
    EXPECT_GE(positives[name], 3) << name;
}

TEST(Concepts, OrientationInvariance) {
  int checked = 0;
  auto positions = playout_positions(8, 90, 9);
  for (const auto& p : scattered_positions(500, 10)) positions.push_back(p);
  for (const auto& p : positions) {
    if (p.en_passant) continue;
    const auto m = color_mirror(p);
    for (const auto& c : concepts::detail::side_concepts()) {
      if (c.needs_context) continue;
      ASSERT_EQ(c.fn(p, p.side_to_move, nullptr), c.fn(m, !p.side_to_move, nullptr)) << c.base << " @ " << emit_fen(p);
      ASSERT_EQ(c.fn(p, !p.side_to_move, nullptr), c.fn(m, p.side_to_move, nullptr)) << c.base << " @ " << emit_fen(p);
    }
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

TEST(Concepts, DiffIsMineMinusOpponent) {
  for (const auto& p : playout_positions(5, 80, 13))
    for (const auto& spec : native_concepts()) {
      if (spec.side_variant != SideVariant::diff || needs_context(spec)) continue;
      EXPECT_EQ(eval_concept(spec, p), eval_concept(spec.base + "_mine", p) - eval_concept(spec.base + "_opponent", p));
    }
}

TEST(ConceptTable, RoundTripsThousandRows) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  std::vector<ConceptVector> rows;
  const std::vector<std::string> cols = {"a", "b", "c"};
  const auto positions = playout_positions(15, 80, 17);
  std::set<std::string> seen;
  for (const auto& p : positions) {
    auto fen = emit_fen(p);
    if (!seen.insert(fen).second) continue;
    rows.push_back({fen, {{"a", d(rng)}, {"b", std::ldexp(d(rng), -40)}, {"c", std::round(d(rng))}}});
    if (rows.size() == 1000) break;
  }
  ASSERT_EQ(rows.size(), 1000u);
  std::stringstream s;
  export_concepts(s, cols, rows);
  const auto back = load_external_concepts(s);
  EXPECT_EQ(back.columns, cols);
  ASSERT_EQ(back.by_fen.size(), rows.size());
  for (const auto& r : rows) EXPECT_EQ(back.by_fen.at(r.fen).values, r.values);
}

TEST(ConceptTable, Errors) {
  std::stringstream no_fen("position,a\nx,1\n");
  EXPECT_THROW(load_external_concepts(no_fen), TableError);
  std::stringstream bad_cell("fen,a\n" + std::string(start_fen) + ",abc\n");
  try {
    load_external_concepts(bad_cell);
    FAIL();
  } catch (const TableError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
  }
  std::stringstream dup("fen,a\n" + std::string(start_fen) + ",1\n" + std::string(start_fen) + ",2\n");
  const auto t = load_external_concepts(dup);
  EXPECT_EQ(t.by_fen.at(std::string(start_fen)).values.at("a"), 2.0);
  EXPECT_EQ(t.warnings.size(), 1u);
}

TEST(Dataset, DeduplicatesByFen) {
  const std::string start(start_fen);
  auto recs = records_from_fens({start, start, "4k3/8/8/8/8/8/8/4K3 w - - 0 1"});
  EXPECT_EQ(dedup_by_fen(recs).size(), 2u);
}

TEST(Dataset, BalancesWithShortfallWarning) {
  // 30 positions with a pinned piece, 200 without.
  std::vector<std::string> fens;
  for (int f = 0; f < 6; ++f)
    for (int k = 0; k < 5; ++k) {
      // White king on rank 1, white knight on rank 2 of same file, black rook on rank 8: pinned knight.
      const int kf = (f + 1) % 8;
      Position p;
      p.board.fill(std::nullopt);
      p.board[static_cast<std::size_t>(Square(kf, 0).index())] = Piece{PieceKind::king, Color::white};
      p.board[static_cast<std::size_t>(Square(kf, 1 + k).index())] = Piece{PieceKind::knight, Color::white};
      p.board[static_cast<std::size_t>(Square(kf, 7).index())] = Piece{PieceKind::rook, Color::black};
      p.board[static_cast<std::size_t>(Square((kf + 4) % 8, 6).index())] = Piece{PieceKind::king, Color::black};
      fens.push_back(emit_fen(p));
    }
  std::set<std::string> uniq(fens.begin(), fens.end());
  ASSERT_EQ(uniq.size(), 30u);
  for (const auto& p : playout_positions(10, 30, 21)) {
    if (eval_concept("has_pinned_knight_mine", p) == 0.0) fens.push_back(emit_fen(p));
    if (fens.size() >= 230) break;
  }
  const auto spec = *find_concept("has_pinned_knight_mine");
  const auto ds = build_dataset(records_from_fens(fens), {spec}, {60, 20, 20}, 7);
  const auto& info = ds.balance.at(spec.name);
  EXPECT_EQ(info.positives_available, 30u);
  EXPECT_TRUE(info.shortfall);
  const auto& b = ds.balanced.at(spec.name);
  EXPECT_EQ(b.train.size() + b.validation.size() + b.test.size(), 60u);
  int pos = 0;
  for (const auto* v : {&b.train, &b.validation, &b.test})
    for (const auto& f : *v) pos += ds.vectors.at(f).values.at(spec.name) > 0.5;
  EXPECT_EQ(pos, 30);
  EXPECT_FALSE(ds.warnings.empty());

  const auto again = build_dataset(records_from_fens(fens), {spec}, {60, 20, 20}, 7);
  EXPECT_EQ(again.balanced.at(spec.name).train, b.train);
  EXPECT_EQ(again.split.test, ds.split.test);
  const auto other = build_dataset(records_from_fens(fens), {spec}, {60, 20, 20}, 8);
  EXPECT_NE(other.split.train, ds.split.train);
}

TEST(Dataset, RandomConceptStatistics) {
  const auto v = random_concept(42, 100000);
  double mean = 0, var = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  EXPECT_LT(std::abs(mean), 0.05);
  EXPECT_LT(std::abs(var - 1.0), 0.1);
  EXPECT_EQ(random_concept(42, 100), random_concept(42, 100));
  EXPECT_NE(random_concept(42, 100), random_concept(43, 100));
}
