#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "azprobe/openings.hpp"

using namespace azprobe;
using namespace azprobe::openings;

namespace {

std::vector<Game> games_from(const std::vector<std::pair<std::string, std::string>>& date_and_moves) {
  std::string text;
  for (const auto& [date, moves] : date_and_moves) {
    if (!date.empty()) text += "[Date \"" + date + "\"]\n";
    text += "[Result \"*\"]\n\n" + moves + " *\n\n";
  }
  std::istringstream in(text);
  auto r = chess::parse_pgn(in);
  EXPECT_TRUE(r.issues.empty());
  return r.games;
}

network::Checkpoint zero_ck(std::uint64_t step = 0) {
  network::NetworkConfig cfg;
  cfg.blocks = 2;
  cfg.channels = 4;
  cfg.value_hidden = 4;
  return network::zero_checkpoint(cfg, step);
}

double total(const MoveDistribution& d) {
  double s = 0;
  for (const auto& m : d.moves) s += m.p;
  return s;
}

}  // namespace

TEST(Corpus, SingleMoveCorpus) {
  std::vector<std::pair<std::string, std::string>> spec(10, {"1990.01.01", "1. e4 e5"});
  const auto r = corpus_first_move_distribution(games_from(spec));
  ASSERT_EQ(r.buckets.size(), 1u);
  EXPECT_EQ(r.buckets[0].tag, "1990s");
  ASSERT_EQ(r.buckets[0].moves.size(), 1u);
  EXPECT_EQ(r.buckets[0].moves[0].san, "e4");
  EXPECT_EQ(r.buckets[0].moves[0].p, 1.0);
}

TEST(Corpus, EvenSplitEmptyBucketsAndDates) {
  std::vector<std::pair<std::string, std::string>> spec;
  for (int i = 0; i < 5; ++i) spec.push_back({"1855.??.??", "1. e4"});
  for (int i = 0; i < 5; ++i) spec.push_back({"1859.03.02", "1. d4"});
  spec.push_back({"????.??.??", "1. c4"});
  spec.push_back({"", "1. Nf3"});
  spec.push_back({"circa 1900", "1. g3"});
  spec.push_back({"1250.01.01", "1. b3"});
  const auto r = corpus_first_move_distribution(games_from(spec), eras_from_edges({1800, 1850, 1900}));
  ASSERT_EQ(r.buckets.size(), 2u);
  EXPECT_EQ(r.buckets[0].tag, "1850-1899");
  EXPECT_EQ(r.buckets[0].probability("e4"), 0.5);
  EXPECT_EQ(r.buckets[0].probability("d4"), 0.5);
  EXPECT_EQ(r.buckets[1].tag, "undated");
  EXPECT_EQ(r.buckets[1].samples, 3u);
  EXPECT_EQ(r.empty_buckets, std::vector<std::string>{"1800-1849"});
  EXPECT_EQ(r.unparseable_dates, 1u);
  EXPECT_EQ(r.out_of_range, 1u);
  EXPECT_EQ(r.notes().size(), 3u);
}

TEST(Corpus, CountsIgnoreGameOrder) {
  std::vector<std::pair<std::string, std::string>> spec;
  const char* firsts[] = {"1. e4", "1. d4", "1. c4", "1. Nf3", "1. e4", "1. e4", "1. d4"};
  for (int i = 0; i < 700; ++i) spec.push_back({std::to_string(1900 + i % 120) + ".01.01", firsts[i % 7]});
  auto games = games_from(spec);
  const auto a = corpus_first_move_distribution(games, default_eras(), 1);
  std::shuffle(games.begin(), games.end(), std::mt19937(3));
  const auto b = corpus_first_move_distribution(games, default_eras(), 3);
  ASSERT_EQ(a.buckets.size(), b.buckets.size());
  for (std::size_t i = 0; i < a.buckets.size(); ++i) {
    ASSERT_EQ(a.buckets[i].moves.size(), b.buckets[i].moves.size());
    for (std::size_t k = 0; k < a.buckets[i].moves.size(); ++k) {
      EXPECT_EQ(a.buckets[i].moves[k].san, b.buckets[i].moves[k].san);
      EXPECT_EQ(a.buckets[i].moves[k].p, b.buckets[i].moves[k].p);
    }
  }
}

TEST(Policy, ZeroCheckpointIsUniformOverLegalMoves) {
  const auto d = checkpoint_policy_distribution(zero_ck(), chess::start_position());
  ASSERT_EQ(d.moves.size(), 20u);
  for (const auto& m : d.moves) EXPECT_NEAR(m.p, 1.0 / 20, 1e-15);
  EXPECT_NEAR(entropy_bits(d), 4.3219, 1e-3);
}

TEST(Policy, SupportIsExactlyTheLegalMoves) {
  const auto ck = network::random_checkpoint(zero_ck().config, 5, 1.0);
  for (const char* fen : {chess::start_fen.data(), "r1bqkbnr/pppp1ppp/2n5/4p3/4P3/5N2/PPPP1PPP/RNBQKB1R w KQkq - 2 3",
                          "8/P7/8/8/8/8/k6K/8 w - - 0 1", "4k3/8/8/8/8/8/8/4K2R b K - 0 1"}) {
    const auto pos = chess::parse_fen(fen);
    const auto d = checkpoint_policy_distribution(ck, pos);
    EXPECT_NEAR(total(d), 1.0, 1e-9);
    std::set<std::string> got, want;
    for (const auto& m : d.moves) {
      got.insert(m.move.uci());
      EXPECT_GE(m.p, 0.0);
    }
    for (const auto& m : chess::legal_moves(pos)) want.insert(m.uci());
    EXPECT_EQ(got, want) << fen;
  }
}

TEST(Policy, PlantedPlaneMakesItsMoveMostLikely) {
  auto ck = zero_ck();
  network::plant_policy_plane(ck, 52, 3.0f);  // north-west, distance 4
  auto pos = chess::start_position();
  for (const char* san : {"e4", "e5", "Nf3", "Nc6"}) pos = chess::apply_move(pos, chess::parse_san(pos, san));
  const auto d = checkpoint_policy_distribution(ck, pos);
  EXPECT_EQ(d.moves[0].san, "Bb5");
  EXPECT_GT(d.moves[0].p, d.moves[1].p);
}

TEST(Entropy, HandCases) {
  EXPECT_EQ(entropy_bits(std::vector<double>{1.0}), 0.0);
  EXPECT_EQ(entropy_bits(std::vector<double>{0.0, 1.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(entropy_bits(std::vector<double>(4, 0.25)), 2.0);
  EXPECT_NEAR(entropy_bits(std::vector<double>(20, 0.05)), 4.3219, 1e-3);
}

TEST(Entropy, BoundedBySupportSize) {
  const auto ck = network::random_checkpoint(zero_ck().config, 8, 2.0);
  const auto d = checkpoint_policy_distribution(ck, chess::start_position());
  const double h = entropy_bits(d);
  EXPECT_GE(h, 0.0);
  EXPECT_LE(h, std::log2(20.0) + 1e-12);
}

TEST(LineMass, ZeroCheckpointProducts) {
  const std::vector<network::Checkpoint> cks = {zero_ck(0), zero_ck(10)};
  const auto start = chess::start_position();
  const auto s = line_mass_series(cks, start, {parse_prefix("e4 e5"), parse_prefix("d4 d5")});
  ASSERT_EQ(s.keys, (std::vector<std::string>{"0", "10"}));
  EXPECT_NEAR(s.p[0][0], 0.0025, 1e-15);
  EXPECT_NEAR(s.p[1][1], 0.0025, 1e-15);
  EXPECT_NEAR(s.p[0][2], 0.995, 1e-12);
  const auto empty = line_mass_series(cks, start, {Prefix{}});
  EXPECT_EQ(empty.p[0][0], 1.0);
  EXPECT_EQ(empty.p[0][1], 0.0);
}

TEST(LineMass, AllFirstMovesCoverTheMass) {
  const auto ck = network::random_checkpoint(zero_ck().config, 9, 1.0, 7);
  const auto start = chess::start_position();
  std::vector<Prefix> prefixes;
  for (const auto& m : chess::legal_moves(start)) prefixes.push_back({chess::to_san(start, m)});
  const auto s = line_mass_series({ck}, start, prefixes);
  double sum = 0;
  for (std::size_t i = 0; i + 1 < s.items.size(); ++i) sum += s.p[0][i];
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_NEAR(s.p[0].back(), 0.0, 1e-9);
}

TEST(LineMass, Telescoping) {
  const auto ck = network::random_checkpoint(zero_ck().config, 10, 1.5);
  const auto start = chess::start_position();
  const auto parent = line_mass_series({ck}, start, {parse_prefix("e4 c5")});
  const auto child = line_mass_series({ck}, start, {parse_prefix("e4 c5 Nf3")});
  auto pos = start;
  for (const char* san : {"e4", "c5"}) pos = chess::apply_move(pos, chess::parse_san(pos, san));
  const auto cond = checkpoint_policy_distribution(ck, pos).probability("Nf3");
  EXPECT_NEAR(child.p[0][0], parent.p[0][0] * cond, 1e-12);
}

TEST(LineMass, IllegalAndOverlappingPrefixes) {
  const std::vector<network::Checkpoint> cks = {zero_ck()};
  try {
    line_mass_series(cks, chess::start_position(), {parse_prefix("e4 e5 Ke3")});
    FAIL() << "expected an error";
  } catch (const OpeningsError& e) {
    EXPECT_NE(std::string(e.what()).find("ply 3 'Ke3'"), std::string::npos) << e.what();
  }
  EXPECT_THROW(line_mass_series(cks, chess::start_position(), {parse_prefix("e4"), parse_prefix("e4 e5")}),
               OpeningsError);
}

TEST(CorpusLines, FrequenciesPerBucket) {
  std::vector<std::pair<std::string, std::string>> spec = {
      {"2001.01.01", "1. e4 e5 2. Nf3 Nc6 3. Bb5 a6"}, {"2002.01.01", "1. e4 e5 2. Nf3 Nc6 3. Bb5 Nf6"},
      {"2003.01.01", "1. Nf3 Nc6 2. e4 e5 3. Bc4"},    {"2004.01.01", "1. d4 d5"},
      {"2015.01.01", "1. e4 e5 2. Nf3 Nc6 3. Bb5 a6"}};
  const auto games = games_from(spec);
  auto pos = chess::start_position();
  for (const char* san : {"e4", "e5", "Nf3", "Nc6"}) pos = chess::apply_move(pos, chess::parse_san(pos, san));
  const auto s = corpus_line_distribution(games, pos, {parse_prefix("Bb5 a6"), parse_prefix("Bb5 Nf6")});
  ASSERT_EQ(s.keys, (std::vector<std::string>{"2000s", "2010s"}));
  EXPECT_NEAR(s.p[0][0], 1.0 / 3, 1e-15);  // the transposed game reaches the position too
  EXPECT_NEAR(s.p[0][1], 1.0 / 3, 1e-15);
  EXPECT_NEAR(s.p[0][2], 1.0 / 3, 1e-15);
  EXPECT_EQ(s.p[1][0], 1.0);
  for (const auto& row : s.p) EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);

  const auto nobody = corpus_line_distribution(games, chess::parse_fen("4k3/8/8/8/8/8/8/4K3 w - - 0 1"), {});
  EXPECT_TRUE(nobody.keys.empty());
  EXPECT_EQ(nobody.notes.size(), 1u);
}

TEST(Series, CsvAndSvg) {
  std::vector<std::pair<std::string, std::string>> spec = {{"1850.01.01", "1. e4"}, {"1950.01.01", "1. d4"}};
  const auto r = corpus_first_move_distribution(games_from(spec));
  const auto s = to_series(r.buckets);
  std::ostringstream out;
  write_series_header(out);
  write_series_rows(out, s);
  EXPECT_EQ(out.str(),
            "source,bucket_or_step,move_or_prefix,probability\n"
            "corpus,1850-1899,e4,1\n"
            "corpus,1950s,d4,1\n");
  EXPECT_NE(series_svg(s, "first moves").find("<svg"), std::string::npos);
}
