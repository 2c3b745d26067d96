// Regenerates the shipped fixtures. Golden covariance values come from a direct two-pass
// computation; the opening golden file is maintained by hand.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "azprobe/chess.hpp"
#include "azprobe/concepts.hpp"
#include "azprobe/network.hpp"
#include "fixtures.hpp"

using namespace azprobe;
namespace fs = std::filesystem;

namespace {

struct DatedLine {
  const char* date;
  const char* moves;
};

// Hand-countable corpus for the opening golden file.
const std::vector<DatedLine> dated_games = {
    {"1783.05.??", "e4 e5 Nf3 Nc6 Bc4"},       {"1790.??.??", "e4 c5 Nf3"},
    {"1821.03.02", "e4 e5 f4 exf4"},           {"1834.??.??", "e4 e5 Nf3 Nc6 Bb5 a6"},
    {"1840.07.??", "e4 e6 d4 d5"},             {"1843.11.20", "d4 d5 c4 e6"},
    {"1851.06.27", "e4 e5 Nf3 Nc6 Bc4 Bc5"},   {"1858.??.??", "e4 c5 Nc3"},
    {"1866.04.??", "e4 e5 Nf3 d6"},            {"1873.08.14", "d4 d5 c4 dxc4"},
    {"1889.02.??", "c4 e5 Nc3 Nf6"},           {"1903.??.??", "e4 e5 Nf3 Nf6"},
    {"1907.09.01", "d4 Nf6 c4 e6 Nc3 Bb4"},    {"1908.??.??", "d4 d5 Nf3 Nf6"},
    {"1962.05.??", "c4 c5 Nc3 Nc6"},           {"1965.10.12", "Nf3 d5 g3 c5"},
    {"1969.??.??", "d4 Nf6 c4 g6 Nc3 Bg7"},    {"2012.01.20", "d4 Nf6 c4 e6 Nf3 d5"},
    {"2016.??.??", "d4 d5 c4 c6 Nf3 Nf6"},     {"2019.08.09", "e4 c5 Nf3 d6 d4 cxd4"},
};

std::string movetext(const chess::Position& start, const std::vector<chess::Move>& moves) {
  std::ostringstream out;
  auto pos = start;
  int col = 0;
  for (std::size_t i = 0; i < moves.size(); ++i) {
    std::string tok;
    if (pos.side_to_move == chess::Color::white) tok = std::to_string(pos.fullmove_number) + ". ";
    tok += chess::to_san(pos, moves[i]);
    if (col + static_cast<int>(tok.size()) > 78) {
      out << '\n';
      col = 0;
    } else if (col) {
      out << ' ';
      ++col;
    }
    out << tok;
    col += static_cast<int>(tok.size());
    pos = chess::apply_move(pos, moves[i]);
  }
  out << (col ? " " : "") << "*\n";
  return out.str();
}

std::string pgn_game(const std::string& event, const std::string& date, int round, const std::vector<chess::Move>& moves) {
  std::ostringstream out;
  out << "[Event \"" << event << "\"]\n[Site \"?\"]\n[Date \"" << date << "\"]\n[Round \"" << round
      << "\"]\n[White \"?\"]\n[Black \"?\"]\n[Result \"*\"]\n\n"
      << movetext(chess::start_position(), moves) << '\n';
  return out.str();
}

std::string dated_pgn() {
  std::string out;
  int round = 1;
  for (const auto& g : dated_games) {
    auto pos = chess::start_position();
    std::vector<chess::Move> moves;
    std::istringstream in(g.moves);
    std::string san;
    while (in >> san) {
      moves.push_back(chess::parse_san(pos, san));
      pos = chess::apply_move(pos, moves.back());
    }
    out += pgn_game("Opening fixture", g.date, round++, moves);
  }
  return out;
}

/// Seeded random playouts; captures are preferred half the time.
std::string random_pgn(int games, int plies, unsigned seed) {
  std::mt19937 rng(seed);
  std::string out;
  for (int g = 0; g < games; ++g) {
    auto pos = chess::start_position();
    std::vector<chess::Move> moves;
    for (int i = 0; i < plies; ++i) {
      const auto legal = chess::legal_moves(pos);
      if (legal.empty()) break;
      std::vector<chess::Move> captures;
      for (const auto& m : legal)
        if (pos.at(m.to)) captures.push_back(m);
      const auto& pool = !captures.empty() && rng() % 2 ? captures : legal;
      moves.push_back(pool[rng() % pool.size()]);
      pos = chess::apply_move(pos, moves.back());
    }
    out += pgn_game("Random playout", "????.??.??", g + 1, moves);
  }
  return out;
}

void write_file(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

/// cov(a, x) = mean((a - mean a)(x - mean x)) with both means taken first.
std::string two_pass_covariance_csv(const std::vector<concepts::PositionRecord>& rs, const network::Checkpoint& ck,
                                    int layer, int row, int col, int channel) {
  const auto params = ck.config.encoding();
  std::vector<double> a;
  std::vector<std::vector<float>> xs;
  for (const auto& r : rs) {
    const auto x = encoding::encode_input(std::span<const chess::Position>(r.history), params);
    a.push_back(network::forward(ck, x).second.at(layer, row, col, channel));
    xs.push_back(x.data);
  }
  const double n = static_cast<double>(rs.size());
  double ma = 0;
  for (double v : a) ma += v;
  ma /= n;
  std::ostringstream out;
  out << "plane,row,col,covariance\n";
  char buf[64];
  for (std::size_t j = 0; j < xs.front().size(); ++j) {
    double mx = 0;
    for (const auto& x : xs) mx += x[j];
    mx /= n;
    double c = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) c += (a[i] - ma) * (xs[i][j] - mx);
    std::snprintf(buf, sizeof buf, "%.17g", c / n);
    out << j / 64 << ',' << (j % 64) / 8 << ',' << j % 8 << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerate the shipped test fixtures"};
  std::string dir = "fixtures";
  app.add_option("--out", dir, "fixture directory");
  CLI11_PARSE(app, argc, argv);
  try {
    const fs::path out(dir);
    fs::create_directories(out);
    write_file(out / "games20.pgn", dated_pgn());
    write_file(out / "random_games.pgn", random_pgn(40, 80, 20240501));

    const auto cfg = fixtures::planted_config();
    network::save_checkpoint(fixtures::planted_checkpoint(cfg, 1000, false), out / "planted_t1000.azpw");
    network::save_checkpoint(fixtures::planted_checkpoint(cfg, 2000, true), out / "planted_t2000.azpw");

    // The covariance corpus is the first 600 unique positions of the random games, as the selftest config reads it.
    std::ifstream pgn(out / "random_games.pgn");
    auto records = concepts::dedup_by_fen(concepts::collect_positions(chess::parse_pgn(pgn).games, cfg.history));
    records.resize(600);
    const auto ck = network::load_checkpoint(out / "planted_t2000.azpw");
    write_file(out / "cov_golden.csv", two_pass_covariance_csv(records, ck, 1, 3, 4, 0));

    std::ostringstream manifest;
    for (const auto& name : fixtures::hashed_files) {
      std::ifstream in(out / name, std::ios::binary);
      const std::string bytes((std::istreambuf_iterator<char>(in)), {});
      manifest << fixtures::hash_hex(bytes) << "  " << name << '\n';
    }
    write_file(out / "MANIFEST", manifest.str());
    std::cout << "fixtures written to " << out.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
