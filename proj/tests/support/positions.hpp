#pragma once

#include <random>
#include <string>
#include <vector>

#include "azprobe/chess.hpp"

namespace support {

using namespace azprobe::chess;

/// Positions from seeded random playouts. Captures are preferred half the time so
/// that middlegame and endgame structures (passers, forks, open files) show up.
inline std::vector<Position> playout_positions(int games, int plies, unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<Position> out;
  for (int g = 0; g < games; ++g) {
    Position p = start_position();
    for (int i = 0; i < plies; ++i) {
      auto moves = legal_moves(p);
      if (moves.empty()) break;
      std::vector<Move> captures;
      for (const auto& m : moves)
        if (p.at(m.to)) captures.push_back(m);
      const auto& pool = !captures.empty() && rng() % 2 ? captures : moves;
      p = apply_move(p, pool[rng() % pool.size()]);
      out.push_back(p);
    }
  }
  return out;
}

/// Random sparse placements: both kings plus a handful of other pieces, kept only
/// when legal. These produce forks and pins far more often than playouts.
inline std::vector<Position> scattered_positions(int count, unsigned seed) {
  std::mt19937 rng(seed);
  const std::string pieces = "QRRBBNNPPPPqrrbbnnpppp";
  std::vector<Position> out;
  while (static_cast<int>(out.size()) < count) {
    Position p;
    p.board.fill(std::nullopt);
    auto place = [&](Piece piece) {
      for (;;) {
        const int i = static_cast<int>(rng() % 64);
        const int rank = i / 8;
        if (p.board[static_cast<std::size_t>(i)]) continue;
        if (piece.kind == PieceKind::pawn && (rank == 0 || rank == 7)) continue;
        p.board[static_cast<std::size_t>(i)] = piece;
        return;
      }
    };
    place({PieceKind::king, Color::white});
    place({PieceKind::king, Color::black});
    const int extra = 4 + static_cast<int>(rng() % 10);
    for (int k = 0; k < extra; ++k) place(*piece_from_char(pieces[rng() % pieces.size()]));
    p.side_to_move = rng() % 2 ? Color::white : Color::black;
    if (in_check(p, !p.side_to_move)) continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace support
