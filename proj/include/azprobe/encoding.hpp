#pragma once

// Network input planes and the 8x8x73 policy index space.
//
// Tensor layout is plane-major: value(plane, row, col) lives at
// data[(plane * 8 + row) * 8 + col]. Rows and columns are in the mover's frame:
// for Black to move the board is rotated 180 degrees, so row 0 is always the
// mover's back rank and col 0 the file on the mover's left.
//
// Plane map for history length h (P = 14h + 7 planes):
//   slice k = 0..h-1 (k plies before the current position), base 14k:
//     +0..5   mover's K, Q, R, B, N, P
//     +6..11  opponent's K, Q, R, B, N, P
//     +12     position has occurred >= 2 times so far
//     +13     position has occurred >= 3 times so far
//   14h       side to move (1 when Black is to move)
//   14h+1..4  mover king side, mover queen side, opponent king side, opponent queen side castling
//   14h+5     halfmove clock / halfmove_divisor (capped at 1)
//   14h+6     fullmove number / fullmove_divisor (capped at 1)

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "azprobe/chess.hpp"

namespace azprobe::encoding {

using chess::Color;
using chess::Move;
using chess::PieceKind;
using chess::Position;
using chess::Square;

inline constexpr int board_cells = 64;
inline constexpr int policy_planes = 73;
inline constexpr int policy_size = policy_planes * board_cells;

struct EncodingParams {
  int history = 8;
  float halfmove_divisor = 100.0f;
  float fullmove_divisor = 512.0f;

  int planes() const { return 14 * history + 7; }
  int side_plane() const { return 14 * history; }
  int castling_plane() const { return 14 * history + 1; }
  int halfmove_plane() const { return 14 * history + 5; }
  int fullmove_plane() const { return 14 * history + 6; }
};

struct InputTensor {
  int history = 1;
  std::vector<float> data;

  int planes() const { return 14 * history + 7; }
  float at(int plane, int row, int col) const { return data[static_cast<std::size_t>((plane * 8 + row) * 8 + col)]; }
  float& at(int plane, int row, int col) { return data[static_cast<std::size_t>((plane * 8 + row) * 8 + col)]; }
};

/// (row, col) of a board square in the frame of `mover`.
struct Cell {
  int row;
  int col;
  friend bool operator==(Cell, Cell) = default;
};

inline Cell oriented(Square s, Color mover) {
  return mover == Color::white ? Cell{s.rank(), s.file()} : Cell{7 - s.rank(), 7 - s.file()};
}

inline Square from_oriented(Cell c, Color mover) {
  return mover == Color::white ? Square(c.col, c.row) : Square(7 - c.col, 7 - c.row);
}

/// Piece plane offset within a slice: K, Q, R, B, N, P order.
inline int piece_plane(PieceKind k) {
  switch (k) {
    case PieceKind::king: return 0;
    case PieceKind::queen: return 1;
    case PieceKind::rook: return 2;
    case PieceKind::bishop: return 3;
    case PieceKind::knight: return 4;
    case PieceKind::pawn: return 5;
  }
  return 0;
}

/// Encodes the last position of `history` (oldest first) with up to h-1 predecessors.
inline InputTensor encode_input(std::span<const Position> history, const EncodingParams& params = {}) {
  if (params.history < 1) throw std::invalid_argument("history length h must be >= 1");
  if (history.empty()) throw std::invalid_argument("history must contain at least one position");

  InputTensor t;
  t.history = params.history;
  t.data.assign(static_cast<std::size_t>(params.planes() * board_cells), 0.0f);

  const Position& current = history.back();
  const Color mover = current.side_to_move;

  std::unordered_map<std::string, int> seen;
  std::vector<int> occurrences(history.size());
  for (std::size_t i = 0; i < history.size(); ++i) occurrences[i] = ++seen[chess::fen_board_key(history[i])];

  const int n = static_cast<int>(history.size());
  for (int k = 0; k < params.history && k < n; ++k) {
    const auto idx = static_cast<std::size_t>(n - 1 - k);
    const Position& p = history[idx];
    const int base = 14 * k;
    for (int i = 0; i < 64; ++i) {
      const auto& piece = p.board[static_cast<std::size_t>(i)];
      if (!piece) continue;
      const auto c = oriented(Square::from_index(i), mover);
      const int plane = base + piece_plane(piece->kind) + (piece->color == mover ? 0 : 6);
      t.at(plane, c.row, c.col) = 1.0f;
    }
    const float rep2 = occurrences[idx] >= 2 ? 1.0f : 0.0f;
    const float rep3 = occurrences[idx] >= 3 ? 1.0f : 0.0f;
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        t.at(base + 12, r, c) = rep2;
        t.at(base + 13, r, c) = rep3;
      }
  }

  const auto& cr = current.castling;
  const float constants[6] = {
      mover == Color::black ? 1.0f : 0.0f,
      cr.king_side(mover) ? 1.0f : 0.0f,
      cr.queen_side(mover) ? 1.0f : 0.0f,
      cr.king_side(!mover) ? 1.0f : 0.0f,
      cr.queen_side(!mover) ? 1.0f : 0.0f,
      std::min(1.0f, static_cast<float>(current.halfmove_clock) / params.halfmove_divisor),
  };
  const float fullmove = std::min(1.0f, static_cast<float>(current.fullmove_number) / params.fullmove_divisor);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      for (int j = 0; j < 6; ++j) t.at(params.side_plane() + j, r, c) = constants[j];
      t.at(params.fullmove_plane(), r, c) = fullmove;
    }
  return t;
}

inline InputTensor encode_input(const Position& pos, const EncodingParams& params = {}) {
  return encode_input(std::span<const Position>(&pos, 1), params);
}

struct PolicyIndex {
  int row = 0;
  int col = 0;
  int plane = 0;

  /// Offset into a plane-major 73x8x8 logit tensor.
  int flat() const { return (plane * 8 + row) * 8 + col; }
  static PolicyIndex from_flat(int i) { return {(i / 8) % 8, i % 8, i / 64}; }
  friend bool operator==(PolicyIndex, PolicyIndex) = default;
};

namespace detail {

// Mover-frame (drow, dcol) unit steps: N, NE, E, SE, S, SW, W, NW.
inline constexpr int queen_dirs[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
// NNE, ENE, ESE, SSE, SSW, WSW, WNW, NNW.
inline constexpr int knight_jumps[8][2] = {{2, 1}, {1, 2}, {-1, 2}, {-2, 1}, {-2, -1}, {-1, -2}, {1, -2}, {2, -1}};

inline int underpromotion_slot(PieceKind k) {
  switch (k) {
    case PieceKind::knight: return 0;
    case PieceKind::bishop: return 1;
    case PieceKind::rook: return 2;
    default: return -1;
  }
}

}  // namespace detail

/// Policy index for a move given only geometry; no legality check.
inline PolicyIndex policy_index_of(Color mover, const Move& m) {
  const auto from = oriented(m.from, mover);
  const auto to = oriented(m.to, mover);
  const int dr = to.row - from.row;
  const int dc = to.col - from.col;

  if (m.promotion && *m.promotion != PieceKind::queen) {
    const int slot = detail::underpromotion_slot(*m.promotion);
    if (slot < 0 || dr != 1 || dc < -1 || dc > 1) throw std::invalid_argument("not an underpromotion: " + m.uci());
    return {from.row, from.col, 64 + (dc + 1) * 3 + slot};
  }
  for (int k = 0; k < 8; ++k)
    if (detail::knight_jumps[k][0] == dr && detail::knight_jumps[k][1] == dc) return {from.row, from.col, 56 + k};

  const int dist = std::max(std::abs(dr), std::abs(dc));
  if (dist < 1 || dist > 7 || (dr != 0 && dc != 0 && std::abs(dr) != std::abs(dc)))
    throw std::invalid_argument("move has no policy plane: " + m.uci());
  const int ur = dr / dist;
  const int uc = dc / dist;
  for (int d = 0; d < 8; ++d)
    if (detail::queen_dirs[d][0] == ur && detail::queen_dirs[d][1] == uc) return {from.row, from.col, d * 7 + dist - 1};
  throw std::logic_error("unreachable direction");
}

inline PolicyIndex move_to_policy_index(const Position& pos, const Move& m) {
  if (!chess::is_legal(pos, m)) throw chess::IllegalMove("illegal move " + m.uci() + " in " + chess::emit_fen(pos));
  return policy_index_of(pos.side_to_move, m);
}

/// Decodes an index to the legal move it denotes, if any. A pawn reaching the last
/// rank through a queen-like plane is read as a queen promotion.
inline std::optional<Move> policy_index_to_move(const Position& pos, PolicyIndex idx) {
  if (idx.row < 0 || idx.row > 7 || idx.col < 0 || idx.col > 7 || idx.plane < 0 || idx.plane >= policy_planes)
    return std::nullopt;
  const Color mover = pos.side_to_move;
  int dr = 0, dc = 0;
  std::optional<PieceKind> promo;
  if (idx.plane < 56) {
    const int d = idx.plane / 7;
    const int dist = idx.plane % 7 + 1;
    dr = detail::queen_dirs[d][0] * dist;
    dc = detail::queen_dirs[d][1] * dist;
  } else if (idx.plane < 64) {
    dr = detail::knight_jumps[idx.plane - 56][0];
    dc = detail::knight_jumps[idx.plane - 56][1];
  } else {
    const int k = idx.plane - 64;
    dr = 1;
    dc = k / 3 - 1;
    constexpr PieceKind kinds[3] = {PieceKind::knight, PieceKind::bishop, PieceKind::rook};
    promo = kinds[k % 3];
  }
  const int tr = idx.row + dr;
  const int tc = idx.col + dc;
  if (tr < 0 || tr > 7 || tc < 0 || tc > 7) return std::nullopt;
  const Square from = from_oriented({idx.row, idx.col}, mover);
  const Square to = from_oriented({tr, tc}, mover);
  const auto& piece = pos.at(from);
  if (!piece || piece->color != mover) return std::nullopt;
  if (!promo && piece->kind == PieceKind::pawn && tr == 7) promo = PieceKind::queen;
  const Move m{from, to, promo};
  if (!chess::is_legal(pos, m)) return std::nullopt;
  return m;
}

}  // namespace azprobe::encoding
