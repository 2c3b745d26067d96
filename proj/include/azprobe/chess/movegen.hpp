#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "azprobe/chess/position.hpp"

namespace azprobe::chess {

class IllegalMove : public std::runtime_error {
 public:
  explicit IllegalMove(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

struct Dir {
  int df;
  int dr;
};

inline constexpr std::array<Dir, 8> knight_dirs = {{{1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}}};
inline constexpr std::array<Dir, 8> king_dirs = {{{0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}}};
inline constexpr std::array<Dir, 4> rook_dirs = {{{0, 1}, {1, 0}, {0, -1}, {-1, 0}}};
inline constexpr std::array<Dir, 4> bishop_dirs = {{{1, 1}, {1, -1}, {-1, -1}, {-1, 1}}};

constexpr int pawn_forward(Color c) { return c == Color::white ? 1 : -1; }

inline bool slides_along(PieceKind k, bool diagonal) {
  if (k == PieceKind::queen) return true;
  return diagonal ? k == PieceKind::bishop : k == PieceKind::rook;
}

}  // namespace detail

/// Squares attacked by the piece standing on `from` (pseudo-attacks; pins ignored).
inline std::vector<Square> attacked_by_piece(const Position& pos, Square from) {
  std::vector<Square> out;
  const auto& p = pos.at(from);
  if (!p) return out;
  auto steps = [&](auto const& dirs) {
    for (auto d : dirs)
      if (auto s = from.offset(d.df, d.dr)) out.push_back(*s);
  };
  auto rays = [&](auto const& dirs) {
    for (auto d : dirs) {
      for (auto s = from.offset(d.df, d.dr); s; s = s->offset(d.df, d.dr)) {
        out.push_back(*s);
        if (pos.at(*s)) break;
      }
    }
  };
  switch (p->kind) {
    case PieceKind::pawn: {
      const int fwd = detail::pawn_forward(p->color);
      for (int df : {-1, 1})
        if (auto s = from.offset(df, fwd)) out.push_back(*s);
      break;
    }
    case PieceKind::knight: steps(detail::knight_dirs); break;
    case PieceKind::king: steps(detail::king_dirs); break;
    case PieceKind::bishop: rays(detail::bishop_dirs); break;
    case PieceKind::rook: rays(detail::rook_dirs); break;
    case PieceKind::queen:
      rays(detail::bishop_dirs);
      rays(detail::rook_dirs);
      break;
  }
  return out;
}

/// Squares holding a piece of color `by` that attacks `sq`. Result is in ascending square order.
inline std::vector<Square> attacks_to(const Position& pos, Square sq, Color by) {
  std::vector<Square> out;
  const int back = -detail::pawn_forward(by);
  for (int df : {-1, 1})
    if (auto s = sq.offset(df, back); s && pos.has(*s, by, PieceKind::pawn)) out.push_back(*s);
  for (auto d : detail::knight_dirs)
    if (auto s = sq.offset(d.df, d.dr); s && pos.has(*s, by, PieceKind::knight)) out.push_back(*s);
  for (auto d : detail::king_dirs)
    if (auto s = sq.offset(d.df, d.dr); s && pos.has(*s, by, PieceKind::king)) out.push_back(*s);
  auto scan = [&](auto const& dirs, bool diagonal) {
    for (auto d : dirs) {
      for (auto s = sq.offset(d.df, d.dr); s; s = s->offset(d.df, d.dr)) {
        const auto& p = pos.at(*s);
        if (!p) continue;
        if (p->color == by && detail::slides_along(p->kind, diagonal)) out.push_back(*s);
        break;
      }
    }
  };
  scan(detail::rook_dirs, false);
  scan(detail::bishop_dirs, true);
  std::sort(out.begin(), out.end());
  return out;
}

inline bool is_attacked(const Position& pos, Square sq, Color by) {
  const int back = -detail::pawn_forward(by);
  for (int df : {-1, 1})
    if (auto s = sq.offset(df, back); s && pos.has(*s, by, PieceKind::pawn)) return true;
  for (auto d : detail::knight_dirs)
    if (auto s = sq.offset(d.df, d.dr); s && pos.has(*s, by, PieceKind::knight)) return true;
  for (auto d : detail::king_dirs)
    if (auto s = sq.offset(d.df, d.dr); s && pos.has(*s, by, PieceKind::king)) return true;
  auto scan = [&](auto const& dirs, bool diagonal) {
    for (auto d : dirs) {
      for (auto s = sq.offset(d.df, d.dr); s; s = s->offset(d.df, d.dr)) {
        const auto& p = pos.at(*s);
        if (!p) continue;
        if (p->color == by && detail::slides_along(p->kind, diagonal)) return true;
        break;
      }
    }
    return false;
  };
  return scan(detail::rook_dirs, false) || scan(detail::bishop_dirs, true);
}

inline bool in_check(const Position& pos, Color side) {
  const auto k = pos.king_square(side);
  return k && is_attacked(pos, *k, !side);
}

inline bool in_check(const Position& pos) { return in_check(pos, pos.side_to_move); }

/// Squares of `side` pieces absolutely pinned to their own king, ascending.
inline std::vector<Square> pinned_squares(const Position& pos, Color side) {
  std::vector<Square> out;
  const auto king = pos.king_square(side);
  if (!king) return out;
  auto scan = [&](auto const& dirs, bool diagonal) {
    for (auto d : dirs) {
      std::optional<Square> own;
      for (auto s = king->offset(d.df, d.dr); s; s = s->offset(d.df, d.dr)) {
        const auto& p = pos.at(*s);
        if (!p) continue;
        if (p->color == side) {
          if (own) break;
          own = s;
          continue;
        }
        if (own && detail::slides_along(p->kind, diagonal)) out.push_back(*own);
        break;
      }
    }
  };
  scan(detail::rook_dirs, false);
  scan(detail::bishop_dirs, true);
  std::sort(out.begin(), out.end());
  return out;
}

/// Applies a move without legality checks. The move must at least be pseudo-legal.
inline Position apply_move(const Position& pos, const Move& m) {
  Position next = pos;
  const Piece mover = *pos.at(m.from);
  const Color us = mover.color;
  const bool capture = pos.at(m.to).has_value();
  bool ep_capture = false;

  next.at(m.from).reset();
  if (mover.kind == PieceKind::pawn && pos.en_passant && m.to == *pos.en_passant && !capture) {
    ep_capture = true;
    next.at(Square(m.to.file(), m.from.rank())).reset();
  }
  next.at(m.to) = m.promotion ? Piece{*m.promotion, us} : mover;

  if (mover.kind == PieceKind::king && std::abs(m.to.file() - m.from.file()) == 2) {
    const int rank = m.from.rank();
    if (m.to.file() == 6) {
      next.at(Square(7, rank)).reset();
      next.at(Square(5, rank)) = Piece{PieceKind::rook, us};
    } else {
      next.at(Square(0, rank)).reset();
      next.at(Square(3, rank)) = Piece{PieceKind::rook, us};
    }
  }

  auto clear_for = [&](Square s) {
    if (s == Square(4, 0)) next.castling.white_king = next.castling.white_queen = false;
    if (s == Square(4, 7)) next.castling.black_king = next.castling.black_queen = false;
    if (s == Square(7, 0)) next.castling.white_king = false;
    if (s == Square(0, 0)) next.castling.white_queen = false;
    if (s == Square(7, 7)) next.castling.black_king = false;
    if (s == Square(0, 7)) next.castling.black_queen = false;
  };
  clear_for(m.from);
  clear_for(m.to);

  next.en_passant.reset();
  if (mover.kind == PieceKind::pawn && std::abs(m.to.rank() - m.from.rank()) == 2)
    next.en_passant = Square(m.from.file(), (m.from.rank() + m.to.rank()) / 2);

  next.halfmove_clock = (mover.kind == PieceKind::pawn || capture || ep_capture) ? 0 : pos.halfmove_clock + 1;
  if (us == Color::black) ++next.fullmove_number;
  next.side_to_move = !us;
  return next;
}

/// Moves for the side to move that obey piece geometry, ignoring own-king safety.
inline std::vector<Move> pseudo_legal_moves(const Position& pos) {
  std::vector<Move> out;
  out.reserve(64);
  const Color us = pos.side_to_move;
  auto add_target = [&](Square from, Square to) {
    const auto& t = pos.at(to);
    if (t && t->color == us) return false;
    out.push_back({from, to, std::nullopt});
    return !t.has_value();
  };
  auto add_pawn = [&](Square from, Square to) {
    if (to.rank() == 0 || to.rank() == 7) {
      for (auto k : {PieceKind::queen, PieceKind::rook, PieceKind::bishop, PieceKind::knight})
        out.push_back({from, to, k});
    } else {
      out.push_back({from, to, std::nullopt});
    }
  };

  for (int i = 0; i < 64; ++i) {
    const auto& p = pos.board[static_cast<std::size_t>(i)];
    if (!p || p->color != us) continue;
    const Square from = Square::from_index(i);
    switch (p->kind) {
      case PieceKind::pawn: {
        const int fwd = detail::pawn_forward(us);
        if (auto one = from.offset(0, fwd); one && !pos.at(*one)) {
          add_pawn(from, *one);
          const int home = us == Color::white ? 1 : 6;
          if (from.rank() == home)
            if (auto two = from.offset(0, 2 * fwd); two && !pos.at(*two)) out.push_back({from, *two, std::nullopt});
        }
        for (int df : {-1, 1}) {
          auto to = from.offset(df, fwd);
          if (!to) continue;
          const auto& t = pos.at(*to);
          if (t && t->color != us)
            add_pawn(from, *to);
          else if (!t && pos.en_passant && *to == *pos.en_passant)
            out.push_back({from, *to, std::nullopt});
        }
        break;
      }
      case PieceKind::knight:
        for (auto d : detail::knight_dirs)
          if (auto to = from.offset(d.df, d.dr)) add_target(from, *to);
        break;
      case PieceKind::king:
        for (auto d : detail::king_dirs)
          if (auto to = from.offset(d.df, d.dr)) add_target(from, *to);
        break;
      case PieceKind::bishop:
      case PieceKind::rook:
      case PieceKind::queen: {
        auto rays = [&](auto const& dirs) {
          for (auto d : dirs)
            for (auto to = from.offset(d.df, d.dr); to && add_target(from, *to); to = to->offset(d.df, d.dr)) {
            }
        };
        if (p->kind != PieceKind::rook) rays(detail::bishop_dirs);
        if (p->kind != PieceKind::bishop) rays(detail::rook_dirs);
        break;
      }
    }
  }

  // Castling: king on its home square, path empty, king not passing through attack.
  const int rank = us == Color::white ? 0 : 7;
  const Square king_home(4, rank);
  if (pos.has(king_home, us, PieceKind::king) && (pos.castling.king_side(us) || pos.castling.queen_side(us)) &&
      !is_attacked(pos, king_home, !us)) {
    if (pos.castling.king_side(us) && pos.has(Square(7, rank), us, PieceKind::rook) && !pos.at(Square(5, rank)) &&
        !pos.at(Square(6, rank)) && !is_attacked(pos, Square(5, rank), !us) && !is_attacked(pos, Square(6, rank), !us))
      out.push_back({king_home, Square(6, rank), std::nullopt});
    if (pos.castling.queen_side(us) && pos.has(Square(0, rank), us, PieceKind::rook) && !pos.at(Square(1, rank)) &&
        !pos.at(Square(2, rank)) && !pos.at(Square(3, rank)) && !is_attacked(pos, Square(3, rank), !us) &&
        !is_attacked(pos, Square(2, rank), !us))
      out.push_back({king_home, Square(2, rank), std::nullopt});
  }
  return out;
}

inline std::vector<Move> legal_moves(const Position& pos) {
  auto moves = pseudo_legal_moves(pos);
  const Color us = pos.side_to_move;
  std::erase_if(moves, [&](const Move& m) { return in_check(apply_move(pos, m), us); });
  return moves;
}

inline bool is_legal(const Position& pos, const Move& m) {
  const auto moves = legal_moves(pos);
  return std::find(moves.begin(), moves.end(), m) != moves.end();
}

/// Plays a legal move; throws IllegalMove otherwise.
inline Position make_move(const Position& pos, const Move& m) {
  if (!pos.at(m.from) || !is_legal(pos, m)) throw IllegalMove("illegal move " + m.uci() + " in " + emit_fen(pos));
  return apply_move(pos, m);
}

/// Hands the turn to the other side; en-passant rights lapse.
inline Position null_move(const Position& pos) {
  Position next = pos;
  next.side_to_move = !pos.side_to_move;
  next.en_passant.reset();
  return next;
}

inline bool is_checkmate(const Position& pos) { return in_check(pos) && legal_moves(pos).empty(); }
inline bool is_stalemate(const Position& pos) { return !in_check(pos) && legal_moves(pos).empty(); }

inline std::uint64_t perft(const Position& pos, int depth) {
  if (depth <= 0) return 1;
  const auto moves = legal_moves(pos);
  if (depth == 1) return moves.size();
  std::uint64_t n = 0;
  for (const auto& m : moves) n += perft(apply_move(pos, m), depth - 1);
  return n;
}

/// Chess-board mirror: ranks reversed, colors swapped, same color to move.
/// The side to move ends up owning what used to be the opponent's army.
inline Position color_mirror(const Position& pos) {
  Position out;
  for (int i = 0; i < 64; ++i) {
    const auto& p = pos.board[static_cast<std::size_t>(i)];
    if (p) out.at(Square::from_index(i).flip_vertical()) = Piece{p->kind, !p->color};
  }
  out.side_to_move = pos.side_to_move;
  out.castling = {pos.castling.black_king, pos.castling.black_queen, pos.castling.white_king, pos.castling.white_queen};
  out.halfmove_clock = pos.halfmove_clock;
  out.fullmove_number = pos.fullmove_number;
  return out;
}

/// Network-frame mirror: board rotated 180 degrees, colors swapped, side to move swapped.
/// Castling flags follow their owners; en-passant squares rotate with the board.
inline Position color_rotate(const Position& pos) {
  Position out;
  for (int i = 0; i < 64; ++i) {
    const auto& p = pos.board[static_cast<std::size_t>(i)];
    if (p) out.at(Square::from_index(i).rotate()) = Piece{p->kind, !p->color};
  }
  out.side_to_move = !pos.side_to_move;
  out.castling = {pos.castling.black_king, pos.castling.black_queen, pos.castling.white_king, pos.castling.white_queen};
  if (pos.en_passant) out.en_passant = pos.en_passant->rotate();
  out.halfmove_clock = pos.halfmove_clock;
  out.fullmove_number = pos.fullmove_number;
  return out;
}

}  // namespace azprobe::chess
