#pragma once

#include <array>
#include <charconv>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "azprobe/chess/types.hpp"

namespace azprobe::chess {

struct CastlingRights {
  bool white_king = false;
  bool white_queen = false;
  bool black_king = false;
  bool black_queen = false;

  bool king_side(Color c) const { return c == Color::white ? white_king : black_king; }
  bool queen_side(Color c) const { return c == Color::white ? white_queen : black_queen; }
  bool any() const { return white_king || white_queen || black_king || black_queen; }

  friend bool operator==(const CastlingRights&, const CastlingRights&) = default;
};

struct Position {
  std::array<std::optional<Piece>, 64> board{};
  Color side_to_move = Color::white;
  CastlingRights castling;
  std::optional<Square> en_passant;
  int halfmove_clock = 0;
  int fullmove_number = 1;

  const std::optional<Piece>& at(Square s) const { return board[static_cast<std::size_t>(s.index())]; }
  std::optional<Piece>& at(Square s) { return board[static_cast<std::size_t>(s.index())]; }

  bool has(Square s, Color c, PieceKind k) const {
    const auto& p = at(s);
    return p && p->color == c && p->kind == k;
  }

  std::optional<Square> king_square(Color c) const {
    for (int i = 0; i < 64; ++i) {
      const auto& p = board[static_cast<std::size_t>(i)];
      if (p && p->color == c && p->kind == PieceKind::king) return Square::from_index(i);
    }
    return std::nullopt;
  }

  int count(Color c, PieceKind k) const {
    int n = 0;
    for (const auto& p : board)
      if (p && p->color == c && p->kind == k) ++n;
    return n;
  }

  int piece_count() const {
    int n = 0;
    for (const auto& p : board)
      if (p) ++n;
    return n;
  }

  friend bool operator==(const Position&, const Position&) = default;
};

inline constexpr std::string_view start_fen = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

/// Distinct diagnostics for FEN rejection.
enum class FenErrorKind {
  field_count,
  placement,
  missing_king,
  extra_king,
  pawn_on_back_rank,
  side_to_move,
  castling,
  castling_inconsistent,
  en_passant,
  halfmove_clock,
  fullmove_number,
};

class FenError : public std::runtime_error {
 public:
  FenError(FenErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  FenErrorKind kind() const { return kind_; }

 private:
  FenErrorKind kind_;
};

namespace detail {

inline std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Checks every Position invariant. Throws FenError on the first violation.
inline void validate(const Position& pos) {
  for (Color c : {Color::white, Color::black}) {
    const int kings = pos.count(c, PieceKind::king);
    const char* name = c == Color::white ? "white" : "black";
    if (kings == 0) throw FenError(FenErrorKind::missing_king, std::string("missing ") + name + " king");
    if (kings > 1) throw FenError(FenErrorKind::extra_king, std::string("more than one ") + name + " king");
  }
  for (int f = 0; f < 8; ++f) {
    for (int r : {0, 7}) {
      const auto& p = pos.at(Square(f, r));
      if (p && p->kind == PieceKind::pawn)
        throw FenError(FenErrorKind::pawn_on_back_rank, "pawn on back rank at " + Square(f, r).name());
    }
  }
  const auto& cr = pos.castling;
  auto require = [&](bool flag, Square king, Square rook, Color c, const char* label) {
    if (flag && !(pos.has(king, c, PieceKind::king) && pos.has(rook, c, PieceKind::rook)))
      throw FenError(FenErrorKind::castling_inconsistent,
                     std::string("castling right ") + label + " without king and rook on home squares");
  };
  require(cr.white_king, Square(4, 0), Square(7, 0), Color::white, "K");
  require(cr.white_queen, Square(4, 0), Square(0, 0), Color::white, "Q");
  require(cr.black_king, Square(4, 7), Square(7, 7), Color::black, "k");
  require(cr.black_queen, Square(4, 7), Square(0, 7), Color::black, "q");
  if (pos.en_passant) {
    const int want = pos.side_to_move == Color::white ? 5 : 2;
    if (pos.en_passant->rank() != want)
      throw FenError(FenErrorKind::en_passant, "en-passant square " + pos.en_passant->name() + " on wrong rank");
  }
  if (pos.halfmove_clock < 0) throw FenError(FenErrorKind::halfmove_clock, "negative halfmove clock");
  if (pos.fullmove_number < 1) throw FenError(FenErrorKind::fullmove_number, "fullmove number below 1");
}

inline Position parse_fen(std::string_view text) {
  const auto fields = detail::split_ws(text);
  if (fields.size() != 6)
    throw FenError(FenErrorKind::field_count, "expected 6 FEN fields, got " + std::to_string(fields.size()));

  Position pos;
  int rank = 7;
  int file = 0;
  for (char c : fields[0]) {
    if (c == '/') {
      if (file != 8 || rank == 0) throw FenError(FenErrorKind::placement, "malformed rank in placement field");
      --rank;
      file = 0;
    } else if (c >= '1' && c <= '8') {
      file += c - '0';
      if (file > 8) throw FenError(FenErrorKind::placement, "rank overflows 8 files");
    } else if (auto p = piece_from_char(c)) {
      if (file > 7) throw FenError(FenErrorKind::placement, "rank overflows 8 files");
      pos.at(Square(file, rank)) = *p;
      ++file;
    } else {
      throw FenError(FenErrorKind::placement, std::string("bad placement character '") + c + "'");
    }
  }
  if (rank != 0 || file != 8) throw FenError(FenErrorKind::placement, "placement does not describe 8 ranks");

  if (fields[1] == "w")
    pos.side_to_move = Color::white;
  else if (fields[1] == "b")
    pos.side_to_move = Color::black;
  else
    throw FenError(FenErrorKind::side_to_move, "side to move must be 'w' or 'b'");

  if (fields[2] != "-") {
    for (char c : fields[2]) {
      bool* flag = nullptr;
      switch (c) {
        case 'K': flag = &pos.castling.white_king; break;
        case 'Q': flag = &pos.castling.white_queen; break;
        case 'k': flag = &pos.castling.black_king; break;
        case 'q': flag = &pos.castling.black_queen; break;
        default: throw FenError(FenErrorKind::castling, std::string("bad castling character '") + c + "'");
      }
      if (*flag) throw FenError(FenErrorKind::castling, "repeated castling character");
      *flag = true;
    }
  }

  if (fields[3] != "-") {
    auto sq = Square::parse(fields[3]);
    if (!sq) throw FenError(FenErrorKind::en_passant, "bad en-passant square '" + fields[3] + "'");
    if (sq->rank() != 2 && sq->rank() != 5)
      throw FenError(FenErrorKind::en_passant, "en-passant square must be on rank 3 or 6");
    pos.en_passant = sq;
  }

  auto half = detail::parse_int(fields[4]);
  if (!half || *half < 0) throw FenError(FenErrorKind::halfmove_clock, "halfmove clock must be an integer >= 0");
  pos.halfmove_clock = *half;
  auto full = detail::parse_int(fields[5]);
  if (!full || *full < 1) throw FenError(FenErrorKind::fullmove_number, "fullmove number must be an integer >= 1");
  pos.fullmove_number = *full;

  validate(pos);
  return pos;
}

inline Position start_position() { return parse_fen(start_fen); }

/// Placement, side, castling and en-passant fields only (the repetition key).
inline std::string fen_board_key(const Position& pos) {
  std::string out;
  for (int rank = 7; rank >= 0; --rank) {
    int empty = 0;
    for (int file = 0; file < 8; ++file) {
      const auto& p = pos.at(Square(file, rank));
      if (!p) {
        ++empty;
        continue;
      }
      if (empty) out += static_cast<char>('0' + empty);
      empty = 0;
      out += piece_char(*p);
    }
    if (empty) out += static_cast<char>('0' + empty);
    if (rank) out += '/';
  }
  out += pos.side_to_move == Color::white ? " w " : " b ";
  const auto& cr = pos.castling;
  if (!cr.any()) out += '-';
  if (cr.white_king) out += 'K';
  if (cr.white_queen) out += 'Q';
  if (cr.black_king) out += 'k';
  if (cr.black_queen) out += 'q';
  out += ' ';
  out += pos.en_passant ? pos.en_passant->name() : "-";
  return out;
}

inline std::string emit_fen(const Position& pos) {
  return fen_board_key(pos) + ' ' + std::to_string(pos.halfmove_clock) + ' ' + std::to_string(pos.fullmove_number);
}

}  // namespace azprobe::chess
