#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace azprobe::chess {

enum class Color : std::uint8_t { white = 0, black = 1 };

constexpr Color operator!(Color c) { return c == Color::white ? Color::black : Color::white; }
constexpr int index(Color c) { return static_cast<int>(c); }

enum class PieceKind : std::uint8_t { pawn = 0, knight, bishop, rook, queen, king };

constexpr int index(PieceKind k) { return static_cast<int>(k); }

inline constexpr std::array<PieceKind, 6> all_piece_kinds = {
    PieceKind::pawn, PieceKind::knight, PieceKind::bishop,
    PieceKind::rook, PieceKind::queen,  PieceKind::king};

struct Piece {
  PieceKind kind;
  Color color;
  friend constexpr bool operator==(Piece, Piece) = default;
};

/// Board square, 0..63 with a1 = 0, b1 = 1, ..., h8 = 63.
class Square {
 public:
  constexpr Square() = default;
  constexpr Square(int file, int rank) : idx_(static_cast<std::uint8_t>(rank * 8 + file)) {
    if (file < 0 || file > 7 || rank < 0 || rank > 7) throw std::out_of_range("square coordinates out of range");
  }
  static constexpr Square from_index(int i) {
    if (i < 0 || i > 63) throw std::out_of_range("square index out of range");
    Square s;
    s.idx_ = static_cast<std::uint8_t>(i);
    return s;
  }
  /// Parses "e4"-style names; nullopt on anything else.
  static std::optional<Square> parse(std::string_view name) {
    if (name.size() != 2) return std::nullopt;
    const int f = name[0] - 'a';
    const int r = name[1] - '1';
    if (f < 0 || f > 7 || r < 0 || r > 7) return std::nullopt;
    return Square(f, r);
  }

  constexpr int file() const { return idx_ & 7; }
  constexpr int rank() const { return idx_ >> 3; }
  constexpr int index() const { return idx_; }

  /// Offset by (df, dr); nullopt when it leaves the board.
  constexpr std::optional<Square> offset(int df, int dr) const {
    const int f = file() + df;
    const int r = rank() + dr;
    if (f < 0 || f > 7 || r < 0 || r > 7) return std::nullopt;
    return Square(f, r);
  }

  /// Mirror across the horizontal midline (a1 <-> a8).
  constexpr Square flip_vertical() const { return Square(file(), 7 - rank()); }
  /// 180 degree rotation (a1 <-> h8).
  constexpr Square rotate() const { return Square(7 - file(), 7 - rank()); }
  constexpr bool is_light() const { return (file() + rank()) % 2 == 1; }

  std::string name() const { return {static_cast<char>('a' + file()), static_cast<char>('1' + rank())}; }

  friend constexpr bool operator==(Square, Square) = default;
  friend constexpr auto operator<=>(Square, Square) = default;

 private:
  std::uint8_t idx_ = 0;
};

struct Move {
  Square from;
  Square to;
  std::optional<PieceKind> promotion;

  friend bool operator==(const Move&, const Move&) = default;

  /// Long algebraic form, e.g. "e2e4", "a7a8q".
  std::string uci() const {
    std::string s = from.name() + to.name();
    if (promotion) s += "pnbrqk"[index(*promotion)];
    return s;
  }
};

inline char piece_char(Piece p) {
  constexpr std::string_view chars = "pnbrqk";
  const char c = chars[static_cast<std::size_t>(index(p.kind))];
  return p.color == Color::white ? static_cast<char>(c - 'a' + 'A') : c;
}

inline std::optional<Piece> piece_from_char(char c) {
  constexpr std::string_view chars = "pnbrqk";
  const bool upper = c >= 'A' && c <= 'Z';
  const char lower = upper ? static_cast<char>(c - 'A' + 'a') : c;
  const auto pos = chars.find(lower);
  if (pos == std::string_view::npos) return std::nullopt;
  return Piece{static_cast<PieceKind>(pos), upper ? Color::white : Color::black};
}

}  // namespace azprobe::chess
