#pragma once

// Native concept functions. Every side-dependent concept is computed for a
// given color and exposed as `<base>_mine` (side to move), `<base>_opponent`
// and, for counts, `<base>_diff` = mine - opponent.

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "azprobe/chess.hpp"

namespace azprobe::concepts {

using chess::Color;
using chess::Move;
using chess::PieceKind;
using chess::Position;
using chess::Square;

enum class ConceptKind { binary, integer, continuous };
enum class SideVariant { mine, opponent, diff, none };
enum class ConceptSource { native, external };

struct ConceptSpec {
  std::string name;
  ConceptKind kind = ConceptKind::continuous;
  SideVariant side_variant = SideVariant::none;
  ConceptSource source = ConceptSource::external;
  std::string base;  // name without the side suffix

  friend bool operator==(const ConceptSpec&, const ConceptSpec&) = default;
};

/// The moves around a position in the game it came from.
struct GameContext {
  std::optional<Move> next_move;   // played by the side to move
  std::optional<Move> move_after;  // the opponent's reply
};

class UnknownConcept : public std::invalid_argument {
 public:
  explicit UnknownConcept(const std::string& name) : std::invalid_argument("unknown concept '" + name + "'") {}
};

class MissingContext : public std::invalid_argument {
 public:
  explicit MissingContext(const std::string& name)
      : std::invalid_argument("concept '" + name + "' needs game context (next moves)") {}
};

namespace detail {

inline int piece_value(PieceKind k) {
  switch (k) {
    case PieceKind::pawn: return 1;
    case PieceKind::knight:
    case PieceKind::bishop: return 3;
    case PieceKind::rook: return 5;
    case PieceKind::queen: return 9;
    case PieceKind::king: return 0;
  }
  return 0;
}

inline bool contains(const std::vector<Square>& v, Square s) { return std::find(v.begin(), v.end(), s) != v.end(); }

/// Legal moves for `side`; if it is not that side's turn the turn is passed first.
inline std::vector<Move> moves_for(const Position& pos, Color side) {
  return side == pos.side_to_move ? chess::legal_moves(pos) : chess::legal_moves(chess::null_move(pos));
}

/// Targets that count for a fork by the given attacker, following the table text per piece.
inline bool fork_target(PieceKind attacker, PieceKind target) {
  switch (attacker) {
    case PieceKind::pawn: return target != PieceKind::pawn;
    case PieceKind::knight:
    case PieceKind::bishop: return target == PieceKind::rook || target == PieceKind::queen || target == PieceKind::king;
    case PieceKind::rook: return target == PieceKind::queen || target == PieceKind::king;
    default: return false;
  }
}

inline bool has_fork(const Position& pos, Color side, PieceKind attacker) {
  const auto pinned = chess::pinned_squares(pos, side);
  for (int i = 0; i < 64; ++i) {
    const Square s = Square::from_index(i);
    if (!pos.has(s, side, attacker) || contains(pinned, s)) continue;
    int targets = 0;
    for (auto t : chess::attacked_by_piece(pos, s)) {
      const auto& p = pos.at(t);
      if (p && p->color != side && fork_target(attacker, p->kind)) ++targets;
    }
    if (targets >= 2) return true;
  }
  return false;
}

inline bool has_pinned(const Position& pos, Color side, PieceKind kind) {
  for (auto s : chess::pinned_squares(pos, side))
    if (pos.at(s)->kind == kind) return true;
  return false;
}

inline int material(const Position& pos, Color side) {
  int m = 0;
  for (const auto& p : pos.board)
    if (p && p->color == side) m += piece_value(p->kind);
  return m;
}

inline int num_pieces(const Position& pos, Color side) {
  int n = 0;
  for (const auto& p : pos.board)
    if (p && p->color == side) ++n;
  return n;
}

inline bool has_bishop_pair(const Position& pos, Color side) {
  bool light = false, dark = false;
  for (int i = 0; i < 64; ++i) {
    const Square s = Square::from_index(i);
    if (!pos.has(s, side, PieceKind::bishop)) continue;
    (s.is_light() ? light : dark) = true;
  }
  return light && dark;
}

inline bool has_connected_rooks(const Position& pos, Color side) {
  for (int i = 0; i < 64; ++i) {
    const Square s = Square::from_index(i);
    if (!pos.has(s, side, PieceKind::rook)) continue;
    for (auto [df, dr] : {std::pair{1, 0}, std::pair{0, 1}}) {
      for (auto t = s.offset(df, dr); t; t = t->offset(df, dr)) {
        const auto& p = pos.at(*t);
        if (!p) continue;
        if (p->color == side && p->kind == PieceKind::rook) return true;
        break;
      }
    }
  }
  return false;
}

inline bool file_is_open(const Position& pos, int file) {
  for (int r = 0; r < 8; ++r) {
    const auto& p = pos.at(Square(file, r));
    if (p && p->kind == PieceKind::pawn) return false;
  }
  return true;
}

inline bool has_heavy_on_file(const Position& pos, int file, Color side) {
  for (int r = 0; r < 8; ++r) {
    const auto& p = pos.at(Square(file, r));
    if (p && p->color == side && (p->kind == PieceKind::rook || p->kind == PieceKind::queen)) return true;
  }
  return false;
}

/// An open file held by the side's rook or queen with no enemy rook or queen on it.
inline bool has_control_of_open_file(const Position& pos, Color side) {
  for (int f = 0; f < 8; ++f)
    if (file_is_open(pos, f) && has_heavy_on_file(pos, f, side) && !has_heavy_on_file(pos, f, !side)) return true;
  return false;
}

inline bool has_contested_open_file(const Position& pos) {
  for (int f = 0; f < 8; ++f)
    if (file_is_open(pos, f) && has_heavy_on_file(pos, f, Color::white) && has_heavy_on_file(pos, f, Color::black))
      return true;
  return false;
}

inline bool has_check_move(const Position& pos, Color side) {
  const Position base = side == pos.side_to_move ? pos : chess::null_move(pos);
  for (const auto& m : chess::legal_moves(base))
    if (chess::in_check(chess::apply_move(base, m), !side)) return true;
  return false;
}

inline bool can_capture_queen(const Position& pos, Color side) {
  for (const auto& m : moves_for(pos, side)) {
    const auto& p = pos.at(m.to);
    if (p && p->color != side && p->kind == PieceKind::queen) return true;
  }
  return false;
}

inline int num_king_attacked_squares(const Position& pos, Color side) {
  const auto king = pos.king_square(!side);
  if (!king) return 0;
  int n = 0;
  for (int df = -1; df <= 1; ++df)
    for (int dr = -1; dr <= 1; ++dr) {
      if (!df && !dr) continue;
      if (auto s = king->offset(df, dr); s && chess::is_attacked(pos, *s, side)) ++n;
    }
  return n;
}

/// Squares named from the side's own point of view, as if it played White.
inline Square side_square(Square named, Color side) { return side == Color::white ? named : named.flip_vertical(); }

inline bool capture_possible_on(const Position& pos, Color side, Square named) {
  const Square target = side_square(named, side);
  const auto& victim = pos.at(target);
  if (!victim || victim->color == side) return false;
  for (const auto& m : moves_for(pos, side))
    if (m.to == target) return true;
  return false;
}

// ---- pawn structure -------------------------------------------------------

struct PawnFacts {
  std::array<int, 8> own_per_file{};
  std::vector<Square> own;
  std::vector<Square> theirs;
};

inline PawnFacts pawn_facts(const Position& pos, Color side) {
  PawnFacts f;
  for (int i = 0; i < 64; ++i) {
    const Square s = Square::from_index(i);
    if (pos.has(s, side, PieceKind::pawn)) {
      f.own.push_back(s);
      ++f.own_per_file[static_cast<std::size_t>(s.file())];
    } else if (pos.has(s, !side, PieceKind::pawn)) {
      f.theirs.push_back(s);
    }
  }
  return f;
}

inline int relative_rank(Square s, Color side) { return side == Color::white ? s.rank() : 7 - s.rank(); }

inline bool is_passed(const PawnFacts& f, Square pawn, Color side) {
  for (auto t : f.theirs)
    if (std::abs(t.file() - pawn.file()) <= 1 && relative_rank(t, side) > relative_rank(pawn, side)) return false;
  return true;
}

inline bool is_isolated(const PawnFacts& f, Square pawn) {
  const int file = pawn.file();
  const int left = file > 0 ? f.own_per_file[static_cast<std::size_t>(file - 1)] : 0;
  const int right = file < 7 ? f.own_per_file[static_cast<std::size_t>(file + 1)] : 0;
  return left == 0 && right == 0;
}

inline bool pawn_protected(const Position& pos, Square pawn, Color side) {
  const int back = side == Color::white ? -1 : 1;
  for (int df : {-1, 1})
    if (auto s = pawn.offset(df, back); s && pos.has(*s, side, PieceKind::pawn)) return true;
  return false;
}

inline int num_double_pawn_files(const PawnFacts& f) {
  return static_cast<int>(std::count_if(f.own_per_file.begin(), f.own_per_file.end(), [](int n) { return n >= 2; }));
}

inline int num_isolated_pawns(const PawnFacts& f) {
  return static_cast<int>(std::count_if(f.own.begin(), f.own.end(), [&](Square s) { return is_isolated(f, s); }));
}

inline int pawns_on_7th(const PawnFacts& f, Color side) {
  return static_cast<int>(
      std::count_if(f.own.begin(), f.own.end(), [&](Square s) { return relative_rank(s, side) == 6; }));
}

inline int num_passed(const PawnFacts& f, Color side) {
  return static_cast<int>(std::count_if(f.own.begin(), f.own.end(), [&](Square s) { return is_passed(f, s, side); }));
}

inline int num_protected_passed(const Position& pos, const PawnFacts& f, Color side) {
  return static_cast<int>(std::count_if(f.own.begin(), f.own.end(), [&](Square s) {
    return is_passed(f, s, side) && pawn_protected(pos, s, side);
  }));
}

inline int num_pawn_islands(const PawnFacts& f) {
  int islands = 0;
  bool in_island = false;
  for (int n : f.own_per_file) {
    if (n > 0 && !in_island) ++islands;
    in_island = n > 0;
  }
  return islands;
}

inline bool has_iqp(const PawnFacts& f) {
  return std::any_of(f.own.begin(), f.own.end(), [&](Square s) { return s.file() == 3 && is_isolated(f, s); });
}

inline int num_connected_passed(const PawnFacts& f, Color side) {
  std::array<bool, 8> passed_file{};
  for (auto s : f.own)
    if (is_passed(f, s, side)) passed_file[static_cast<std::size_t>(s.file())] = true;
  int n = 0;
  for (auto s : f.own) {
    if (!is_passed(f, s, side)) continue;
    const int file = s.file();
    if ((file > 0 && passed_file[static_cast<std::size_t>(file - 1)]) ||
        (file < 7 && passed_file[static_cast<std::size_t>(file + 1)]))
      ++n;
  }
  return n;
}

inline bool has_right_bc_ha_promotion(const Position& pos, Color side) {
  const auto f = pawn_facts(pos, side);
  const int last = side == Color::white ? 7 : 0;
  for (auto s : f.own) {
    if ((s.file() != 0 && s.file() != 7) || !is_passed(f, s, side)) continue;
    const bool promo_light = Square(s.file(), last).is_light();
    for (int i = 0; i < 64; ++i) {
      const Square b = Square::from_index(i);
      if (pos.has(b, side, PieceKind::bishop) && b.is_light() == promo_light) return true;
    }
  }
  return false;
}

/// Bishop-colour pawn counts. Zero unless the side has exactly one bishop.
inline int bishop_colour_pawns(const Position& pos, Color side, bool same_colour, bool own_pawns) {
  std::optional<Square> bishop;
  for (int i = 0; i < 64; ++i) {
    const Square s = Square::from_index(i);
    if (!pos.has(s, side, PieceKind::bishop)) continue;
    if (bishop) return 0;
    bishop = s;
  }
  if (!bishop) return 0;
  const Color pawn_owner = own_pawns ? side : !side;
  int n = 0;
  for (int i = 0; i < 64; ++i) {
    const Square s = Square::from_index(i);
    if (pos.has(s, pawn_owner, PieceKind::pawn) && (s.is_light() == bishop->is_light()) == same_colour) ++n;
  }
  return n;
}

inline bool has_mate_threat(const Position& pos) {
  if (chess::in_check(pos)) return false;
  const Position passed = chess::null_move(pos);
  for (const auto& m : chess::legal_moves(passed))
    if (chess::is_checkmate(chess::apply_move(passed, m))) return true;
  return false;
}

inline constexpr std::array<std::string_view, 8> capture_squares = {"d1", "d2", "d3", "e1", "e2", "e3", "g5", "b5"};

using SideFn = std::function<double(const Position&, Color, const GameContext*)>;

struct SideConcept {
  std::string base;
  ConceptKind kind;
  bool has_diff;
  bool needs_context;
  SideFn fn;
};

inline double b2d(bool b) { return b ? 1.0 : 0.0; }

inline const std::vector<SideConcept>& side_concepts() {
  static const std::vector<SideConcept> table = [] {
    std::vector<SideConcept> t;
    auto binary = [&](std::string base, std::function<bool(const Position&, Color)> f) {
      t.push_back({std::move(base), ConceptKind::binary, false, false,
                   [f](const Position& p, Color c, const GameContext*) { return b2d(f(p, c)); }});
    };
    auto count = [&](std::string base, std::function<int(const Position&, Color)> f) {
      t.push_back({std::move(base), ConceptKind::integer, true, false,
                   [f](const Position& p, Color c, const GameContext*) { return static_cast<double>(f(p, c)); }});
    };

    for (auto [name, kind] : {std::pair{"pawn_fork", PieceKind::pawn}, std::pair{"knight_fork", PieceKind::knight},
                              std::pair{"bishop_fork", PieceKind::bishop}, std::pair{"rook_fork", PieceKind::rook}}) {
      const PieceKind k = kind;
      binary(name, [k](const Position& p, Color c) { return has_fork(p, c, k); });
    }
    for (auto [name, kind] :
         {std::pair{"has_pinned_pawn", PieceKind::pawn}, std::pair{"has_pinned_knight", PieceKind::knight},
          std::pair{"has_pinned_bishop", PieceKind::bishop}, std::pair{"has_pinned_rook", PieceKind::rook},
          std::pair{"has_pinned_queen", PieceKind::queen}}) {
      const PieceKind k = kind;
      binary(name, [k](const Position& p, Color c) { return has_pinned(p, c, k); });
    }
    count("material", material);
    count("num_pieces", num_pieces);
    binary("has_bishop_pair", has_bishop_pair);
    binary("has_connected_rooks", has_connected_rooks);
    binary("has_control_of_open_file", has_control_of_open_file);
    binary("has_check_move", has_check_move);
    binary("can_capture_queen", can_capture_queen);
    count("num_king_attacked_squares", num_king_attacked_squares);
    binary("has_right_bc_ha_promotion", has_right_bc_ha_promotion);
    count("num_scb_pawns_same_side", [](const Position& p, Color c) { return bishop_colour_pawns(p, c, true, true); });
    count("num_ocb_pawns_same_side", [](const Position& p, Color c) { return bishop_colour_pawns(p, c, false, true); });
    count("num_scb_pawns_other_side", [](const Position& p, Color c) { return bishop_colour_pawns(p, c, true, false); });
    count("num_ocb_pawns_other_side",
          [](const Position& p, Color c) { return bishop_colour_pawns(p, c, false, false); });
    for (auto sq : capture_squares) {
      const Square named = *Square::parse(sq);
      binary("capture_possible_on_" + std::string(sq),
             [named](const Position& p, Color c) { return capture_possible_on(p, c, named); });
    }
    for (auto sq : capture_squares) {
      const Square named = *Square::parse(sq);
      t.push_back({"capture_happens_next_move_on_" + std::string(sq), ConceptKind::binary, false, true,
                   [named](const Position& p, Color c, const GameContext* ctx) {
                     if (!ctx || !ctx->next_move) return 0.0;
                     const Square target = side_square(named, c);
                     if (c == p.side_to_move) return b2d(ctx->next_move->to == target && p.at(target).has_value());
                     if (!ctx->move_after) return 0.0;
                     const Position reply = chess::apply_move(p, *ctx->next_move);
                     return b2d(ctx->move_after->to == target && reply.at(target).has_value());
                   }});
    }

    auto pawn_count = [&](std::string base, std::function<int(const Position&, const PawnFacts&, Color)> f) {
      count(std::move(base), [f](const Position& p, Color c) { return f(p, pawn_facts(p, c), c); });
    };
    auto pawn_flag = [&](std::string base, std::function<bool(const Position&, const PawnFacts&, Color)> f) {
      binary(std::move(base), [f](const Position& p, Color c) { return f(p, pawn_facts(p, c), c); });
    };
    pawn_count("num_double_pawn_files", [](const Position&, const PawnFacts& f, Color) { return num_double_pawn_files(f); });
    pawn_flag("has_double_pawn", [](const Position&, const PawnFacts& f, Color) { return num_double_pawn_files(f) > 0; });
    pawn_count("num_isolated_pawns", [](const Position&, const PawnFacts& f, Color) { return num_isolated_pawns(f); });
    pawn_flag("has_isolated_pawn", [](const Position&, const PawnFacts& f, Color) { return num_isolated_pawns(f) > 0; });
    pawn_flag("has_pawn_on_7th_rank", [](const Position&, const PawnFacts& f, Color c) { return pawns_on_7th(f, c) > 0; });
    pawn_count("pawns_on_7th_rank", [](const Position&, const PawnFacts& f, Color c) { return pawns_on_7th(f, c); });
    pawn_flag("has_passed_pawn", [](const Position&, const PawnFacts& f, Color c) { return num_passed(f, c) > 0; });
    pawn_count("num_passed_pawns", [](const Position&, const PawnFacts& f, Color c) { return num_passed(f, c); });
    pawn_flag("has_protected_passed_pawn",
              [](const Position& p, const PawnFacts& f, Color c) { return num_protected_passed(p, f, c) > 0; });
    pawn_count("num_protected_passed_pawns",
               [](const Position& p, const PawnFacts& f, Color c) { return num_protected_passed(p, f, c); });
    pawn_count("num_pawn_islands", [](const Position&, const PawnFacts& f, Color) { return num_pawn_islands(f); });
    pawn_flag("has_iqp", [](const Position&, const PawnFacts& f, Color) { return has_iqp(f); });
    pawn_flag("has_connected_passed_pawns",
              [](const Position&, const PawnFacts& f, Color c) { return num_connected_passed(f, c) >= 2; });
    pawn_count("num_connected_passed_pawns",
               [](const Position&, const PawnFacts& f, Color c) { return num_connected_passed(f, c); });
    return t;
  }();
  return table;
}

inline const SideConcept* find_side_concept(std::string_view base) {
  for (const auto& c : side_concepts())
    if (c.base == base) return &c;
  return nullptr;
}

}  // namespace detail

/// Every native concept, in registry order.
inline const std::vector<ConceptSpec>& native_concepts() {
  static const std::vector<ConceptSpec> specs = [] {
    std::vector<ConceptSpec> out;
    out.push_back({"in_check", ConceptKind::binary, SideVariant::none, ConceptSource::native, "in_check"});
    out.push_back({"has_mate_threat", ConceptKind::binary, SideVariant::none, ConceptSource::native, "has_mate_threat"});
    out.push_back({"has_contested_open_file", ConceptKind::binary, SideVariant::none, ConceptSource::native,
                   "has_contested_open_file"});
    for (const auto& c : detail::side_concepts()) {
      out.push_back({c.base + "_mine", c.kind, SideVariant::mine, ConceptSource::native, c.base});
      out.push_back({c.base + "_opponent", c.kind, SideVariant::opponent, ConceptSource::native, c.base});
      if (c.has_diff) out.push_back({c.base + "_diff", c.kind, SideVariant::diff, ConceptSource::native, c.base});
    }
    return out;
  }();
  return specs;
}

inline std::optional<ConceptSpec> find_concept(std::string_view name) {
  for (const auto& s : native_concepts())
    if (s.name == name) return s;
  return std::nullopt;
}

inline bool needs_context(const ConceptSpec& spec) {
  const auto* c = detail::find_side_concept(spec.base);
  return c && c->needs_context;
}

inline double eval_concept(const ConceptSpec& spec, const Position& pos, const GameContext* ctx = nullptr) {
  if (spec.source != ConceptSource::native) throw UnknownConcept(spec.name + " (external concepts are not computable)");
  if (spec.side_variant == SideVariant::none) {
    if (spec.base == "in_check") return detail::b2d(chess::in_check(pos));
    if (spec.base == "has_mate_threat") return detail::b2d(detail::has_mate_threat(pos));
    if (spec.base == "has_contested_open_file") return detail::b2d(detail::has_contested_open_file(pos));
    throw UnknownConcept(spec.name);
  }
  const auto* c = detail::find_side_concept(spec.base);
  if (!c) throw UnknownConcept(spec.name);
  if (c->needs_context && !ctx) throw MissingContext(spec.name);
  const Color mine = pos.side_to_move;
  switch (spec.side_variant) {
    case SideVariant::mine: return c->fn(pos, mine, ctx);
    case SideVariant::opponent: return c->fn(pos, !mine, ctx);
    case SideVariant::diff: return c->fn(pos, mine, ctx) - c->fn(pos, !mine, ctx);
    case SideVariant::none: break;
  }
  throw UnknownConcept(spec.name);
}

inline double eval_concept(std::string_view name, const Position& pos, const GameContext* ctx = nullptr) {
  auto spec = find_concept(name);
  if (!spec) throw UnknownConcept(std::string(name));
  return eval_concept(*spec, pos, ctx);
}

}  // namespace azprobe::concepts
