#pragma once

#include <cctype>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "azprobe/chess/movegen.hpp"

namespace azprobe::chess {

struct Game {
  std::map<std::string, std::string> headers;
  Position initial;
  std::vector<Move> moves;

  /// Positions before each ply plus the final position (moves.size() + 1 entries).
  std::vector<Position> positions() const {
    std::vector<Position> out;
    out.reserve(moves.size() + 1);
    out.push_back(initial);
    for (const auto& m : moves) out.push_back(apply_move(out.back(), m));
    return out;
  }

  std::optional<std::string> header(const std::string& key) const {
    auto it = headers.find(key);
    if (it == headers.end()) return std::nullopt;
    return it->second;
  }
};

class SanError : public std::runtime_error {
 public:
  explicit SanError(const std::string& what) : std::runtime_error(what) {}
};

/// Resolves a SAN token against the legal moves of `pos`.
inline Move parse_san(const Position& pos, std::string_view token) {
  std::string san(token);
  while (!san.empty() && (san.back() == '+' || san.back() == '#' || san.back() == '!' || san.back() == '?'))
    san.pop_back();
  if (san.empty()) throw SanError("empty move token");

  const auto moves = legal_moves(pos);
  const Color us = pos.side_to_move;

  if (san == "O-O" || san == "0-0" || san == "O-O-O" || san == "0-0-0") {
    const int rank = us == Color::white ? 0 : 7;
    const Move m{Square(4, rank), Square(san.size() == 3 ? 6 : 2, rank), std::nullopt};
    if (std::find(moves.begin(), moves.end(), m) == moves.end()) throw SanError("illegal castling '" + san + "'");
    return m;
  }

  PieceKind kind = PieceKind::pawn;
  std::size_t i = 0;
  if (std::string_view("NBRQK").find(san[0]) != std::string_view::npos) {
    kind = piece_from_char(san[0])->kind;
    i = 1;
  }
  std::optional<PieceKind> promo;
  if (auto eq = san.find('='); eq != std::string::npos) {
    if (eq + 1 >= san.size()) throw SanError("dangling promotion in '" + san + "'");
    auto p = piece_from_char(static_cast<char>(std::tolower(static_cast<unsigned char>(san[eq + 1]))));
    if (!p) throw SanError("bad promotion piece in '" + san + "'");
    promo = p->kind;
    san.resize(eq);
  } else if (kind == PieceKind::pawn && san.size() >= 3 && std::isalpha(static_cast<unsigned char>(san.back())) &&
             std::isdigit(static_cast<unsigned char>(san[san.size() - 2]))) {
    auto p = piece_from_char(static_cast<char>(std::tolower(static_cast<unsigned char>(san.back()))));
    if (!p) throw SanError("bad promotion piece in '" + san + "'");
    promo = p->kind;
    san.pop_back();
  }
  if (san.size() < i + 2) throw SanError("move token too short: '" + std::string(token) + "'");
  const auto dest = Square::parse(std::string_view(san).substr(san.size() - 2));
  if (!dest) throw SanError("bad destination in '" + std::string(token) + "'");

  std::optional<int> from_file, from_rank;
  for (std::size_t j = i; j + 2 < san.size(); ++j) {
    const char c = san[j];
    if (c >= 'a' && c <= 'h')
      from_file = c - 'a';
    else if (c >= '1' && c <= '8')
      from_rank = c - '1';
    else if (c != 'x' && c != '-')
      throw SanError("unexpected character in '" + std::string(token) + "'");
  }

  std::optional<Move> found;
  for (const auto& m : moves) {
    const auto& p = pos.at(m.from);
    if (p->kind != kind || m.to != *dest || m.promotion != promo) continue;
    if (from_file && m.from.file() != *from_file) continue;
    if (from_rank && m.from.rank() != *from_rank) continue;
    if (found) throw SanError("ambiguous move '" + std::string(token) + "'");
    found = m;
  }
  if (!found) throw SanError("no legal move matches '" + std::string(token) + "'");
  return *found;
}

/// Standard algebraic notation for a legal move, with check and mate suffixes.
inline std::string to_san(const Position& pos, const Move& m) {
  const auto& piece = *pos.at(m.from);
  std::string out;
  if (piece.kind == PieceKind::king && std::abs(m.to.file() - m.from.file()) == 2) {
    out = m.to.file() == 6 ? "O-O" : "O-O-O";
  } else {
    const bool capture = pos.at(m.to).has_value() ||
                         (piece.kind == PieceKind::pawn && m.from.file() != m.to.file());
    if (piece.kind == PieceKind::pawn) {
      if (capture) out += static_cast<char>('a' + m.from.file());
    } else {
      out += piece_char(Piece{piece.kind, Color::white});
      bool clash = false, same_file = false, same_rank = false;
      for (const auto& o : legal_moves(pos)) {
        if (o.to != m.to || o.from == m.from || pos.at(o.from)->kind != piece.kind) continue;
        clash = true;
        same_file |= o.from.file() == m.from.file();
        same_rank |= o.from.rank() == m.from.rank();
      }
      if (clash) {
        if (!same_file)
          out += static_cast<char>('a' + m.from.file());
        else if (!same_rank)
          out += static_cast<char>('1' + m.from.rank());
        else
          out += m.from.name();
      }
    }
    if (capture) out += 'x';
    out += m.to.name();
    if (m.promotion) {
      out += '=';
      out += piece_char(Piece{*m.promotion, Color::white});
    }
  }
  const auto next = apply_move(pos, m);
  if (in_check(next)) out += legal_moves(next).empty() ? '#' : '+';
  return out;
}

struct PgnIssue {
  std::size_t game_index;  // 0-based ordinal among games encountered in the stream
  std::string message;
};

struct PgnResult {
  std::vector<Game> games;
  std::vector<PgnIssue> issues;  // games listed here were skipped
};

namespace detail {

inline bool is_result_token(const std::string& t) {
  return t == "1-0" || t == "0-1" || t == "1/2-1/2" || t == "*";
}

class PgnLexer {
 public:
  explicit PgnLexer(std::string text) : text_(std::move(text)) {}

  enum class Kind { tag, word, end };
  struct Token {
    Kind kind;
    std::string key;
    std::string value;
  };

  Token next() {
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) return {Kind::end, {}, {}};
      const char c = text_[pos_];
      if (c == '{') {
        skip_until('}');
      } else if (c == ';') {
        skip_until('\n');
      } else if (c == '%' && (pos_ == 0 || text_[pos_ - 1] == '\n')) {
        skip_until('\n');
      } else if (c == '(') {
        int depth = 0;
        while (pos_ < text_.size()) {
          const char d = text_[pos_++];
          if (d == '{') {
            --pos_;
            skip_until('}');
          } else if (d == '(') {
            ++depth;
          } else if (d == ')' && --depth == 0) {
            break;
          }
        }
      } else if (c == ')') {
        ++pos_;
      } else if (c == '[') {
        return read_tag();
      } else if (c == '$') {
        ++pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        std::string word;
        while (pos_ < text_.size()) {
          const char d = text_[pos_];
          if (std::isspace(static_cast<unsigned char>(d)) || d == '{' || d == '(' || d == ')' || d == '[' ||
              d == ';' || d == '$')
            break;
          word += d;
          ++pos_;
        }
        // Strip a leading move number ("12." or "12...").
        std::size_t k = 0;
        while (k < word.size() && std::isdigit(static_cast<unsigned char>(word[k]))) ++k;
        if (k > 0 && k < word.size() && word[k] == '.') {
          while (k < word.size() && word[k] == '.') ++k;
          word = word.substr(k);
        } else if (k == word.size() && !word.empty()) {
          continue;  // bare number
        }
        if (word.empty()) continue;
        return {Kind::word, {}, word};
      }
    }
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  void skip_until(char stop) {
    while (pos_ < text_.size() && text_[pos_] != stop) ++pos_;
    if (pos_ < text_.size()) ++pos_;
  }
  Token read_tag() {
    ++pos_;
    skip_space();
    std::string key;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '"' &&
           text_[pos_] != ']')
      key += text_[pos_++];
    skip_space();
    std::string value;
    if (pos_ < text_.size() && text_[pos_] == '"') {
      ++pos_;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
        value += text_[pos_++];
      }
      if (pos_ < text_.size()) ++pos_;
    }
    skip_until(']');
    return {Kind::tag, key, value};
  }

  std::string text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses every game in a PGN export stream. Mainline only; comments, variations
/// and NAGs are skipped. A game with an unresolvable move is reported and dropped.
inline PgnResult parse_pgn(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error("I/O error while reading PGN stream");

  PgnResult result;
  detail::PgnLexer lex(std::move(text));
  std::size_t ordinal = 0;

  Game game;
  Position cur = start_position();
  bool started = false;  // saw any tag or move for the current game
  std::optional<std::string> error;

  auto finish = [&]() {
    if (!started) return;
    if (error)
      result.issues.push_back({ordinal, *error});
    else
      result.games.push_back(std::move(game));
    ++ordinal;
    game = Game{};
    cur = start_position();
    started = false;
    error.reset();
  };

  bool in_movetext = false;
  for (auto tok = lex.next(); tok.kind != detail::PgnLexer::Kind::end; tok = lex.next()) {
    if (tok.kind == detail::PgnLexer::Kind::tag) {
      if (in_movetext) {
        // Tags after movetext without a result token start a new game.
        finish();
        in_movetext = false;
      }
      if (!started) {
        game.initial = start_position();
        cur = game.initial;
      }
      started = true;
      game.headers[tok.key] = tok.value;
      if (tok.key == "FEN") {
        try {
          game.initial = parse_fen(tok.value);
          cur = game.initial;
        } catch (const std::exception& e) {
          error = std::string("bad FEN tag: ") + e.what();
        }
      }
      continue;
    }
    if (!started) {
      game.initial = start_position();
      cur = game.initial;
    }
    started = true;
    in_movetext = true;
    if (detail::is_result_token(tok.value)) {
      finish();
      in_movetext = false;
      continue;
    }
    if (error) continue;
    try {
      const Move m = parse_san(cur, tok.value);
      game.moves.push_back(m);
      cur = apply_move(cur, m);
    } catch (const SanError& e) {
      error = "ply " + std::to_string(game.moves.size() + 1) + ": " + e.what();
    }
  }
  finish();
  return result;
}

}  // namespace azprobe::chess
