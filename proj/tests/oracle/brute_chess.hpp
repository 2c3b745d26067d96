#pragma once

// Independent brute-force chess rules used only as a test oracle. It shares no
// code with the library: positions live in a char grid and attack detection is
// done by enumerating every enemy piece's raw target squares.

#include <array>
#include <cctype>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

struct Board {
  std::array<std::array<char, 8>, 8> g{};  // g[rank][file], '.' for empty
  bool white_to_move = true;
  bool wk = false, wq = false, bk = false, bq = false;
  int ep_file = -1, ep_rank = -1;

  char at(int f, int r) const { return g[static_cast<std::size_t>(r)][static_cast<std::size_t>(f)]; }
  char& at(int f, int r) { return g[static_cast<std::size_t>(r)][static_cast<std::size_t>(f)]; }
};

inline bool on(int f, int r) { return f >= 0 && f < 8 && r >= 0 && r < 8; }
inline bool white(char c) { return c >= 'A' && c <= 'Z'; }
inline bool black(char c) { return c >= 'a' && c <= 'z'; }
inline bool mine(char c, bool w) { return w ? white(c) : black(c); }
inline char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

inline Board from_fen(const std::string& fen) {
  Board b;
  for (auto& row : b.g) row.fill('.');
  std::istringstream in(fen);
  std::string place, side, castle, ep;
  in >> place >> side >> castle >> ep;
  int r = 7, f = 0;
  for (char c : place) {
    if (c == '/') {
      --r;
      f = 0;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      f += c - '0';
    } else {
      b.at(f++, r) = c;
    }
  }
  b.white_to_move = side == "w";
  for (char c : castle) {
    if (c == 'K') b.wk = true;
    if (c == 'Q') b.wq = true;
    if (c == 'k') b.bk = true;
    if (c == 'q') b.bq = true;
  }
  if (ep != "-") {
    b.ep_file = ep[0] - 'a';
    b.ep_rank = ep[1] - '1';
  }
  return b;
}

struct Target {
  int f, r;
};

/// Raw squares a piece on (f, r) hits, following the piece's movement pattern
/// until blocked (inclusive of the blocker).
inline std::vector<Target> raw_attacks(const Board& b, int f, int r) {
  std::vector<Target> out;
  const char c = b.at(f, r);
  const char p = lower(c);
  const bool w = white(c);
  auto ray = [&](int df, int dr) {
    for (int k = 1; k < 8; ++k) {
      const int nf = f + df * k, nr = r + dr * k;
      if (!on(nf, nr)) break;
      out.push_back({nf, nr});
      if (b.at(nf, nr) != '.') break;
    }
  };
  if (p == 'p') {
    const int d = w ? 1 : -1;
    if (on(f - 1, r + d)) out.push_back({f - 1, r + d});
    if (on(f + 1, r + d)) out.push_back({f + 1, r + d});
  } else if (p == 'n') {
    for (int df = -2; df <= 2; ++df)
      for (int dr = -2; dr <= 2; ++dr)
        if (df * df + dr * dr == 5 && on(f + df, r + dr)) out.push_back({f + df, r + dr});
  } else if (p == 'k') {
    for (int df = -1; df <= 1; ++df)
      for (int dr = -1; dr <= 1; ++dr)
        if ((df || dr) && on(f + df, r + dr)) out.push_back({f + df, r + dr});
  } else {
    if (p == 'r' || p == 'q') {
      ray(1, 0);
      ray(-1, 0);
      ray(0, 1);
      ray(0, -1);
    }
    if (p == 'b' || p == 'q') {
      ray(1, 1);
      ray(1, -1);
      ray(-1, 1);
      ray(-1, -1);
    }
  }
  return out;
}

/// Every square holding a piece of the given color whose raw attack set includes (tf, tr).
inline std::vector<int> attackers(const Board& b, int tf, int tr, bool by_white) {
  std::vector<int> out;
  for (int r = 0; r < 8; ++r)
    for (int f = 0; f < 8; ++f) {
      const char c = b.at(f, r);
      if (c == '.' || !mine(c, by_white)) continue;
      for (auto t : raw_attacks(b, f, r))
        if (t.f == tf && t.r == tr) {
          out.push_back(r * 8 + f);
          break;
        }
    }
  return out;
}

inline bool king_attacked(const Board& b, bool white_king) {
  const char k = white_king ? 'K' : 'k';
  for (int r = 0; r < 8; ++r)
    for (int f = 0; f < 8; ++f)
      if (b.at(f, r) == k) return !attackers(b, f, r, !white_king).empty();
  return false;
}

struct OMove {
  int ff, fr, tf, tr;
  char promo;  // 0 or lowercase piece letter
  bool operator<(const OMove& o) const {
    return std::tie(ff, fr, tf, tr, promo) < std::tie(o.ff, o.fr, o.tf, o.tr, o.promo);
  }
  std::string uci() const {
    std::string s{static_cast<char>('a' + ff), static_cast<char>('1' + fr), static_cast<char>('a' + tf),
                  static_cast<char>('1' + tr)};
    if (promo) s += promo;
    return s;
  }
};

inline Board play(const Board& b, const OMove& m) {
  Board n = b;
  const char c = b.at(m.ff, m.fr);
  const char p = lower(c);
  const bool w = white(c);
  n.at(m.ff, m.fr) = '.';
  if (p == 'p' && m.tf == b.ep_file && m.tr == b.ep_rank && b.at(m.tf, m.tr) == '.' && m.ff != m.tf)
    n.at(m.tf, m.fr) = '.';
  n.at(m.tf, m.tr) = m.promo ? (w ? static_cast<char>(std::toupper(m.promo)) : m.promo) : c;
  if (p == 'k' && (m.tf - m.ff == 2 || m.ff - m.tf == 2)) {
    if (m.tf == 6) {
      n.at(5, m.fr) = n.at(7, m.fr);
      n.at(7, m.fr) = '.';
    } else {
      n.at(3, m.fr) = n.at(0, m.fr);
      n.at(0, m.fr) = '.';
    }
  }
  auto touch = [&](int f, int r) {
    if (f == 4 && r == 0) n.wk = n.wq = false;
    if (f == 4 && r == 7) n.bk = n.bq = false;
    if (f == 0 && r == 0) n.wq = false;
    if (f == 7 && r == 0) n.wk = false;
    if (f == 0 && r == 7) n.bq = false;
    if (f == 7 && r == 7) n.bk = false;
  };
  touch(m.ff, m.fr);
  touch(m.tf, m.tr);
  n.ep_file = n.ep_rank = -1;
  if (p == 'p' && (m.tr - m.fr == 2 || m.fr - m.tr == 2)) {
    n.ep_file = m.ff;
    n.ep_rank = (m.fr + m.tr) / 2;
  }
  n.white_to_move = !b.white_to_move;
  return n;
}

inline std::vector<OMove> legal(const Board& b) {
  std::vector<OMove> cand;
  const bool w = b.white_to_move;
  for (int r = 0; r < 8; ++r)
    for (int f = 0; f < 8; ++f) {
      const char c = b.at(f, r);
      if (c == '.' || !mine(c, w)) continue;
      const char p = lower(c);
      if (p == 'p') {
        const int d = w ? 1 : -1;
        const int last = w ? 7 : 0;
        auto push = [&](int tf, int tr) {
          if (tr == last)
            for (char pr : {'q', 'r', 'b', 'n'}) cand.push_back({f, r, tf, tr, pr});
          else
            cand.push_back({f, r, tf, tr, 0});
        };
        if (on(f, r + d) && b.at(f, r + d) == '.') {
          push(f, r + d);
          if (r == (w ? 1 : 6) && b.at(f, r + 2 * d) == '.') cand.push_back({f, r, f, r + 2 * d, 0});
        }
        for (int df : {-1, 1}) {
          const int tf = f + df, tr = r + d;
          if (!on(tf, tr)) continue;
          const char t = b.at(tf, tr);
          if (t != '.' && !mine(t, w)) push(tf, tr);
          if (t == '.' && tf == b.ep_file && tr == b.ep_rank) cand.push_back({f, r, tf, tr, 0});
        }
      } else {
        for (auto t : raw_attacks(b, f, r)) {
          const char x = b.at(t.f, t.r);
          if (x == '.' || !mine(x, w)) cand.push_back({f, r, t.f, t.r, 0});
        }
        if (p == 'k') {
          const int home = w ? 0 : 7;
          const bool ks = w ? b.wk : b.bk;
          const bool qs = w ? b.wq : b.bq;
          const char rook = w ? 'R' : 'r';
          if (f == 4 && r == home && attackers(b, 4, home, !w).empty()) {
            if (ks && b.at(7, home) == rook && b.at(5, home) == '.' && b.at(6, home) == '.' &&
                attackers(b, 5, home, !w).empty() && attackers(b, 6, home, !w).empty())
              cand.push_back({4, home, 6, home, 0});
            if (qs && b.at(0, home) == rook && b.at(1, home) == '.' && b.at(2, home) == '.' &&
                b.at(3, home) == '.' && attackers(b, 3, home, !w).empty() && attackers(b, 2, home, !w).empty())
              cand.push_back({4, home, 2, home, 0});
          }
        }
      }
    }
  std::vector<OMove> out;
  for (const auto& m : cand)
    if (!king_attacked(play(b, m), w)) out.push_back(m);
  return out;
}

inline std::uint64_t perft(const Board& b, int depth) {
  if (depth == 0) return 1;
  std::uint64_t n = 0;
  for (const auto& m : legal(b)) n += perft(play(b, m), depth - 1);
  return n;
}

/// Squares (r*8+f) of `side` pieces whose removal exposes their own king.
inline std::set<int> pinned(const Board& b, bool side_white) {
  std::set<int> out;
  const char k = side_white ? 'K' : 'k';
  int kf = -1, kr = -1;
  for (int r = 0; r < 8; ++r)
    for (int f = 0; f < 8; ++f)
      if (b.at(f, r) == k) kf = f, kr = r;
  if (kf < 0) return out;
  const auto before = attackers(b, kf, kr, !side_white);
  for (int r = 0; r < 8; ++r)
    for (int f = 0; f < 8; ++f) {
      const char c = b.at(f, r);
      if (c == '.' || c == k || !mine(c, side_white)) continue;
      Board t = b;
      t.at(f, r) = '.';
      const auto after = attackers(t, kf, kr, !side_white);
      if (std::set<int>(after.begin(), after.end()) != std::set<int>(before.begin(), before.end())) out.insert(r * 8 + f);
    }
  return out;
}

}  // namespace oracle
