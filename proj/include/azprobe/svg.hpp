#pragma once

// Minimal SVG writers: viridis colour scale, labelled heatmaps, line charts and
// board diagrams with per-square or per-piece opacity.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace azprobe::svg {

struct Rgb {
  int r, g, b;
};

inline std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

/// Viridis, sampled at 9 evenly spaced anchors and linearly interpolated.
inline Rgb viridis(double t) {
  static constexpr std::array<Rgb, 9> anchors = {{{68, 1, 84},
                                                  {71, 45, 123},
                                                  {59, 82, 139},
                                                  {44, 114, 142},
                                                  {33, 145, 140},
                                                  {40, 174, 128},
                                                  {94, 201, 98},
                                                  {173, 220, 48},
                                                  {253, 231, 37}}};
  if (!std::isfinite(t)) t = 0;
  t = std::clamp(t, 0.0, 1.0) * 8.0;
  const int i = std::min(7, static_cast<int>(t));
  const double f = t - i;
  const auto& a = anchors[static_cast<std::size_t>(i)];
  const auto& b = anchors[static_cast<std::size_t>(i + 1)];
  auto mix = [f](int x, int y) { return static_cast<int>(std::lround(x + (y - x) * f)); };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v, int precision = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

/// Heatmap with rows drawn bottom-up (row 0 at the bottom) and a colour bar.
/// Missing cells are drawn hatched grey.
struct Heatmap {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> x_ticks;
  std::vector<std::string> y_ticks;
  std::vector<std::vector<std::optional<double>>> values;  // [row][col]
  double vmin = 0.0;
  double vmax = 1.0;
};

inline std::string render(const Heatmap& h) {
  const int cell = 36, left = 90, top = 40, bar = 16;
  const int rows = static_cast<int>(h.y_ticks.size());
  const int cols = static_cast<int>(h.x_ticks.size());
  const int width = left + cols * cell + 90;
  const int height = top + rows * cell + 70;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<defs><pattern id=\"na\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
       "<rect width=\"6\" height=\"6\" fill=\"#ddd\"/><path d=\"M0 6 L6 0\" stroke=\"#999\"/></pattern></defs>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(h.title)
    << "</text>\n";
  const double span = h.vmax > h.vmin ? h.vmax - h.vmin : 1.0;
  for (int r = 0; r < rows; ++r) {
    const int y = top + (rows - 1 - r) * cell;
    o << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
      << escape(h.y_ticks[static_cast<std::size_t>(r)]) << "</text>\n";
    for (int c = 0; c < cols; ++c) {
      const int x = left + c * cell;
      const auto& v = h.values[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
        << (v ? hex(viridis((*v - h.vmin) / span)) : std::string("url(#na)")) << "\"><title>"
        << (v ? num(*v, 4) : std::string("n/a")) << "</title></rect>\n";
    }
  }
  for (int c = 0; c < cols; ++c)
    o << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\"" << top + rows * cell + 14
      << "\" text-anchor=\"middle\">" << escape(h.x_ticks[static_cast<std::size_t>(c)]) << "</text>\n";
  o << "<text x=\"" << left + cols * cell / 2 << "\" y=\"" << top + rows * cell + 34 << "\" text-anchor=\"middle\">"
    << escape(h.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << top + rows * cell / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << top + rows * cell / 2 << ")\">" << escape(h.y_label) << "</text>\n";
  const int bx = left + cols * cell + 20;
  const int steps = 32;
  for (int i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / (steps - 1);
    const double bh = static_cast<double>(rows * cell) / steps;
    o << "<rect x=\"" << bx << "\" y=\"" << num(top + rows * cell - (i + 1) * bh, 2) << "\" width=\"" << bar
      << "\" height=\"" << num(bh + 0.5, 2) << "\" fill=\"" << hex(viridis(t)) << "\"/>\n";
  }
  o << "<text x=\"" << bx + bar + 4 << "\" y=\"" << top + 10 << "\">" << num(h.vmax, 2) << "</text>\n";
  o << "<text x=\"" << bx + bar + 4 << "\" y=\"" << top + rows * cell << "\">" << num(h.vmin, 2) << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

struct Series {
  std::string name;
  std::vector<double> y;
};

/// Line chart (or stacked areas when `stacked`) over shared x positions.
struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> x_ticks;
  std::vector<Series> series;
  bool stacked = false;
};

inline std::string render(const Chart& ch) {
  const int left = 70, top = 40, w = 520, h = 300, legend = 220;
  const std::size_t n = ch.x_ticks.size();
  std::vector<std::vector<double>> lower(ch.series.size(), std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> upper(ch.series.size(), std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0;
    for (std::size_t s = 0; s < ch.series.size(); ++s) {
      const double v = i < ch.series[s].y.size() ? ch.series[s].y[i] : 0.0;
      lower[s][i] = ch.stacked ? acc : v;
      acc += v;
      upper[s][i] = ch.stacked ? acc : v;
    }
  }
  double lo = ch.stacked ? 0.0 : 1e300, hi = ch.stacked ? 0.0 : -1e300;
  for (std::size_t s = 0; s < ch.series.size(); ++s)
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min({lo, lower[s][i], upper[s][i]});
      hi = std::max({hi, lower[s][i], upper[s][i]});
    }
  if (!(hi > lo)) {
    lo = std::min(lo, 0.0);
    hi = lo + 1.0;
  }
  auto px = [&](std::size_t i) { return left + (n > 1 ? static_cast<double>(i) * w / static_cast<double>(n - 1) : w / 2.0); };
  auto py = [&](double v) { return top + h - (v - lo) / (hi - lo) * h; };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + w + legend << "\" height=\"" << top + h + 60
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<text x=\"" << left + w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(ch.title)
    << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w << "\" height=\"" << h
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (std::size_t s = 0; s < ch.series.size(); ++s) {
    const auto colour = hex(viridis(ch.series.size() > 1 ? static_cast<double>(s) / static_cast<double>(ch.series.size() - 1) : 0.5));
    std::ostringstream pts;
    for (std::size_t i = 0; i < n; ++i) pts << num(px(i), 1) << ',' << num(py(upper[s][i]), 1) << ' ';
    if (ch.stacked) {
      for (std::size_t i = n; i-- > 0;) pts << num(px(i), 1) << ',' << num(py(lower[s][i]), 1) << ' ';
      o << "<polygon points=\"" << pts.str() << "\" fill=\"" << colour << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    } else {
      o << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    }
    const int ly = top + 12 + static_cast<int>(s) * 16;
    o << "<rect x=\"" << left + w + 14 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\"" << colour
      << "\"/><text x=\"" << left + w + 30 << "\" y=\"" << ly << "\">" << escape(ch.series[s].name) << "</text>\n";
  }
  const std::size_t every = std::max<std::size_t>(1, n / 10);
  for (std::size_t i = 0; i < n; i += every)
    o << "<text x=\"" << num(px(i), 1) << "\" y=\"" << top + h + 14 << "\" text-anchor=\"middle\">"
      << escape(ch.x_ticks[i]) << "</text>\n";
  o << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << num(hi, 2) << "</text>\n";
  o << "<text x=\"" << left - 6 << "\" y=\"" << top + h << "\" text-anchor=\"end\">" << num(lo, 2) << "</text>\n";
  o << "<text x=\"" << left + w / 2 << "\" y=\"" << top + h + 34 << "\" text-anchor=\"middle\">" << escape(ch.x_label)
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << top + h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << top + h / 2
    << ")\">" << escape(ch.y_label) << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

struct Glyph {
  std::string text;  // Unicode chess glyph
  double opacity = 1.0;
};

/// Glyph for piece index 0..5 = K Q R B N P.
inline std::string piece_glyph(int kind, bool white) {
  static const char* const w[] = {"\u2654", "\u2655", "\u2656", "\u2657", "\u2658", "\u2659"};
  static const char* const b[] = {"\u265A", "\u265B", "\u265C", "\u265D", "\u265E", "\u265F"};
  return (white ? w : b)[kind];
}

/// A board square: any number of glyphs (drawn in order, slightly staggered when several)
/// and a highlight fill whose opacity is `overlay`.
struct BoardCell {
  std::vector<Glyph> glyphs;
  double overlay = 0.0;
};

struct Board {
  std::string title;
  std::array<std::array<BoardCell, 8>, 8> cells{};  // [rank][file], rank 0 = bottom
  std::string note;
};

inline std::string render(const Board& b) {
  const int sq = 48, left = 30, top = 36;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + 8 * sq + 20 << "\" height=\"" << top + 8 * sq + 50
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<text x=\"" << left + 4 * sq << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(b.title)
    << "</text>\n";
  for (int r = 0; r < 8; ++r)
    for (int f = 0; f < 8; ++f) {
      const int x = left + f * sq, y = top + (7 - r) * sq;
      const auto& c = b.cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(f)];
      o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << sq << "\" height=\"" << sq << "\" fill=\""
        << ((r + f) % 2 ? "#f0d9b5" : "#b58863") << "\"/>\n";
      if (c.overlay > 0)
        o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << sq << "\" height=\"" << sq
          << "\" fill=\"#d62728\" fill-opacity=\"" << num(c.overlay, 4) << "\"/>\n";
      const int many = static_cast<int>(c.glyphs.size()) > 1;
      for (std::size_t g = 0; g < c.glyphs.size(); ++g) {
        const auto& gl = c.glyphs[g];
        if (gl.text.empty() || gl.opacity <= 0) continue;
        const int dx = many ? static_cast<int>(g % 3) * 6 - 6 : 0;
        o << "<text x=\"" << x + sq / 2 + dx << "\" y=\"" << y + sq * 3 / 4 << "\" text-anchor=\"middle\" font-size=\""
          << sq * 3 / 4 << "\" opacity=\"" << num(gl.opacity, 4) << "\">" << gl.text << "</text>\n";
      }
    }
  for (int f = 0; f < 8; ++f)
    o << "<text x=\"" << left + f * sq + sq / 2 << "\" y=\"" << top + 8 * sq + 14 << "\" text-anchor=\"middle\">"
      << static_cast<char>('a' + f) << "</text>\n";
  for (int r = 0; r < 8; ++r)
    o << "<text x=\"" << left - 10 << "\" y=\"" << top + (7 - r) * sq + sq / 2 + 4 << "\" text-anchor=\"middle\">"
      << r + 1 << "</text>\n";
  if (!b.note.empty())
    o << "<text x=\"" << left << "\" y=\"" << top + 8 * sq + 34 << "\">" << escape(b.note) << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace azprobe::svg
