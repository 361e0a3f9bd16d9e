#include "plots.hpp"

#include "mfg/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace mfgsolve {

namespace fs = std::filesystem;

namespace {

constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 30, kBottom = 50;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Numeric columns of a CSV with a header row; '#' lines are skipped.
std::map<std::string, std::vector<double>> read_table(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw mfg::ValidationError("cannot read " + p.string());
  std::string line;
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> cols;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    if (names.empty()) {
      while (std::getline(ss, cell, ',')) names.push_back(cell);
      continue;
    }
    for (std::size_t c = 0; std::getline(ss, cell, ','); ++c) {
      if (c >= names.size()) throw mfg::ValidationError(p.string() + ": too many columns");
      cols[names[c]].push_back(std::stod(cell));
    }
  }
  for (const auto& n : names) cols[n];
  return cols;
}

struct Axes {
  double x0, x1, y0, y1;

  double sx(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double sy(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

Axes fit(const std::vector<double>& xs, const std::vector<std::vector<double>>& ys) {
  Axes a{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(), std::numeric_limits<double>::max(),
         std::numeric_limits<double>::lowest()};
  for (double x : xs) a.x0 = std::min(a.x0, x), a.x1 = std::max(a.x1, x);
  for (const auto& s : ys)
    for (double y : s) a.y0 = std::min(a.y0, y), a.y1 = std::max(a.y1, y);
  if (!(a.x1 > a.x0)) a.x1 = a.x0 + 1.0;
  if (!(a.y1 > a.y0)) a.y1 = a.y0 + 1.0;
  return a;
}

void header(std::ostream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
}

void frame(std::ostream& os, const Axes& a, const std::string& xlabel, const std::string& ylabel) {
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kW - kLeft - kRight << "\" height=\""
     << kH - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"" << kH - kBottom + 16 << "\">" << fmt(a.x0) << "</text>\n";
  os << "<text x=\"" << kW - kRight << "\" y=\"" << kH - kBottom + 16 << "\" text-anchor=\"end\">" << fmt(a.x1) << "</text>\n";
  os << "<text x=\"" << kLeft - 4 << "\" y=\"" << kH - kBottom << "\" text-anchor=\"end\">" << fmt(a.y0) << "</text>\n";
  os << "<text x=\"" << kLeft - 4 << "\" y=\"" << kTop + 10 << "\" text-anchor=\"end\">" << fmt(a.y1) << "</text>\n";
  os << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << (kTop + kH - kBottom) / 2 << "\" transform=\"rotate(-90 16 " << (kTop + kH - kBottom) / 2
     << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
}

void polyline(std::ostream& os, const Axes& a, const std::vector<double>& xs, const std::vector<double>& ys,
              const std::string& color, bool dashed = false) {
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << (dashed ? " stroke-dasharray=\"6 4\"" : "")
     << " points=\"";
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) os << (i ? " " : "") << px(a.sx(xs[i])) << "," << px(a.sy(ys[i]));
  os << "\"/>\n";
}

// White to dark blue.
std::string shade(double s) {
  s = std::clamp(s, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 * (1 - s) + 8 * s));
  const int g = static_cast<int>(std::lround(255 * (1 - s) + 48 * s));
  const int b = static_cast<int>(std::lround(255 * (1 - s) + 107 * s));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

void heatmap(const fs::path& curve_csv, const fs::path& out) {
  std::ifstream f(curve_csv);
  const mfg::MeasureCurve c = mfg::read_curve_csv(f);
  const auto& g = c.grid();
  const auto& t = c.times();
  const std::size_t n = g.points_per_axis();
  // First-coordinate marginal in 2D.
  std::vector<double> rows(t.nodes() * n, 0.0);
  double peak = 0.0;
  for (std::size_t k = 0; k < t.nodes(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) rows[k * n + g.multi_index(i)[0]] += c.weight(k, i);
    for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, rows[k * n + i]);
  }
  const Axes a{-g.half_width(), g.half_width(), 0.0, t.horizon()};
  std::ofstream os(out);
  header(os, "density over (x, t)");
  const double cw = (kW - kLeft - kRight) / static_cast<double>(n);
  const double ch = (kH - kTop - kBottom) / static_cast<double>(t.nodes());
  for (std::size_t k = 0; k < t.nodes(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      os << "<rect x=\"" << px(kLeft + cw * static_cast<double>(i)) << "\" y=\""
         << px(kH - kBottom - ch * static_cast<double>(k + 1)) << "\" width=\"" << px(cw + 0.05) << "\" height=\""
         << px(ch + 0.05) << "\" fill=\"" << shade(peak > 0 ? rows[k * n + i] / peak : 0.0) << "\"/>\n";
    }
  }
  frame(os, a, g.dim() == 2 ? "x1" : "x", "t");
  os << "</svg>\n";
}

void envelope(const fs::path& csv, const fs::path& out) {
  auto cols = read_table(csv);
  const auto& t = cols["t"];
  const auto& v = cols["V_moment"];
  const auto& b = cols["bound"];
  if (t.empty() || v.size() != t.size() || b.size() != t.size()) throw mfg::ValidationError(csv.string() + ": needs t,V_moment,bound");
  const Axes a = fit(t, {v, b, {0.0}});
  std::ofstream os(out);
  header(os, "V moment and envelope R e^{Mt}");
  polyline(os, a, t, b, "#b2182b", true);
  polyline(os, a, t, v, "#2166ac");
  frame(os, a, "t", "int V dmu_t");
  os << "</svg>\n";
}

void gap_curve(std::map<std::string, std::vector<double>>& cols, const fs::path& out) {
  auto& it = cols["iter"];
  std::vector<double> lg;
  for (double g : cols["kr_gap"]) lg.push_back(std::log10(std::max(g, 1e-16)));
  const Axes a = fit(it, {lg});
  std::ofstream os(out);
  header(os, "fixed-point gap");
  polyline(os, a, it, lg, "#2166ac");
  for (std::size_t i = 0; i < it.size(); ++i) {
    os << "<circle cx=\"" << px(a.sx(it[i])) << "\" cy=\"" << px(a.sy(lg[i])) << "\" r=\"2.5\" fill=\"#2166ac\"/>\n";
  }
  frame(os, a, "iteration", "log10 KR gap");
  os << "</svg>\n";
}

void histogram(const std::vector<double>& gaps, const fs::path& out) {
  constexpr std::size_t kBins = 20;
  double lo = *std::min_element(gaps.begin(), gaps.end()), hi = *std::max_element(gaps.begin(), gaps.end());
  if (!(hi > lo)) hi = lo + 1.0;
  std::vector<double> counts(kBins, 0.0);
  for (double g : gaps) counts[std::min(kBins - 1, static_cast<std::size_t>((g - lo) / (hi - lo) * kBins))] += 1.0;
  const Axes a{lo, hi, 0.0, *std::max_element(counts.begin(), counts.end())};
  std::ofstream os(out);
  header(os, "certificate gaps J(u*) - J(v)");
  const double w = (hi - lo) / kBins;
  for (std::size_t b = 0; b < kBins; ++b) {
    const double x0 = lo + w * static_cast<double>(b);
    os << "<rect x=\"" << px(a.sx(x0)) << "\" y=\"" << px(a.sy(counts[b])) << "\" width=\""
       << px(a.sx(x0 + w) - a.sx(x0)) << "\" height=\"" << px(a.sy(0.0) - a.sy(counts[b]))
       << "\" fill=\"#4393c3\" stroke=\"white\"/>\n";
  }
  frame(os, a, "gap", "challengers");
  os << "</svg>\n";
}

}  // namespace

std::vector<std::string> emit_plots(const fs::path& dir, std::vector<std::string>& warnings) {
  if (!fs::is_directory(dir)) throw mfg::ValidationError("run directory '" + dir.string() + "' does not exist");
  fs::path curve;
  for (const char* name : {"mu_star.csv", "sigma.csv", "curve.csv"}) {
    if (fs::exists(dir / name)) {
      curve = dir / name;
      break;
    }
  }
  if (curve.empty()) throw mfg::ValidationError("run directory '" + dir.string() + "' has no density curve (mu_star.csv or sigma.csv)");
  if (!fs::exists(dir / "apriori.csv")) throw mfg::ValidationError("run directory '" + dir.string() + "' has no apriori.csv");

  std::vector<std::string> written;
  heatmap(curve, dir / "density.svg");
  written.push_back("density.svg");
  envelope(dir / "apriori.csv", dir / "v_envelope.svg");
  written.push_back("v_envelope.svg");

  if (fs::exists(dir / "history.csv")) {
    auto cols = read_table(dir / "history.csv");
    if (cols["iter"].empty()) {
      warnings.push_back("history.csv is empty; no gap plot");
    } else {
      gap_curve(cols, dir / "kr_gap.svg");
      written.push_back("kr_gap.svg");
    }
  }
  if (fs::exists(dir / "certificate.csv")) {
    auto cols = read_table(dir / "certificate.csv");
    if (cols["gap"].empty()) {
      warnings.push_back("certificate.csv has no challengers; no histogram");
    } else {
      histogram(cols["gap"], dir / "certificate_gaps.svg");
      written.push_back("certificate_gaps.svg");
    }
  }
  return written;
}

}  // namespace mfgsolve
