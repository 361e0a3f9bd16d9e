#include "mfg/io.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

namespace mfg {

namespace {

struct Header {
  int d = 0;
  double l = 0.0, horizon = 0.0;
  std::size_t n = 0, k = 0;
};

Header parse_grid_line(const std::string& line) {
  std::istringstream ss(line);
  std::string hash, word;
  ss >> hash >> word;
  if (hash != "#" || word != "grid") throw ValidationError("CSV must start with a '# grid ...' line");
  std::map<std::string, std::string> kv;
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ValidationError("malformed grid line token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  Header h;
  try {
    h.d = std::stoi(kv.at("d"));
    h.l = std::stod(kv.at("L"));
    h.n = std::stoul(kv.at("n"));
    h.horizon = std::stod(kv.at("T"));
    h.k = std::stoul(kv.at("K"));
  } catch (const std::out_of_range&) {
    throw ValidationError("grid line needs d, L, n, T and K");
  } catch (const std::invalid_argument&) {
    throw ValidationError("grid line has a non-numeric value");
  }
  return h;
}

std::vector<double> parse_row(const std::string& line, std::size_t expect, std::size_t lineno) {
  std::vector<double> v;
  std::istringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      throw ValidationError("line " + std::to_string(lineno) + ": bad number '" + cell + "'");
    }
  }
  if (v.size() != expect) {
    throw ValidationError("line " + std::to_string(lineno) + ": expected " + std::to_string(expect) + " columns");
  }
  return v;
}

template <class Fill>
void read_rows(std::istream& is, std::size_t columns, Fill&& fill) {
  std::string line;
  std::getline(is, line);  // column header
  std::size_t lineno = 2;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    fill(parse_row(line, columns, lineno), lineno);
  }
}

std::size_t locate(const StateGrid& g, const TimeGrid& t, const std::vector<double>& row, std::size_t& k,
                   std::size_t lineno) {
  const double kk = row[0] / t.dt();
  k = static_cast<std::size_t>(std::lround(kk));
  SVec x(g.dim());
  for (int c = 0; c < g.dim(); ++c) x(c) = row[1 + static_cast<std::size_t>(c)];
  const std::size_t i = g.nearest(x);
  if (std::abs(kk - static_cast<double>(k)) > 1e-6 || (g.node(i) - x).norm() > 1e-6 * g.spacing()) {
    throw ValidationError("line " + std::to_string(lineno) + ": point is not on the declared grid");
  }
  return i;
}

void write_point(std::ostream& os, const StateGrid& g, const TimeGrid& t, std::size_t k, std::size_t i) {
  os << t.time(k);
  const SVec x = g.node(i);
  for (int c = 0; c < g.dim(); ++c) os << "," << x(c);
}

}  // namespace

std::string grid_line(const StateGrid& g, const TimeGrid& t) {
  std::ostringstream os;
  os << std::setprecision(17) << "# grid d=" << g.dim() << " L=" << g.half_width() << " n=" << g.points_per_axis()
     << " T=" << t.horizon() << " K=" << t.steps();
  return os.str();
}

void write_curve_csv(std::ostream& os, const MeasureCurve& curve) {
  const StateGrid& g = curve.grid();
  const TimeGrid& t = curve.times();
  os << grid_line(g, t) << "\n" << (g.dim() == 1 ? "t,x1,weight\n" : "t,x1,x2,weight\n") << std::setprecision(17);
  for (std::size_t k = 0; k < t.nodes(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      write_point(os, g, t, k, i);
      os << "," << curve.weight(k, i) << "\n";
    }
  }
}

MeasureCurve read_curve_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("empty curve CSV");
  const Header h = parse_grid_line(line);
  const StateGrid g(h.d, h.l, h.n);
  const TimeGrid t(h.horizon, h.k);
  std::vector<double> w(t.nodes() * g.size(), 0.0);
  std::vector<bool> seen(w.size(), false);
  read_rows(is, static_cast<std::size_t>(h.d) + 2, [&](const std::vector<double>& row, std::size_t lineno) {
    std::size_t k = 0;
    const std::size_t i = locate(g, t, row, k, lineno);
    if (k >= t.nodes()) throw ValidationError("line " + std::to_string(lineno) + ": time beyond the horizon");
    w[k * g.size() + i] = row.back();
    seen[k * g.size() + i] = true;
  });
  for (bool s : seen) {
    if (!s) throw ValidationError("curve CSV is missing grid points");
  }
  return MeasureCurve(g, t, std::move(w));
}

void write_control_csv(std::ostream& os, const ControlField& u) {
  const StateGrid& g = u.grid();
  const TimeGrid& t = u.times();
  os << grid_line(g, t) << "\n";
  os << (g.dim() == 1 ? "t,x1" : "t,x1,x2") << (u.control_dim() == 1 ? ",u1\n" : ",u1,u2\n") << std::setprecision(17);
  for (std::size_t k = 0; k < t.steps(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      write_point(os, g, t, k, i);
      const SVec v = u.at(k, i);
      for (int c = 0; c < u.control_dim(); ++c) os << "," << v(c);
      os << "\n";
    }
  }
}

ControlField read_control_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("empty control CSV");
  const Header h = parse_grid_line(line);
  const StateGrid g(h.d, h.l, h.n);
  const TimeGrid t(h.horizon, h.k);
  std::streampos pos = is.tellg();
  std::string columns;
  std::getline(is, columns);
  is.seekg(pos);
  std::size_t ncol = 1;
  for (char ch : columns) ncol += ch == ',';
  const int d1 = static_cast<int>(ncol) - 1 - h.d;
  if (d1 != 1 && d1 != 2) throw ValidationError("control CSV needs one or two control columns");
  ControlField u(g, t, d1, std::vector<double>(t.steps() * g.size() * static_cast<std::size_t>(d1), 0.0));
  std::vector<bool> seen(t.steps() * g.size(), false);
  read_rows(is, ncol, [&](const std::vector<double>& row, std::size_t lineno) {
    std::size_t k = 0;
    const std::size_t i = locate(g, t, row, k, lineno);
    if (k >= t.steps()) throw ValidationError("line " + std::to_string(lineno) + ": control time must be < T");
    SVec v(d1);
    for (int c = 0; c < d1; ++c) v(c) = row[1 + static_cast<std::size_t>(h.d + c)];
    u.set(k, i, v);
    seen[k * g.size() + i] = true;
  });
  for (bool s : seen) {
    if (!s) throw ValidationError("control CSV is missing grid points");
  }
  return u;
}

}  // namespace mfg
