#include "heatpinn/fe_oracle.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "heatpinn/errors.hpp"

namespace heatpinn {

void MeshConfig::validate() const {
  if (elements_per_direction < 2) throw ContractError("mesh: elements_per_direction must be >= 2");
  if (!(dt > 0) || !std::isfinite(dt)) throw ContractError("mesh: dt must be > 0");
  if (!(t_end >= dt) || !std::isfinite(t_end)) throw ContractError("mesh: t_end must be >= dt");
}

std::size_t FieldHistory::node_count() const noexcept {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.size();
  return axes.empty() ? 0 : n;
}

double FieldHistory::at(std::size_t time_index, std::size_t i, std::size_t j) const {
  return temps.at(time_index).at(i + axes.at(0).size() * j);
}

namespace {

// Semi-discrete system dT/dt = A T + b Tinf(t).
struct SemiDiscrete {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

// Central differences with a ghost node on each face. The ghost value is
// chosen so that h (Tinf - T) = k dT/dn holds to second order, n being the
// outward normal.
SemiDiscrete axis_operator(double alpha, double k, double length, int elements, double h_min,
                           double h_max) {
  const int n = elements + 1;
  const double dx = length / elements;
  const double c = alpha / (dx * dx);
  SemiDiscrete s{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (int i = 1; i + 1 < n; ++i) {
    s.a(i, i - 1) = c;
    s.a(i, i) = -2 * c;
    s.a(i, i + 1) = c;
  }
  const double robin_min = 2 * alpha * h_min / (k * dx);
  const double robin_max = 2 * alpha * h_max / (k * dx);
  s.a(0, 0) = -2 * c - robin_min;
  s.a(0, 1) = 2 * c;
  s.b(0) = robin_min;
  s.a(n - 1, n - 1) = -2 * c - robin_max;
  s.a(n - 1, n - 2) = 2 * c;
  s.b(n - 1) = robin_max;
  return s;
}

std::vector<double> axis_nodes(double length, int elements) {
  std::vector<double> nodes(elements + 1);
  for (int i = 0; i <= elements; ++i) nodes[i] = length * i / elements;
  nodes.back() = length;
  return nodes;
}

// Output times 0, dt, 2 dt, ..., t_end.
std::vector<double> output_times(const MeshConfig& mesh) {
  std::vector<double> times{0.0};
  const auto steps = static_cast<long>(std::floor(mesh.t_end / mesh.dt + 1e-9));
  for (long n = 1; n <= steps; ++n) times.push_back(n * mesh.dt);
  if (mesh.t_end - times.back() > 1e-9 * mesh.dt) times.push_back(mesh.t_end);
  return times;
}

class Stepper {
 public:
  Stepper(SemiDiscrete sys, const AirProfile& profile, TimeScheme scheme)
      : sys_(std::move(sys)), profile_(profile), scheme_(scheme) {
    for (const auto& b : profile_.breakpoints()) kinks_s_.push_back(b.time * 60.0);
  }

  FieldHistory run(std::vector<std::vector<double>> axes, const Eigen::VectorXd& init,
                   const MeshConfig& mesh) {
    if (mesh.t_end > profile_.total_duration() * 60.0 * (1 + 1e-12)) {
      throw DomainError("FE solve: t_end exceeds the air profile duration");
    }
    FieldHistory h;
    h.axes = std::move(axes);
    h.times = output_times(mesh);
    h.temps.reserve(h.times.size());
    Eigen::VectorXd temp = init;
    h.temps.emplace_back(temp.data(), temp.data() + temp.size());
    for (std::size_t n = 1; n < h.times.size(); ++n) {
      double ta = h.times[n - 1];
      const double tb = h.times[n];
      for (double kink : kinks_s_) {
        if (kink > ta && kink < tb) {
          advance(temp, ta, kink);
          ta = kink;
        }
      }
      advance(temp, ta, tb);
      if (!temp.allFinite()) throw NumericError("FE solve: non-finite temperature at t = " +
                                                std::to_string(tb) + " s");
      h.temps.emplace_back(temp.data(), temp.data() + temp.size());
    }
    return h;
  }

 private:
  double air(double t_s) const {
    return air_temperature(profile_, std::min(t_s / 60.0, profile_.total_duration()));
  }

  void advance(Eigen::VectorXd& temp, double ta, double tb) {
    const double tau = tb - ta;
    if (tau <= 0) return;
    const Eigen::Index n = temp.size();
    const double u0 = air(ta);
    const double u1 = air(tb);
    if (scheme_ == TimeScheme::exponential) {
      const Eigen::MatrixXd& e = propagator(tau);
      Eigen::VectorXd z(n + 2);
      z.head(n) = temp;
      z(n) = u0;
      z(n + 1) = (u1 - u0) / tau;
      temp = e.topRows(n) * z;
    } else {
      const Eigen::VectorXd rhs = temp + tau * u1 * sys_.b;
      temp = solve_implicit(tau, rhs);
    }
  }

  const Eigen::MatrixXd& propagator(double tau) {
    auto it = exp_cache_.find(tau);
    if (it != exp_cache_.end()) return it->second;
    const Eigen::Index n = sys_.a.rows();
    // d/dt [T; u; s] = [[A, b, 0], [0, 0, 1], [0, 0, 0]] [T; u; s]
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 2, n + 2);
    m.topLeftCorner(n, n) = sys_.a;
    m.block(0, n, n, 1) = sys_.b;
    m(n, n + 1) = 1.0;
    Eigen::MatrixXd e = (m * tau).exp();
    return exp_cache_.emplace(tau, std::move(e)).first->second;
  }

  Eigen::VectorXd solve_implicit(double tau, const Eigen::VectorXd& rhs) {
    const Eigen::Index n = sys_.a.rows();
    if (tridiagonal()) {
      // Thomas algorithm on (I - tau A).
      std::vector<double> lower(n), diag(n), upper(n), d(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        diag[i] = 1.0 - tau * sys_.a(i, i);
        lower[i] = i > 0 ? -tau * sys_.a(i, i - 1) : 0.0;
        upper[i] = i + 1 < n ? -tau * sys_.a(i, i + 1) : 0.0;
        d[i] = rhs(i);
      }
      for (Eigen::Index i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        d[i] -= w * d[i - 1];
      }
      Eigen::VectorXd x(n);
      x(n - 1) = d[n - 1] / diag[n - 1];
      for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = (d[i] - upper[i] * x(i + 1)) / diag[i];
      return x;
    }
    auto it = lu_cache_.find(tau);
    if (it == lu_cache_.end()) {
      Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(n, n) - tau * sys_.a;
      it = lu_cache_.emplace(tau, Eigen::PartialPivLU<Eigen::MatrixXd>(sys)).first;
    }
    return it->second.solve(rhs);
  }

  bool tridiagonal() const {
    const Eigen::Index n = sys_.a.rows();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(i - j) > 1 && sys_.a(i, j) != 0) return false;
    return true;
  }

  SemiDiscrete sys_;
  const AirProfile& profile_;
  TimeScheme scheme_;
  std::vector<double> kinks_s_;
  std::map<double, Eigen::MatrixXd> exp_cache_;
  std::map<double, Eigen::PartialPivLU<Eigen::MatrixXd>> lu_cache_;
};

void check_h(double h, const char* name) {
  if (!(h >= 0) || !std::isfinite(h)) {
    throw ContractError(std::string("FE solve: ") + name + " must be >= 0 (0 = insulated)");
  }
}

}  // namespace

FieldHistory solve_1d_from(const MaterialProps& props, double length, double h1, double h2,
                           const AirProfile& profile, const std::vector<double>& init_field,
                           const MeshConfig& mesh) {
  props.validate();
  mesh.validate();
  check_h(h1, "h1");
  check_h(h2, "h2");
  if (!(length > 0)) throw ContractError("FE solve: length must be > 0");
  const int ne = mesh.elements_per_direction;
  if (init_field.size() != static_cast<std::size_t>(ne + 1)) {
    throw ContractError("FE solve: initial field has wrong node count");
  }
  const double alpha = thermal_diffusivity(props);
  Stepper stepper(axis_operator(alpha, props.k, length, ne, h1, h2), profile, mesh.scheme);
  const Eigen::VectorXd init = Eigen::Map<const Eigen::VectorXd>(init_field.data(), ne + 1);
  return stepper.run({axis_nodes(length, ne)}, init, mesh);
}

FieldHistory solve_1d(const MaterialProps& props, double length, double h1, double h2,
                      const AirProfile& profile, double init_temp, const MeshConfig& mesh) {
  mesh.validate();
  return solve_1d_from(props, length, h1, h2, profile,
                       std::vector<double>(mesh.elements_per_direction + 1, init_temp), mesh);
}

FieldHistory solve_2d(const MaterialProps& props, double lx, double ly,
                      const std::array<EdgeBc, 4>& edges, const AirProfile& profile,
                      double init_temp, const MeshConfig& mesh) {
  props.validate();
  mesh.validate();
  for (const auto& e : edges) check_h(e.h, "edge h");
  if (!(lx > 0) || !(ly > 0)) throw ContractError("FE solve: lengths must be > 0");
  const int ne = mesh.elements_per_direction;
  const int n = ne + 1;
  const double alpha = thermal_diffusivity(props);
  const auto ax = axis_operator(alpha, props.k, lx, ne, edges[0].h, edges[1].h);
  const auto ay = axis_operator(alpha, props.k, ly, ne, edges[2].h, edges[3].h);

  // Kronecker sum with node index i + n * j.
  SemiDiscrete sys{Eigen::MatrixXd::Zero(n * n, n * n), Eigen::VectorXd::Zero(n * n)};
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int row = i + n * j;
      for (int q = 0; q < n; ++q) {
        sys.a(row, q + n * j) += ax.a(i, q);
        sys.a(row, i + n * q) += ay.a(j, q);
      }
      sys.b(row) = ax.b(i) + ay.b(j);
    }
  }
  Stepper stepper(std::move(sys), profile, mesh.scheme);
  const Eigen::VectorXd init = Eigen::VectorXd::Constant(n * n, init_temp);
  return stepper.run({axis_nodes(lx, ne), axis_nodes(ly, ne)}, init, mesh);
}

namespace {

// Index of the cell [i, i+1] containing v and the weight of node i+1.
std::pair<std::size_t, double> locate(const std::vector<double>& grid, double v,
                                      const char* what) {
  const double lo = grid.front();
  const double hi = grid.back();
  const double tol = 1e-12 * std::max(1.0, std::abs(hi - lo));
  if (!(v >= lo - tol && v <= hi + tol)) {
    throw DomainError(std::string("probe: ") + what + " = " + std::to_string(v) +
                      " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  if (grid.size() == 1) return {0, 0.0};
  v = std::clamp(v, lo, hi);
  auto it = std::upper_bound(grid.begin(), grid.end(), v);
  std::size_t i = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
  if (i + 1 >= grid.size()) i = grid.size() - 2;
  const double w = (v - grid[i]) / (grid[i + 1] - grid[i]);
  return {i, w};
}

double spatial(const FieldHistory& h, std::size_t k, double x, double y) {
  const auto [i, wx] = locate(h.axes[0], x, "x");
  if (h.dimensionality() == 1) {
    const double a = h.at(k, i);
    return wx == 0 ? a : a + wx * (h.at(k, i + 1) - a);
  }
  const auto [j, wy] = locate(h.axes[1], y, "y");
  const auto node = [&](std::size_t ii, std::size_t jj) { return h.at(k, ii, jj); };
  const std::size_t i1 = std::min(i + 1, h.axes[0].size() - 1);
  const std::size_t j1 = std::min(j + 1, h.axes[1].size() - 1);
  const double low = (1 - wx) * node(i, j) + wx * node(i1, j);
  const double high = (1 - wx) * node(i, j1) + wx * node(i1, j1);
  return (1 - wy) * low + wy * high;
}

}  // namespace

double probe(const FieldHistory& history, double x, double y, double t) {
  if (history.times.empty()) throw DomainError("probe: empty history");
  const auto [k, wt] = locate(history.times, t, "t");
  const double a = spatial(history, k, x, y);
  if (wt == 0) return a;
  return a + wt * (spatial(history, k + 1, x, y) - a);
}

std::vector<double> slice_at(const FieldHistory& history, double t) {
  const auto [k, wt] = locate(history.times, t, "t");
  std::vector<double> out = history.temps[k];
  if (wt != 0) {
    for (std::size_t n = 0; n < out.size(); ++n) {
      out[n] += wt * (history.temps[k + 1][n] - out[n]);
    }
  }
  return out;
}

double max_principle_violation(const FieldHistory& history, double lo, double hi) {
  double worst = 0;
  for (const auto& slice : history.temps) {
    for (double v : slice) {
      if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
      worst = std::max({worst, lo - v, v - hi});
    }
  }
  return worst;
}

namespace {

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_field_csv(std::ostream& os, const FieldHistory& history) {
  os << "time_s";
  const auto& xs = history.axes.at(0);
  if (history.dimensionality() == 1) {
    for (double x : xs) os << ',' << fmt_num(x);
  } else {
    for (double y : history.axes.at(1))
      for (double x : xs) os << ',' << fmt_num(x) << ':' << fmt_num(y);
  }
  os << '\n';
  for (std::size_t k = 0; k < history.times.size(); ++k) {
    os << fmt_num(history.times[k]);
    for (double v : history.temps[k]) os << ',' << fmt_num(v);
    os << '\n';
  }
}

void write_field_csv(const std::string& path, const FieldHistory& history) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::ios_base::failure("cannot open " + path + " for writing");
  write_field_csv(os, history);
  if (!os) throw std::ios_base::failure("write failed: " + path);
}

FieldHistory read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("field CSV: missing header");
  std::stringstream header(line);
  std::string cell;
  std::getline(header, cell, ',');
  if (cell != "time_s") throw FormatError("field CSV: header must start with time_s");
  std::vector<std::pair<double, double>> nodes;
  bool two_d = false;
  while (std::getline(header, cell, ',')) {
    const auto colon = cell.find(':');
    try {
      if (colon == std::string::npos) {
        nodes.emplace_back(std::stod(cell), 0.0);
      } else {
        two_d = true;
        nodes.emplace_back(std::stod(cell.substr(0, colon)), std::stod(cell.substr(colon + 1)));
      }
    } catch (const std::exception&) {
      throw FormatError("field CSV: bad node label '" + cell + "'");
    }
  }
  FieldHistory h;
  std::vector<double> xs, ys;
  for (const auto& [x, y] : nodes) {
    if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
    if (std::find(ys.begin(), ys.end(), y) == ys.end()) ys.push_back(y);
  }
  h.axes.push_back(xs);
  if (two_d) h.axes.push_back(ys);
  if (h.node_count() != nodes.size()) throw FormatError("field CSV: nodes do not form a grid");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::vector<double> values;
    while (std::getline(row, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("field CSV: bad value '" + cell + "'");
      }
    }
    if (values.size() != nodes.size() + 1) throw FormatError("field CSV: ragged row");
    h.times.push_back(values.front());
    h.temps.emplace_back(values.begin() + 1, values.end());
  }
  return h;
}

}  // namespace heatpinn
