#include "lob/analytics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "lob/errors.hpp"

namespace lob {

double lambert_w_of_inv_e() {
  const double target = std::exp(-1.0);
  double lo = 0.2, hi = 0.3;
  double w = 0.25;
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double g = w * ew - target;
    if (g == 0.0) break;
    if (g < 0) {
      lo = w;
    } else {
      hi = w;
    }
    double next = w - g / (ew * (1.0 + w));
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - w) <= 1e-17) {
      w = next;
      break;
    }
    w = next;
  }
  return w;
}

KappaPair kappa_uniform_exact() {
  const double w = lambert_w_of_inv_e();
  const double k = w / (w + 1.0);
  return {k, 1.0 - k};
}

double varpi_uniform_exact(double x) {
  const double k = kappa_uniform_exact().kappa_b;
  if (x < k - 1e-12 || x > 1.0 - k + 1e-12) {
    throw std::domain_error("varpi_uniform_exact: x outside [kappa, 1-kappa]");
  }
  return (1.0 - k) * (1.0 / x + std::log((1.0 - x) / x));
}

namespace {

using State = std::array<double, 2>;

std::vector<double> observation_grid(const ArrivalSpec& spec, double a, double b, std::size_t n) {
  std::vector<double> g;
  g.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n));
  g.back() = b;
  for (const PriceDist* d : {&spec.bid, &spec.ask}) {
    for (double p : d->breakpoints()) {
      if (p > a && p < b) g.push_back(p);
    }
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

void check_coefficients(const ArrivalSpec& spec, const std::vector<double>& grid) {
  for (double x : grid) {
    if (spec.ask.cdf(x) <= 1e-14) {
      std::ostringstream os;
      os << std::setprecision(17) << "singular coefficient: F_a(" << x << ") = 0";
      throw numeric_error(os.str());
    }
    if (1.0 - spec.bid.cdf(x) <= 1e-14) {
      std::ostringstream os;
      os << std::setprecision(17) << "singular coefficient: F_b(" << x << ") = 1";
      throw numeric_error(os.str());
    }
  }
}

}  // namespace

VarpiPath integrate_varpi(const ArrivalSpec& spec, double kappa_b, std::size_t grid_n) {
  namespace odeint = boost::numeric::odeint;
  const double level = spec.bid.cdf(kappa_b);
  if (!(level > 0.0 && level < 0.5)) throw std::domain_error("integrate_varpi: F_b(kappa_b) must lie in (0, 1/2)");
  if (grid_n < 1) throw std::invalid_argument("integrate_varpi: grid_n must be positive");
  VarpiPath path;
  path.kappa_b = kappa_b;
  path.kappa_a = spec.ask.quantile(1.0 - level);
  if (!(path.kappa_a > kappa_b)) throw std::domain_error("integrate_varpi: kappa_a does not exceed kappa_b");

  const std::vector<double> times = observation_grid(spec, kappa_b, path.kappa_a, grid_n);
  check_coefficients(spec, times);

  auto rhs = [&spec](const State& s, State& ds, double x) {
    ds[0] = -spec.ask.density(x) * s[1] / (1.0 - spec.bid.cdf(x));
    ds[1] = spec.bid.density(x) * s[0] / spec.ask.cdf(x);
  };
  State s{1.0, 0.0};
  auto stepper = odeint::make_controlled(1e-12, 1e-10, odeint::runge_kutta_dopri5<State>());
  const double dt = (path.kappa_a - kappa_b) / static_cast<double>(4 * grid_n);
  odeint::integrate_times(stepper, rhs, s, times.begin(), times.end(), dt, [&](const State& st, double x) {
    path.x.push_back(x);
    path.u.push_back(st[0]);
    path.v.push_back(st[1]);
  });
  path.u_end = path.u.back();
  path.v_end = path.v.back();
  return path;
}

double lower_bound_3bin(double x_level, double y_level) {
  if (!(x_level < y_level)) throw std::domain_error("lower_bound_3bin: need X < Y");
  if (!(x_level > 0.0 && y_level < 1.0)) throw std::domain_error("lower_bound_3bin: need 0 < X < Y < 1");
  return (2.0 * x_level * (1.0 - x_level) - (1.0 - y_level)) / ((1.0 - x_level) + (y_level - x_level));
}

boost::rational<std::int64_t> lower_bound_3bin(boost::rational<std::int64_t> x_level,
                                               boost::rational<std::int64_t> y_level) {
  using R = boost::rational<std::int64_t>;
  const R zero{0}, one{1}, two{2};
  if (!(x_level < y_level)) throw std::domain_error("lower_bound_3bin: need X < Y");
  if (!(x_level > zero && y_level < one)) throw std::domain_error("lower_bound_3bin: need 0 < X < Y < 1");
  return (two * x_level * (one - x_level) - (one - y_level)) / ((one - x_level) + (y_level - x_level));
}

std::optional<FinitenessCertificate> finiteness_certificate(const ArrivalSpec& spec) {
  std::optional<FinitenessCertificate> best;
  constexpr int kSteps = 2000;
  for (int i = 1; i < kSteps; ++i) {
    const double level = 0.5 * static_cast<double>(i) / kSteps;
    const double x = spec.bid.quantile(level);
    const double y = spec.ask.quantile(1.0 - level);
    if (!(x < y)) continue;
    const double y_level = spec.bid.cdf(y);
    if (std::abs(y_level - (1.0 - spec.ask.cdf(x))) > 1e-9) continue;
    if (!(level < y_level && y_level < 1.0)) continue;
    const double bound = lower_bound_3bin(level, y_level);
    if (bound > 0.0 && (!best || bound > best->bound)) best = FinitenessCertificate{level, y_level, bound};
  }
  return best;
}

namespace {

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

}  // namespace

VarpiSolution shoot_kappa(const ArrivalSpec& spec, const ShootOptions& options) {
  double lower = 0.0;
  if (options.lower_level) {
    lower = *options.lower_level;
  } else {
    const auto cert = finiteness_certificate(spec);
    if (!cert) {
      throw numeric_error("shoot_kappa: no 3-bin finiteness certificate; supply a lower level to override");
    }
    lower = cert->bound;
  }
  if (!(lower >= 0.0 && lower < 0.5)) throw std::domain_error("shoot_kappa: lower level must lie in [0, 1/2)");
  if (options.scan_points < 2) throw std::invalid_argument("shoot_kappa: need at least 2 scan points");

  const std::size_t coarse_n = std::min<std::size_t>(options.grid_n, 200);
  auto u_end_at = [&](double level) {
    return integrate_varpi(spec, spec.bid.quantile(level), coarse_n).u_end;
  };

  // levels above `upper` put kappa_a at or below kappa_b
  auto gap = [&](double level) { return spec.ask.quantile(1.0 - level) - spec.bid.quantile(level); };
  double upper = 0.5;
  if (!(gap(upper) > 0.0)) {
    if (!(gap(lower) > 0.0)) throw std::domain_error("shoot_kappa: kappa_a does not exceed kappa_b at the lower level");
    double lo = lower;
    for (int it = 0; it < 200 && upper - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + upper);
      (gap(mid) > 0.0 ? lo : upper) = mid;
    }
    upper = lo;
  }

  const std::size_t m = options.scan_points;
  std::vector<double> levels(m), values(m);
  for (std::size_t i = 0; i < m; ++i) {
    levels[i] = lower + (upper - lower) * (static_cast<double>(i) + 0.5) / static_cast<double>(m);
    if (levels[i] <= 0.0) levels[i] = 1e-9;
    values[i] = u_end_at(levels[i]);
  }
  std::vector<std::pair<double, double>> brackets;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (values[i] == 0.0) brackets.emplace_back(levels[i], levels[i]);
    if ((values[i] < 0.0) != (values[i + 1] < 0.0) && values[i + 1] != 0.0) {
      brackets.emplace_back(levels[i], levels[i + 1]);
    }
  }
  if (brackets.empty()) throw numeric_error("shoot_kappa: no finite threshold located");
  if (brackets.size() > 1) {
    std::ostringstream os;
    os << "shoot_kappa: ambiguous threshold, sign changes in F_b levels";
    for (auto [a, b] : brackets) os << " [" << a << ", " << b << "]";
    throw numeric_error(os.str());
  }

  auto [a, b] = brackets.front();
  double fa = u_end_at(a);
  double level = a;
  std::size_t bisections = 0;
  if (a != b) {
    for (; bisections < 200; ++bisections) {
      level = 0.5 * (a + b);
      const double f = u_end_at(level);
      if (std::abs(f) <= options.tol || b - a <= 1e-15) break;
      if ((f < 0.0) == (fa < 0.0)) {
        a = level;
        fa = f;
      } else {
        b = level;
      }
    }
  }

  const VarpiPath path = integrate_varpi(spec, spec.bid.quantile(level), options.grid_n);
  VarpiSolution sol;
  sol.kappa_b = path.kappa_b;
  sol.kappa_a = path.kappa_a;
  sol.fb_kappa = level;
  sol.lower_level = lower;
  sol.grid = path.x;
  sol.u_end = path.u_end;
  sol.v_end = path.v_end;
  sol.bisections = bisections;
  std::vector<double> db, da;
  for (std::size_t i = 0; i < path.x.size(); ++i) {
    const double x = path.x[i];
    sol.varpi_b.push_back(std::max(0.0, path.u[i]) / spec.ask.cdf(x));
    sol.varpi_a.push_back(path.v[i] / (1.0 - spec.bid.cdf(x)));
    db.push_back(sol.varpi_b.back() * spec.bid.density(x));
    da.push_back(sol.varpi_a.back() * spec.ask.density(x));
  }
  sol.mass_b = trapezoid(sol.grid, db);
  sol.mass_a = trapezoid(sol.grid, da);
  return sol;
}

namespace {

struct PiSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd rhs0;  // right-hand side at F_b level 0
  Eigen::VectorXd rhs1;  // derivative of the right-hand side in the F_b level
};

PiSystem build_pi_system(const ArrivalSpec& spec, const BinPartition& bins, std::size_t kb, std::size_t ka) {
  const std::size_t m = ka - kb + 1;
  const std::vector<double> bm = bin_masses(bins, spec.bid);
  const std::vector<double> am = bin_masses(bins, spec.ask);
  PiSystem s{Eigen::MatrixXd::Zero(2 * m, 2 * m), Eigen::VectorXd::Zero(2 * m), Eigen::VectorXd::Zero(2 * m)};
  // Unknowns: pi_b(kb..ka) at columns 0..m-1, pi_a(kb..ka) at columns m..2m-1.
  std::size_t row = 0;
  for (std::size_t k = kb; k < ka; ++k, ++row) {
    const std::size_t j = k - kb;
    for (std::size_t l = 0; l <= j; ++l) s.a(row, m + l) -= bm[k];
    s.a(row, j) -= spec.ask.cdf(bins.upper(k));
    s.rhs0(row) = -bm[k];
    if (k == kb) {
      s.rhs0(row) += -spec.bid.cdf(bins.lower(kb));
      s.rhs1(row) = 1.0;
    }
  }
  for (std::size_t k = kb + 1; k <= ka; ++k, ++row) {
    const std::size_t j = k - kb;
    for (std::size_t l = j; l < m; ++l) s.a(row, l) -= am[k];
    s.a(row, m + j) -= 1.0 - spec.bid.cdf(bins.lower(k));
    s.rhs0(row) = -am[k];
    if (k == ka) {
      s.rhs0(row) += spec.ask.cdf(bins.upper(ka)) - 1.0;
      s.rhs1(row) = 1.0;
    }
  }
  for (std::size_t l = 0; l < m; ++l) s.a(row, l) = 1.0;
  s.rhs0(row++) = 1.0;
  for (std::size_t l = 0; l < m; ++l) s.a(row, m + l) = 1.0;
  s.rhs0(row++) = 1.0;
  return s;
}

}  // namespace

BinnedPi solve_binned_pi(const ArrivalSpec& spec, const BinPartition& bins, std::size_t k_b, std::size_t k_a,
                         double fb_kappa, const BinnedPiOptions& options) {
  if (!(k_b < k_a) || k_a >= bins.size()) throw std::invalid_argument("solve_binned_pi: need k_b < k_a < N");
  const std::size_t m = k_a - k_b + 1;
  const PiSystem sys = build_pi_system(spec, bins, k_b, k_a);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.a);
  auto solve_at = [&](double level) -> Eigen::VectorXd { return lu.solve(sys.rhs0 + level * sys.rhs1); };

  double level = fb_kappa;
  if (options.calibrate) {
    const double l0 = spec.bid.cdf(bins.lower(k_b));
    const double l1 = spec.bid.cdf(bins.upper(k_b));
    const double p0 = solve_at(l0)(m - 1);
    const double p1 = solve_at(l1)(m - 1);
    if (p0 == p1) throw numeric_error("solve_binned_pi: top bid mass does not depend on the threshold level");
    level = l0 + (l1 - l0) * p0 / (p0 - p1);
  }
  const Eigen::VectorXd x = solve_at(level);
  const Eigen::VectorXd r = sys.a * x - (sys.rhs0 + level * sys.rhs1);
  if (!x.allFinite()) throw numeric_error("solve_binned_pi: singular balance system");

  BinnedPi out;
  out.k_b = k_b;
  out.k_a = k_a;
  out.fb_kappa = level;
  out.residual = r.lpNorm<Eigen::Infinity>();
  out.pi_b.assign(bins.size(), 0.0);
  out.pi_a.assign(bins.size(), 0.0);
  out.feasible = true;
  for (std::size_t j = 0; j < m; ++j) {
    out.pi_b[k_b + j] = x(j);
    out.pi_a[k_b + j] = x(m + j);
    if (x(j) < -1e-12 || x(m + j) < -1e-12) out.feasible = false;
  }
  if (options.calibrate) out.pi_b[k_a] = std::max(0.0, out.pi_b[k_a]);
  return out;
}

namespace {

std::vector<double> bin_linear_integral(const std::vector<double>& x, const std::vector<double>& g,
                                        const BinPartition& bins) {
  std::vector<double> out(bins.size(), 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double x0 = x[i], x1 = x[i + 1];
    if (!(x1 > x0)) continue;
    const double slope = (g[i + 1] - g[i]) / (x1 - x0);
    double lo = x0;
    while (lo < x1) {
      const std::size_t k = bins.bin_of(lo);
      const double hi = std::min(x1, bins.upper(k));
      const double mid = 0.5 * (lo + hi);
      out[k] += (hi - lo) * (g[i] + slope * (mid - x0));
      if (hi <= lo) break;
      lo = hi;
    }
  }
  return out;
}

}  // namespace

BinnedVarpi bin_varpi(const VarpiSolution& sol, const ArrivalSpec& spec, const BinPartition& bins) {
  std::vector<double> gb(sol.grid.size()), ga(sol.grid.size());
  for (std::size_t i = 0; i < sol.grid.size(); ++i) {
    gb[i] = sol.varpi_b[i] * spec.bid.density(sol.grid[i]);
    ga[i] = sol.varpi_a[i] * spec.ask.density(sol.grid[i]);
  }
  return {bin_linear_integral(sol.grid, gb, bins), bin_linear_integral(sol.grid, ga, bins)};
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

void write_varpi_csv(std::ostream& out, const VarpiSolution& sol, const ArrivalSpec& spec, const OutputTag& tag) {
  write_tag(out, tag);
  out << "x,varpi_b,varpi_a,density_b,density_a\n" << std::setprecision(17);
  for (std::size_t i = 0; i < sol.grid.size(); ++i) {
    const double x = sol.grid[i];
    out << x << ',' << sol.varpi_b[i] << ',' << sol.varpi_a[i] << ',' << sol.varpi_b[i] * spec.bid.density(x) << ','
        << sol.varpi_a[i] * spec.ask.density(x) << '\n';
  }
}

nlohmann::json varpi_summary(const VarpiSolution& sol) {
  return {{"kappa_b", sol.kappa_b},       {"kappa_a", sol.kappa_a},   {"fb_kappa", sol.fb_kappa},
          {"lower_level", sol.lower_level}, {"u_end", sol.u_end},     {"v_end", sol.v_end},
          {"mass_b", sol.mass_b},         {"mass_a", sol.mass_a},     {"grid_size", sol.grid.size()},
          {"bisections", sol.bisections}};
}

}  // namespace lob
