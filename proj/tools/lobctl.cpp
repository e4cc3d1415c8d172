#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lob/analytics.hpp"
#include "lob/book.hpp"
#include "lob/coupling.hpp"
#include "lob/dist.hpp"
#include "lob/dist_config.hpp"
#include "lob/errors.hpp"
#include "lob/lyapunov.hpp"
#include "lob/sim.hpp"
#include "lob/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;
constexpr int kCheckFailed = 4;

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = 1;
  std::size_t seeds = 1;
  std::vector<std::uint64_t> seed_list;
  std::string dist = "uniform";
  std::string spec;
  std::string out = "out";
  std::string hash;

  std::vector<std::uint64_t> all_seeds() const {
    if (!seed_list.empty()) return seed_list;
    std::vector<std::uint64_t> s;
    for (std::size_t i = 0; i < seeds; ++i) s.push_back(seed + i);
    return s;
  }

  lob::OutputTag tag(std::uint64_t s) const { return {s, hash}; }
};

lob::ArrivalSpec spec_from(const std::string& dist, const std::string& spec) {
  try {
    if (spec.empty()) return lob::named_arrival_spec(dist);
    json doc;
    if (spec.front() == '{') {
      doc = json::parse(spec);
    } else {
      std::ifstream in(spec);
      if (!in) throw config_error("cannot open spec file '" + spec + "'");
      doc = json::parse(in);
    }
    lob::ArrivalSpec s = lob::arrival_spec_from_json(doc);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw config_error(std::string("spec: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("spec: ") + e.what());
  }
}

lob::ArrivalSpec load_spec(const Common& c) { return spec_from(c.dist, c.spec); }

bool is_unit_uniform(const lob::ArrivalSpec& s) {
  auto unit = [](const lob::PriceDist& d) {
    return d.kind() == "uniform" && d.support().lo == 0.0 && d.support().hi == 1.0;
  };
  return s.p_bid == 0.5 && unit(s.bid) && unit(s.ask);
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name);
  if (!f) throw config_error("cannot write " + (dir / name).string());
  return f;
}

void write_summary(const fs::path& dir, json doc, const Common& c, std::uint64_t seed) {
  doc["seed"] = seed;
  doc["config"] = c.hash;
  open_out(dir, "summary.json") << doc.dump(2) << '\n';
}

lob::Rational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      return {std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1))};
    }
    const auto dot = text.find('.');
    if (dot == std::string::npos) return lob::Rational(std::stoll(text));
    const std::string frac = text.substr(dot + 1);
    if (frac.size() > 15) throw config_error("too many decimals in '" + text + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::string whole = text.substr(0, dot);
    const bool neg = !whole.empty() && whole.front() == '-';
    const std::int64_t w = whole.empty() || whole == "-" ? 0 : std::stoll(whole);
    const std::int64_t f = frac.empty() ? 0 : std::stoll(frac);
    return lob::Rational(w) + lob::Rational(neg ? -f : f, den);
  } catch (const std::logic_error&) {
    throw config_error("not a rational number: '" + text + "'");
  }
}

std::string show(const lob::Rational& r) {
  std::ostringstream s;
  s << r.numerator();
  if (r.denominator() != 1) s << '/' << r.denominator();
  return s.str();
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

lob::MatchRule rule_from(const std::string& name, const lob::BinPartition& bins) {
  if (name == "ordinary") return lob::MatchRule::ordinary();
  if (name == "binned") return lob::MatchRule::ordinary_binned(bins);
  if (name == "strict") return lob::MatchRule::strict_binned(bins);
  throw config_error("unknown rule '" + name + "'");
}

void add_common(CLI::App* sub, Common& c, bool with_dist, bool replicas) {
  sub->add_option("--seed", c.seed, "base seed");
  if (replicas) {
    sub->add_option("--seeds", c.seeds, "number of replicas (seed, seed+1, ...)")->check(CLI::PositiveNumber);
    sub->add_option("--seed-list", c.seed_list, "explicit replica seeds");
  }
  if (with_dist) {
    sub->add_option("--dist", c.dist, "named arrival law")->check(CLI::IsMember({"uniform", "triangular", "mixed"}));
    sub->add_option("--spec", c.spec, "arrival law as a JSON file or inline JSON");
  }
  sub->add_option("--out", c.out, "output directory");
}

// simulate ------------------------------------------------------------------

struct SimulateOpts {
  std::string rule = "ordinary";
  std::uint64_t n = 0;
  std::size_t bins = 100;
  std::uint64_t record_every = 0;
  double burn_in = 0.5;
  std::string time_mode = "event";
  std::size_t top_depth = 10;
  std::size_t top_min_bin = 0;
  std::vector<std::size_t> mid_bins;
};

struct SimOutcome {
  std::uint64_t seed = 0;
  lob::Trace trace;
  std::optional<lob::KappaEstimate> kappa;
  std::string kappa_note;
};

int cmd_simulate(const Common& c, const SimulateOpts& o) {
  const lob::ArrivalSpec spec = load_spec(c);
  if (o.bins == 0) throw config_error("--bins must be positive");
  if (!o.mid_bins.empty() && o.mid_bins.size() != 2) throw config_error("--mid-bins takes two bins");
  const lob::BinPartition bins = lob::make_partition(o.bins, spec);
  const lob::MatchRule rule = rule_from(o.rule, bins);
  lob::RecorderOptions ro;
  ro.bins = bins;
  ro.burn_in_fraction = o.burn_in;
  ro.top_depth = o.top_depth;
  if (o.mid_bins.size() == 2) {
    ro.mid_bid_bin = o.mid_bins[0];
    ro.mid_ask_bin = o.mid_bins[1];
  }
  const lob::TimeMode mode = o.time_mode == "poisson" ? lob::TimeMode::poisson : lob::TimeMode::event_count;

  const auto seeds = c.all_seeds();
  auto outcomes = lob::run_replicas(seeds, [&](std::uint64_t s) {
    SimOutcome r;
    r.seed = s;
    r.trace = lob::run(rule, lob::BookState{}, lob::ArrivalStream{s, o.n, spec, mode}, o.record_every, ro);
    try {
      r.kappa = lob::estimate_kappa(r.trace, spec);
    } catch (const std::domain_error& e) {
      r.kappa_note = e.what();
    }
    return r;
  });

  std::vector<double> kb;
  std::cout << std::setprecision(6);
  for (const SimOutcome& r : outcomes) {
    const fs::path dir = seeds.size() == 1 ? fs::path(c.out) : fs::path(c.out) / ("seed_" + std::to_string(r.seed));
    const lob::OutputTag tag = c.tag(r.seed);
    {
      auto f = open_out(dir, "checkpoints.csv");
      lob::write_checkpoints_csv(f, r.trace, tag);
    }
    {
      auto f = open_out(dir, "occupation.csv");
      lob::write_occupation_csv(f, r.trace, tag);
    }
    {
      auto f = open_out(dir, "joint.csv");
      lob::write_joint_csv(f, r.trace, tag);
    }
    {
      auto f = open_out(dir, "top_shape.csv");
      lob::write_top_shape_csv(f, r.trace, o.top_min_bin, tag);
    }
    if (o.mid_bins.size() == 2) {
      auto f = open_out(dir, "mid_series.csv");
      lob::write_mid_series_csv(f, r.trace, tag);
    }
    json doc = {{"events", r.trace.events},           {"elapsed", r.trace.elapsed},
                {"bid_arrivals", r.trace.bid_arrivals}, {"ask_arrivals", r.trace.ask_arrivals},
                {"executions", r.trace.executions},     {"rule", o.rule},
                {"bins", o.bins}};
    if (r.kappa) {
      doc["kappa_b"] = r.kappa->kappa_b;
      doc["kappa_a"] = r.kappa->kappa_a;
      doc["fb_kappa"] = r.kappa->fb_kappa;
      doc["spread_b"] = r.kappa->spread_b;
      doc["spread_a"] = r.kappa->spread_a;
      kb.push_back(r.kappa->kappa_b);
      std::cout << "seed " << r.seed << ": kappa_b=" << r.kappa->kappa_b << " kappa_a=" << r.kappa->kappa_a
                << " (events " << r.trace.events << ")\n";
    } else {
      doc["kappa_note"] = r.kappa_note;
      std::cout << "seed " << r.seed << ": kappa not estimated (" << r.kappa_note << ")\n";
    }
    write_summary(dir, doc, c, r.seed);
  }
  if (kb.size() > 1) {
    std::sort(kb.begin(), kb.end());
    std::cout << "median kappa_b=" << kb[kb.size() / 2] << '\n';
  }
  return kOk;
}

// kappa ---------------------------------------------------------------------

struct KappaOpts {
  std::string mode = "ode";
  bool compare = false;
  std::uint64_t n = 1'000'000;
  double tol = 1e-10;
  std::optional<double> lower;
  double mc_tolerance = 0.02;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

int cmd_kappa(const Common& c, const KappaOpts& o) {
  const lob::ArrivalSpec spec = load_spec(c);
  const bool uniform = is_unit_uniform(spec);
  if (!o.compare && o.mode == "exact" && !uniform) throw config_error("exact mode needs uniform bids and asks on [0,1]");

  std::map<std::string, lob::KappaPair> got;
  std::cout << std::setprecision(12);
  auto want = [&](const std::string& m) {
    if (o.compare) return m != "exact" || uniform;
    return o.mode == m;
  };
  if (want("exact")) {
    const lob::KappaPair k = lob::kappa_uniform_exact();
    const double w = lob::lambert_w_of_inv_e();
    got["exact"] = k;
    std::cout << "exact: kappa_b=" << k.kappa_b << " kappa_a=" << k.kappa_a
              << " residual=" << std::abs(w * std::exp(w) - std::exp(-1.0)) << '\n';
  }
  if (want("ode")) {
    lob::ShootOptions so;
    so.tol = o.tol;
    so.lower_level = o.lower;
    const lob::VarpiSolution s = lob::shoot_kappa(spec, so);
    got["ode"] = {s.kappa_b, s.kappa_a};
    std::cout << "ode: kappa_b=" << s.kappa_b << " kappa_a=" << s.kappa_a << " residual=" << std::abs(s.u_end)
              << " v_end=" << s.v_end << '\n';
  }
  if (want("mc")) {
    const auto seeds = c.all_seeds();
    const lob::MatchRule rule = lob::MatchRule::ordinary();
    lob::RecorderOptions ro;
    ro.top_depth = 0;
    ro.bins = lob::BinPartition::equal_width(1, spec.bid.support());
    auto est = lob::run_replicas(seeds, [&](std::uint64_t s) {
      return lob::estimate_kappa(lob::run(rule, {}, lob::ArrivalStream{s, o.n, spec}, 0, ro), spec);
    });
    std::vector<double> kb, ka;
    for (const auto& e : est) {
      kb.push_back(e.kappa_b);
      ka.push_back(e.kappa_a);
    }
    got["mc"] = {median(kb), median(ka)};
    std::cout << "mc: kappa_b=" << got["mc"].kappa_b << " kappa_a=" << got["mc"].kappa_a << " (median of "
              << seeds.size() << " seeds, n=" << o.n << ", tail spread " << est.front().spread_b << ")\n";
  }

  bool ok = true;
  if (o.compare) {
    for (auto i = got.begin(); i != got.end(); ++i) {
      for (auto j = std::next(i); j != got.end(); ++j) {
        const double d = std::max(std::abs(i->second.kappa_b - j->second.kappa_b),
                                  std::abs(i->second.kappa_a - j->second.kappa_a));
        const bool involves_mc = i->first == "mc" || j->first == "mc";
        const double limit = involves_mc ? o.mc_tolerance : 1e-6;
        std::cout << verdict(d <= limit) << " |" << i->first << " - " << j->first << "| = " << d << " (limit "
                  << limit << ")\n";
        ok = ok && d <= limit;
      }
    }
  }
  return ok ? kOk : kCheckFailed;
}

// ode -----------------------------------------------------------------------

struct OdeOpts {
  double tol = 1e-10;
  std::size_t grid = 1000;
  std::optional<double> lower;
};

int cmd_ode(const Common& c, const OdeOpts& o) {
  const lob::ArrivalSpec spec = load_spec(c);
  lob::ShootOptions so;
  so.tol = o.tol;
  so.grid_n = o.grid;
  so.lower_level = o.lower;
  const lob::VarpiSolution s = lob::shoot_kappa(spec, so);
  auto f = open_out(c.out, "varpi.csv");
  lob::write_varpi_csv(f, s, spec, c.tag(c.seed));
  json doc = lob::varpi_summary(s);
  if (is_unit_uniform(spec)) {
    double sup = 0.0;
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
      sup = std::max(sup, std::abs(s.varpi_b[i] - lob::varpi_uniform_exact(s.grid[i])));
    }
    doc["sup_error_vs_closed_form"] = sup;
  }
  write_summary(c.out, doc, c, c.seed);
  std::cout << doc.dump(2) << '\n';
  return kOk;
}

// pi ------------------------------------------------------------------------

struct PiOpts {
  std::size_t bins = 100;
  bool no_calibrate = false;
  std::optional<double> lower;
};

int cmd_pi(const Common& c, const PiOpts& o) {
  const lob::ArrivalSpec spec = load_spec(c);
  if (o.bins < 3) throw config_error("--bins must be at least 3");
  lob::ShootOptions so;
  so.lower_level = o.lower;
  const lob::VarpiSolution s = lob::shoot_kappa(spec, so);
  const lob::BinPartition bins = lob::make_partition(o.bins, spec);
  const std::size_t kb = bins.bin_of(s.kappa_b);
  const std::size_t ka = bins.bin_of(s.kappa_a);
  lob::BinnedPiOptions po;
  po.calibrate = !o.no_calibrate;
  const lob::BinnedPi pi = lob::solve_binned_pi(spec, bins, kb, ka, s.fb_kappa, po);
  const lob::BinnedVarpi ref = lob::bin_varpi(s, spec, bins);

  auto f = open_out(c.out, "pi.csv");
  lob::write_tag(f, c.tag(c.seed));
  f << "bin_lo,bin_hi,pi_b,pi_a,varpi_b_mass,varpi_a_mass\n" << std::setprecision(17);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    f << bins.lower(k) << ',' << bins.upper(k) << ',' << pi.pi_b[k] << ',' << pi.pi_a[k] << ',' << ref.b[k] << ','
      << ref.a[k] << '\n';
  }
  const json doc = {{"bins", o.bins},
                    {"k_b", kb},
                    {"k_a", ka},
                    {"fb_kappa", pi.fb_kappa},
                    {"fb_kappa_ode", s.fb_kappa},
                    {"residual", pi.residual},
                    {"feasible", pi.feasible},
                    {"tv_b_vs_varpi", lob::total_variation(pi.pi_b, ref.b)},
                    {"tv_a_vs_varpi", lob::total_variation(pi.pi_a, ref.a)}};
  write_summary(c.out, doc, c, c.seed);
  std::cout << doc.dump(2) << '\n';
  return kOk;
}

// check ---------------------------------------------------------------------

struct CheckOpts {
  std::string suite = "all";
  std::uint64_t n = 100'000;
  std::string eps = "1/100";
  std::size_t fine_bins = 100;
  std::size_t coarse_bins = 10;
  std::uint64_t bound_events = 1'000'000;
};

std::vector<lob::CouplingReport> coupling_suite(const Common& c, const lob::ArrivalSpec& spec, std::uint64_t n) {
  const lob::MatchRule ordinary = lob::MatchRule::ordinary();
  const lob::BinPartition fine = lob::BinPartition::equal_width(100, spec.bid.support());
  const lob::BinPartition coarse = lob::BinPartition::equal_width(10, spec.bid.support());
  const auto seeds = c.all_seeds();
  auto per_seed = lob::run_replicas(seeds, [&](std::uint64_t s) {
    const lob::ArrivalStream stream{s, n, spec};
    std::vector<lob::CouplingReport> r;
    r.push_back(lob::check_extra_order({}, lob::Order{lob::Side::bid, 0.9, 0}, stream, ordinary));
    r.push_back(lob::check_extra_order({}, lob::Order{lob::Side::ask, 0.1, 0}, stream, ordinary));
    const std::vector<lob::Edit> edits = {
        {0, lob::Side::bid, true, 0.15 + 1e-9},
        {0, lob::Side::bid, true, 0.12 + 1e-9},
        {n / 4, lob::Side::ask, false, std::nullopt},
        {n / 2, lob::Side::ask, true, 0.93 + 1e-9},
        {3 * n / 4, lob::Side::bid, false, std::nullopt},
    };
    r.push_back(lob::check_bounded_perturbation({}, edits, stream, ordinary, edits.size()));
    r.push_back(lob::check_refinement(fine, coarse, lob::RefinementKind::ordinary, stream));
    r.push_back(lob::check_refinement(fine, coarse, lob::RefinementKind::strict, stream));
    return r;
  });
  std::vector<lob::CouplingReport> all;
  for (auto& v : per_seed) all.insert(all.end(), v.begin(), v.end());
  return all;
}

int cmd_check(const Common& c, const CheckOpts& o) {
  const lob::ArrivalSpec spec = load_spec(c);
  const bool all = o.suite == "all";
  bool ok = true;
  auto line = [&](bool pass, const std::string& name, const std::string& detail) {
    std::cout << verdict(pass) << ' ' << name << ' ' << detail << '\n';
    ok = ok && pass;
  };

  if (all || o.suite == "coupling") {
    const auto reports = coupling_suite(c, spec, o.n);
    for (const auto& r : reports) {
      std::ostringstream d;
      d << "seed=" << r.seed << " arrivals=" << r.arrivals << " violations=" << r.violations
        << " max_difference=" << r.max_difference;
      if (r.first) d << " first_violation=" << r.first->arrival << " expected=" << r.first->expected;
      line(r.passed(), "coupling/" + r.check, d.str());
    }
    auto f = open_out(c.out, "coupling_reports.csv");
    lob::write_reports_csv(f, reports, c.tag(c.seed));
  }

  if (all || o.suite == "lyapunov") {
    const lob::Rational eps = parse_rational(o.eps);
    const lob::DriftCertificate cert = lob::certify_drift(eps);
    line(cert.passed, "lyapunov/certificate",
         "eps_max=" + show(eps) + " eps_sup=" + show(cert.eps_sup) + " worst_at_zero=" + show(cert.worst_at_zero) +
             " pairs=" + std::to_string(cert.pairs.size()) + " failures=" + std::to_string(cert.failures.size()));
    const lob::DriftTable printed = lob::printed_drift_table();
    const lob::DriftTable exact = lob::enumerate_drift_table();
    std::size_t agree = 0;
    for (lob::Region r : lob::kDriftRegions) agree += printed.at(r) == exact.at(r) ? 1 : 0;
    line(agree == lob::kDriftRegions.size(), "lyapunov/drift-table-transcription",
         std::to_string(agree) + "/" + std::to_string(lob::kDriftRegions.size()) +
             " printed drift vectors match one-arrival enumeration");
    auto f = open_out(c.out, "certificate.txt");
    lob::write_certificate(f, cert);
  }

  if (all || o.suite == "bounds") {
    const lob::Rational exact = lob::lower_bound_3bin(lob::Rational(2, 5), lob::Rational(3, 5));
    const double bound = lob::lower_bound_3bin(0.4, 0.6);
    line(exact == lob::Rational(1, 10) && std::abs(bound - 0.1) <= 1e-15, "bounds/3bin-value",
         "lower_bound_3bin(2/5,3/5)=" + show(exact) + " (double " + std::to_string(bound) + ")");
    if (is_unit_uniform(spec)) {
      const double fb = spec.bid.cdf(lob::kappa_uniform_exact().kappa_b);
      line(bound <= fb, "bounds/3bin-vs-exact", "bound=" + std::to_string(bound) + " F_b(kappa_b)=" +
                                                    std::to_string(fb));
    }
    const auto cert = lob::finiteness_certificate(spec);
    line(cert.has_value(), "bounds/finiteness-certificate",
         cert ? "X=" + std::to_string(cert->x_level) + " Y=" + std::to_string(cert->y_level) +
                    " bound=" + std::to_string(cert->bound)
              : std::string("no positive 3-bin bound found"));
    if (is_unit_uniform(spec)) {
      const lob::GeometricBoundReport g = lob::check_geometric_bound(0.4, 0.6, spec, o.bound_events, c.seed);
      line(g.passed, "bounds/geometric-tail",
           "x=0.4 y=0.6 rho_b=" + std::to_string(g.rho_b) + " rho_a=" + std::to_string(g.rho_a) +
               " samples=" + std::to_string(g.samples));
    }
  }
  return ok ? kOk : kCheckFailed;
}

// lyapunov ------------------------------------------------------------------

struct LyapunovOpts {
  std::string eps_max = "0";
  double eps = 0.01;
  std::uint64_t n = 1'000'000;
  double k_level = 20.0;
  std::string form = "min";
  std::uint64_t min_visits = 10'000;
};

int cmd_lyapunov(const Common& c, const LyapunovOpts& o) {
  const lob::Rational eps_max = parse_rational(o.eps_max);
  const lob::DriftCertificate cert = lob::certify_drift(eps_max);
  {
    auto f = open_out(c.out, "certificate.txt");
    lob::write_certificate(f, cert);
  }
  std::cout << verdict(cert.passed) << " certificate at eps_max=" << show(eps_max) << " (eps_sup=" << show(cert.eps_sup)
            << ")\n";

  const lob::LevelReport level = lob::verify_level_fixture();
  {
    auto f = open_out(c.out, "level_set.csv");
    lob::write_tag(f, c.tag(c.seed));
    lob::write_level_report_csv(f, level);
  }
  std::cout << "level-set fixture: " << level.discrepancies.size() << " discrepancies\n";
  for (const auto& d : level.discrepancies) std::cout << "  " << d << '\n';

  const lob::DriftTable printed = lob::printed_drift_table();
  const lob::DriftTable exact = lob::enumerate_drift_table();
  const lob::FiveBinReport sim = lob::simulate_5bin(
      o.eps, o.n, c.seed, o.k_level, o.form == "max" ? lob::LyapunovForm::max : lob::LyapunovForm::min);
  const lob::Rational eps_r = parse_rational(std::to_string(o.eps).substr(0, 12));

  auto f = open_out(c.out, "drift_compare.csv");
  lob::write_tag(f, c.tag(c.seed));
  f << "region,coord,printed,enumerated,empirical,se,visits,tail_visits,mean_dl,se_dl\n" << std::setprecision(10);
  bool ok = true;
  for (lob::Region r : lob::kDriftRegions) {
    const lob::RegionStats st = sim.regions.count(r) ? sim.regions.at(r) : lob::RegionStats{};
    for (std::size_t i = 0; i < 3; ++i) {
      f << lob::code(r) << ',' << i << ',' << boost::rational_cast<double>(printed.at(r)[i].at(eps_r)) << ','
        << boost::rational_cast<double>(exact.at(r)[i].at(eps_r)) << ',' << st.mean_dx[i] << ',' << st.se_dx[i]
        << ',' << st.visits << ',' << st.tail_visits << ',' << st.mean_dl << ',' << st.se_dl << '\n';
    }
    const bool tested = st.tail_visits >= o.min_visits;
    const bool negative = st.mean_dl + 3.0 * st.se_dl < 0.0;
    if (tested && !negative) ok = false;
    std::cout << lob::code(r) << ": visits=" << st.visits << " tail_visits=" << st.tail_visits;
    if (tested) std::cout << " mean_dl=" << st.mean_dl << " se=" << st.se_dl << ' ' << verdict(negative);
    std::cout << '\n';
  }
  std::cout << "max L=" << sim.max_l << " max |x|_1=" << sim.max_norm << " excursions=" << sim.return_times.size()
            << '\n';
  return cert.passed && ok ? kOk : kCheckFailed;
}

// bound3 --------------------------------------------------------------------

struct Bound3Opts {
  double x_level = 0.4;
  double y_level = 0.6;
  std::string x_level_exact;
  std::string y_level_exact;
  bool geometric = false;
  double x = 0.4;
  double y = 0.6;
  std::uint64_t n = 1'000'000;
};

int cmd_bound3(const Common& c, const Bound3Opts& o) {
  const lob::ArrivalSpec spec = load_spec(c);
  std::cout << "lower_bound_3bin(" << o.x_level << ", " << o.y_level << ") = " << std::setprecision(17)
            << lob::lower_bound_3bin(o.x_level, o.y_level) << '\n';
  if (!o.x_level_exact.empty() || !o.y_level_exact.empty()) {
    const lob::Rational x = parse_rational(o.x_level_exact.empty() ? "2/5" : o.x_level_exact);
    const lob::Rational y = parse_rational(o.y_level_exact.empty() ? "3/5" : o.y_level_exact);
    std::cout << "exact: lower_bound_3bin(" << show(x) << ", " << show(y) << ") = " << show(lob::lower_bound_3bin(x, y))
              << '\n';
  }
  const auto cert = lob::finiteness_certificate(spec);
  if (cert) {
    std::cout << "certificate: X=" << cert->x_level << " Y=" << cert->y_level << " bound=" << cert->bound << '\n';
  } else {
    std::cout << "certificate: none\n";
  }
  if (!o.geometric) return kOk;
  const lob::GeometricBoundReport g = lob::check_geometric_bound(o.x, o.y, spec, o.n, c.seed);
  auto f = open_out(c.out, "geometric_tails.csv");
  lob::write_tag(f, c.tag(c.seed));
  f << "m,tail_b,bound_b,tail_a,bound_a\n" << std::setprecision(10);
  for (std::size_t m = 0; m < g.tail_b.size(); ++m) {
    f << m << ',' << g.tail_b[m] << ',' << g.bound_b[m] << ',' << g.tail_a[m] << ',' << g.bound_a[m] << '\n';
  }
  std::cout << verdict(g.passed) << " geometric tails rho_b=" << g.rho_b << " rho_a=" << g.rho_a << '\n';
  return g.passed ? kOk : kCheckFailed;
}

// couple --------------------------------------------------------------------

struct CoupleOpts {
  std::string mode = "sandwich";
  std::uint64_t n = 1'000'000;
  std::size_t bins = 100;
  std::string dist_b = "mixed";
  std::string spec_b;
};

int cmd_couple(const Common& c, const CoupleOpts& o) {
  const lob::ArrivalSpec spec = load_spec(c);
  const auto seeds = c.all_seeds();
  std::cout << std::setprecision(6);
  if (o.mode == "sandwich") {
    if (o.bins < 4 || o.bins % 2) throw config_error("--bins must be even and at least 4");
    auto est = lob::run_replicas(seeds, [&](std::uint64_t s) { return lob::estimate_sandwich(o.bins, spec, o.n, s); });
    auto f = open_out(c.out, "sandwich.csv");
    lob::write_tag(f, c.tag(c.seed));
    f << "seed,strict_kappa_b,fine_kappa_b,coarse_kappa_b,strict_kappa_a,fine_kappa_a,coarse_kappa_a\n"
      << std::setprecision(10);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const auto& e = est[i];
      f << seeds[i] << ',' << e.strict.kappa_b << ',' << e.fine.kappa_b << ',' << e.coarse.kappa_b << ','
        << e.strict.kappa_a << ',' << e.fine.kappa_a << ',' << e.coarse.kappa_a << '\n';
      std::cout << "seed " << seeds[i] << ": strict " << e.strict.kappa_b << " >= fine " << e.fine.kappa_b
                << " >= coarse " << e.coarse.kappa_b << '\n';
    }
    return kOk;
  }
  if (o.mode == "perturb") {
    const lob::ArrivalSpec other = spec_from(o.dist_b, o.spec_b);
    auto out = lob::run_replicas(seeds, [&](std::uint64_t s) { return lob::perturbation_experiment(spec, other, o.n, s); });
    auto f = open_out(c.out, "perturb.csv");
    lob::write_tag(f, c.tag(c.seed));
    f << "seed,union_events,common,only_a,only_b,uncoupled_rate,predicted_rate,kappa_b_a,kappa_b_b,violations\n"
      << std::setprecision(10);
    bool ok = true;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const auto& p = out[i];
      f << seeds[i] << ',' << p.streams.union_events << ',' << p.streams.common << ',' << p.streams.only_a << ','
        << p.streams.only_b << ',' << p.streams.uncoupled_rate << ',' << p.streams.predicted_rate << ','
        << p.kappa_a.kappa_b << ',' << p.kappa_b.kappa_b << ',' << p.pathwise.violations << '\n';
      std::cout << verdict(p.pathwise.passed()) << " seed " << seeds[i] << ": uncoupled rate "
                << p.streams.uncoupled_rate << " (predicted " << p.streams.predicted_rate << "), kappa_b "
                << p.kappa_a.kappa_b << " vs " << p.kappa_b.kappa_b << '\n';
      ok = ok && p.pathwise.passed();
    }
    return ok ? kOk : kCheckFailed;
  }
  throw config_error("unknown couple mode '" + o.mode + "'");
}

// runmax --------------------------------------------------------------------

struct RunMaxOpts {
  std::uint64_t n = 200'000;
  std::size_t bins = 100;
  std::optional<std::size_t> k_b;
  std::optional<std::size_t> k_a;
  std::string rule = "binned";
  std::optional<double> lower;
};

int cmd_runmax(const Common& c, const RunMaxOpts& o) {
  const lob::ArrivalSpec spec = load_spec(c);
  if (o.bins < 3) throw config_error("--bins must be at least 3");
  std::size_t kb = 0, ka = 0;
  if (o.k_b && o.k_a) {
    kb = *o.k_b;
    ka = *o.k_a;
  } else {
    lob::ShootOptions so;
    so.lower_level = o.lower;
    const lob::VarpiSolution s = lob::shoot_kappa(spec, so);
    const lob::BinPartition bins = lob::BinPartition::equal_width(o.bins, spec.bid.support());
    kb = o.k_b.value_or(bins.bin_of(s.kappa_b));
    ka = o.k_a.value_or(bins.bin_of(s.kappa_a));
  }
  if (!(kb < ka && ka < o.bins)) throw config_error("need k_b < k_a < bins");
  const bool binned = o.rule == "binned";
  const auto seeds = c.all_seeds();
  auto ev = lob::run_replicas(seeds, [&](std::uint64_t s) {
    return lob::running_max_evidence(spec, o.n, s, o.bins, kb, ka, binned);
  });
  auto f = open_out(c.out, "runmax.csv");
  lob::write_tag(f, c.tag(c.seed));
  f << "seed,last_jump,last_jump_fraction,max_n,max_2n,growth\n" << std::setprecision(10);
  std::size_t early = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& e = ev[i];
    f << seeds[i] << ',' << e.last_jump << ',' << e.last_jump_fraction << ',' << e.max_n << ',' << e.max_2n << ','
      << e.growth << '\n';
    if (e.last_jump_fraction <= 0.5) ++early;
    std::ofstream m = open_out(fs::path(c.out) / "series", "mid_s" + std::to_string(seeds[i]) + ".csv");
    lob::write_tag(m, c.tag(seeds[i]));
    m << "events,T,value,running_max\n";
    for (const auto& p : e.series) m << p.events << ',' << p.time << ',' << p.value << ',' << p.running_max << '\n';
  }
  const bool ok = 2 * early > seeds.size();
  std::cout << verdict(ok) << " last running-max jump in the first half for " << early << "/" << seeds.size()
            << " seeds (bins above " << kb << ", below " << ka << ", " << (binned ? "binned" : "ordinary")
            << " book)\n";
  return ok ? kOk : kCheckFailed;
}

// config file -----------------------------------------------------------------

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::vector<std::string> config_args(const json& doc, CLI::App* sub) {
  if (!doc.is_object()) throw config_error("config file must hold a JSON object");
  std::vector<std::string> args;
  for (const auto& [raw, value] : doc.items()) {
    const std::string key = normalize_key(raw);
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) throw config_error("config: unknown key '" + raw + "' for '" + sub->get_name() + "'");
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
      continue;
    }
    if (value.is_object()) {
      args.push_back("--" + key + "=" + value.dump());
      continue;
    }
    const auto one = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array()) {
      args.push_back("--" + key);
      for (const auto& v : value) args.push_back(one(v));
    } else {
      args.push_back("--" + key + "=" + one(value));
    }
  }
  return args;
}

json effective_config(CLI::App* sub) {
  json doc = json::object();
  doc["command"] = sub->get_name();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_name(false, true);
    if (opt->get_lnames().empty() || name == "--help" || name == "--out") continue;
    const auto& res = opt->results();
    if (res.empty()) {
      doc[opt->get_lnames().front()] = opt->get_default_str();
    } else {
      std::string joined;
      for (const auto& r : res) joined += (joined.empty() ? "" : " ") + r;
      doc[opt->get_lnames().front()] = joined;
    }
  }
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limit order book simulator and threshold tools", "lobctl"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  Common common;

  SimulateOpts sim;
  CLI::App* simulate = app.add_subcommand("simulate", "run the book and write trace CSVs");
  add_common(simulate, common, true, true);
  simulate->add_option("--rule", sim.rule)->check(CLI::IsMember({"ordinary", "binned", "strict"}));
  simulate->add_option("--n", sim.n, "number of arrivals")->required();
  simulate->add_option("--bins", sim.bins, "recording and matching bins");
  simulate->add_option("--record-every", sim.record_every, "checkpoint stride (0: n/100)");
  simulate->add_option("--burn-in", sim.burn_in, "leading fraction skipped by occupation recorders")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--time-mode", sim.time_mode)->check(CLI::IsMember({"event", "poisson"}));
  simulate->add_option("--top-depth", sim.top_depth, "bins below the best bid in the top shape");
  simulate->add_option("--top-min-bin", sim.top_min_bin, "condition the top shape on the best-bid bin");
  simulate->add_option("--mid-bins", sim.mid_bins, "track bids above and asks below these two bins")->expected(2);

  KappaOpts kap;
  CLI::App* kappa = app.add_subcommand("kappa", "threshold estimates");
  add_common(kappa, common, true, true);
  kappa->add_option("--mode", kap.mode)->check(CLI::IsMember({"mc", "ode", "exact"}));
  kappa->add_flag("--compare", kap.compare, "run every applicable mode and compare");
  kappa->add_option("--n", kap.n, "arrivals per Monte Carlo replica");
  kappa->add_option("--tol", kap.tol, "shooting tolerance");
  kappa->add_option("--lower", kap.lower, "lower F_b level for the shooting scan");
  kappa->add_option("--mc-tolerance", kap.mc_tolerance, "allowed |mc - ode|");

  OdeOpts ode;
  CLI::App* odec = app.add_subcommand("ode", "solve for the limiting densities");
  add_common(odec, common, true, false);
  odec->add_option("--tol", ode.tol);
  odec->add_option("--grid", ode.grid, "output grid intervals");
  odec->add_option("--lower", ode.lower, "lower F_b level for the shooting scan");

  PiOpts pio;
  CLI::App* pic = app.add_subcommand("pi", "stationary masses of the binned book");
  add_common(pic, common, true, false);
  pic->add_option("--bins", pio.bins);
  pic->add_flag("--no-calibrate", pio.no_calibrate, "use the continuum F_b(kappa_b) as is");
  pic->add_option("--lower", pio.lower, "lower F_b level for the shooting scan");

  CheckOpts chk;
  CLI::App* check = app.add_subcommand("check", "property suites");
  add_common(check, common, true, true);
  check->add_option("--suite", chk.suite)->check(CLI::IsMember({"coupling", "lyapunov", "bounds", "all"}));
  check->add_option("--n", chk.n, "arrivals per coupling run");
  check->add_option("--eps", chk.eps, "eps_max for the drift certificate (decimal or p/q)");
  check->add_option("--bound-events", chk.bound_events, "arrivals for the geometric tail check");

  LyapunovOpts lyo;
  CLI::App* lyap = app.add_subcommand("lyapunov", "drift certificate, level-set fixture and 5-bin simulation");
  add_common(lyap, common, false, false);
  lyap->add_option("--eps-max", lyo.eps_max, "certificate eps_max (decimal or p/q)");
  lyap->add_option("--eps", lyo.eps, "bin perturbation of the simulated chain")->check(CLI::Range(0.0, 0.199));
  lyap->add_option("--n", lyo.n);
  lyap->add_option("--k", lyo.k_level, "condition drifts on L > k");
  lyap->add_option("--form", lyo.form)->check(CLI::IsMember({"min", "max"}));
  lyap->add_option("--min-visits", lyo.min_visits, "tail visits needed before a region is tested");

  Bound3Opts b3;
  CLI::App* bound3 = app.add_subcommand("bound3", "3-bin lower bound and geometric tails");
  add_common(bound3, common, true, false);
  bound3->add_option("--x-level", b3.x_level);
  bound3->add_option("--y-level", b3.y_level);
  bound3->add_option("--x-exact", b3.x_level_exact, "X as a decimal or p/q, evaluated exactly");
  bound3->add_option("--y-exact", b3.y_level_exact, "Y as a decimal or p/q, evaluated exactly");
  bound3->add_flag("--geometric", b3.geometric, "also check the geometric tail bound");
  bound3->add_option("--x", b3.x, "bid reservoir price");
  bound3->add_option("--y", b3.y, "ask reservoir price");
  bound3->add_option("--n", b3.n);

  CoupleOpts cpl;
  CLI::App* couple = app.add_subcommand("couple", "sandwich and perturbation experiments");
  add_common(couple, common, true, true);
  couple->add_option("--mode", cpl.mode)->check(CLI::IsMember({"sandwich", "perturb"}));
  couple->add_option("--n", cpl.n);
  couple->add_option("--bins", cpl.bins);
  couple->add_option("--dist-b", cpl.dist_b)->check(CLI::IsMember({"uniform", "triangular", "mixed"}));
  couple->add_option("--spec-b", cpl.spec_b, "second arrival law as a JSON file or inline JSON");

  RunMaxOpts rmo;
  CLI::App* runmax = app.add_subcommand("runmax", "running maximum of the middle-region count");
  add_common(runmax, common, true, true);
  runmax->add_option("--n", rmo.n);
  runmax->add_option("--bins", rmo.bins);
  runmax->add_option("--k-b", rmo.k_b, "0-based bin; bids above it are counted");
  runmax->add_option("--k-a", rmo.k_a, "0-based bin; asks below it are counted");
  runmax->add_option("--rule", rmo.rule)->check(CLI::IsMember({"binned", "ordinary"}));
  runmax->add_option("--lower", rmo.lower, "lower F_b level for the shooting scan");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) {
        config_path = args[i + 1];
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
        break;
      }
      if (args[i].rfind("--config=", 0) == 0) {
        config_path = args[i].substr(9);
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
    if (!config_path.empty()) {
      const auto sub_pos = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
        return app.get_subcommand_no_throw(a) != nullptr;
      });
      if (sub_pos == args.end()) throw config_error("a subcommand is required with --config");
      std::ifstream in(config_path);
      if (!in) throw config_error("cannot open config '" + config_path + "'");
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::exception& e) {
        throw config_error(std::string("config: ") + e.what());
      }
      const auto extra = config_args(doc, app.get_subcommand(*sub_pos));
      args.insert(std::next(sub_pos), extra.begin(), extra.end());
    }
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  common.hash = lob::fnv1a_hex(effective_config(chosen).dump());

  try {
    if (chosen == simulate) return cmd_simulate(common, sim);
    if (chosen == kappa) return cmd_kappa(common, kap);
    if (chosen == odec) return cmd_ode(common, ode);
    if (chosen == pic) return cmd_pi(common, pio);
    if (chosen == check) return cmd_check(common, chk);
    if (chosen == lyap) return cmd_lyapunov(common, lyo);
    if (chosen == bound3) return cmd_bound3(common, b3);
    if (chosen == couple) return cmd_couple(common, cpl);
    if (chosen == runmax) return cmd_runmax(common, rmo);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const lob::invariant_error& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const lob::numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
