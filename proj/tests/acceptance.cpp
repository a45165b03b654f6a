// Acceptance run: one PASS/FAIL line per criterion.
//
//   qasym_acceptance [--known-failure N]...
//
// Exit status is 0 when every criterion passes, or when the failing set is
// exactly the one declared with --known-failure. A declared failure that
// starts passing is reported too, so the list cannot go stale.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cli.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "qasym/asym.hpp"
#include "qasym/bound.hpp"
#include "qasym/dext.hpp"
#include "qasym/estim.hpp"
#include "qasym/gauss.hpp"
#include "qasym/model.hpp"

using namespace qasym;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "!") + what);
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

RVector vec(std::initializer_list<double> xs) {
  RVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (const double x : xs) v(i++) = x;
  return v;
}

cli::Table run_cli(const std::vector<std::string>& args, int& code) {
  std::ostringstream out, err;
  code = cli::dispatch(args, out, err);
  std::istringstream in(out.str());
  return code == 0 ? cli::read_csv(in) : cli::Table{};
}

double as_double(const cli::Table::Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
  return std::nan("");
}

double column(const cli::Table& t, std::size_t row, const std::string& name) {
  const auto it = std::find(t.columns.begin(), t.columns.end(), name);
  if (it == t.columns.end() || row >= t.rows.size()) return std::nan("");
  return as_double(t.rows[row][static_cast<std::size_t>(it - t.columns.begin())]);
}

double quantity(const cli::Table& t, const std::string& name) {
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (const auto* s = std::get_if<std::string>(&t.rows[r][0]); s && *s == name) return column(t, r, "value");
  }
  return std::nan("");
}

// ---- 1 ----
Outcome holevo_anchors() {
  Outcome o;
  for (const std::string th : {"0,0", "0.2,0.1", "0.5,0"}) {
    const auto t0 = Clock::now();
    int code = 0;
    const auto t = run_cli({"bound", "holevo", "--model", "spin_coherent", "--theta", th, "--weight", "fisher"}, code);
    const double v = quantity(t, "value");
    const double dt = seconds_since(t0);
    o.require(code == 0 && std::abs(v - 4.0) <= 1e-4 && dt < 1.0,
              fmt::format("spin_coherent({}) = {:.10f} in {:.3f}s", th, v, dt));
  }
  const auto t0 = Clock::now();
  int code = 0;
  const auto t = run_cli({"bound", "holevo", "--model", "bloch_ball", "--theta", "0,0,0", "--weight", "identity"}, code);
  const double v = quantity(t, "value");
  const double dt = seconds_since(t0);
  o.require(code == 0 && std::abs(v - 3.0) <= 1e-6 && dt < 1.0, fmt::format("bloch_ball(0) = {:.12f} in {:.3f}s", v, dt));
  return o;
}

// ---- 2 ----
Outcome extension_independence() {
  Outcome o;
  oracle::Rng rng(2024);
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index dim = 2 + trial % 2;
    const auto m = fixture::random_affine_model(rng, dim, 1 + static_cast<std::size_t>(trial % 3 == 0 ? 2 : 1));
    const RVector t = RVector::Zero(static_cast<Eigen::Index>(m.param_dim()));
    const DensityMatrix rho = state_at(m, t);
    const DExtension greedy = build_d_extension(rho, sld(m, t));
    const DExtension other = fixture::padded_extension(rho, greedy, rng);
    const RMatrix g = sld_fisher(m, t);
    const double a = rep_bound(greedy.sigma, greedy.tau, g).value;
    const double b = rep_bound(other.sigma, other.tau, g).value;
    worst = std::max(worst, std::abs(a - b));
  }
  const double dt = seconds_since(t0);
  o.require(worst <= 1e-6, fmt::format("max |greedy - rotated augmentation| = {:.2e} over 20 trials", worst));
  o.require(dt < 10.0, fmt::format("{:.2f}s", dt));
  return o;
}

// ---- 3 ----
Outcome gaussian_purity() {
  Outcome o;
  oracle::Rng rng(3031);
  std::uniform_real_distribution<double> nu(1.05, 3.0);
  int consistent = 0;
  double worst_value = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t modes = trial % 2 == 0 ? 1 : 2;
    const bool make_pure = trial % 3 == 0;
    std::vector<double> nus;
    double expected = 1.0;
    for (std::size_t k = 0; k < modes; ++k) {
      nus.push_back(make_pure ? 1.0 : nu(rng));
      expected /= nus.back();
    }
    const Purity p = purity(oracle::gaussian_covariance(rng, nus));
    const bool det_equal = std::abs(p.det_v - p.det_s) <= 1e-8 * std::abs(p.det_v);
    const bool unit = std::abs(p.tr_rho_sq - 1.0) <= 1e-8;
    consistent += (det_equal == unit && unit == make_pure && p.is_pure == make_pure) ? 1 : 0;
    worst_value = std::max(worst_value, std::abs(p.tr_rho_sq - expected));
  }
  o.require(consistent == 100, fmt::format("det V = det S <=> Tr rho^2 = 1 on {}/100", consistent));
  o.require(worst_value <= 1e-8, fmt::format("max |Tr rho^2 - prod 1/nu| = {:.2e}", worst_value));

  int pure = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> nus;
    for (int k = 0; k < 1 + trial % 2; ++k) nus.push_back(nu(rng));
    const Purity p = purity(doubled_covariance(oracle::gaussian_covariance(rng, nus)));
    pure += (std::abs(p.det_v - p.det_s) <= 1e-8 * std::abs(p.det_v)) ? 1 : 0;
  }
  o.require(pure == 50, fmt::format("doubled covariance pure on {}/50", pure));
  return o;
}

// ---- 4 ----
Outcome povm_demo() {
  Outcome o;
  const auto t0 = Clock::now();
  int code = 0;
  const auto t = run_cli({"asym", "povm-demo", "--h", "0.5,1,2", "--n", "1000000"}, code);
  const double dt = seconds_since(t0);
  o.require(code == 0 && t.rows.size() == 3, "povm-demo ran");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double h = column(t, r, "h");
    const double fin = column(t, r, "finite_n_prob");
    const double lim = std::exp(-h * h / 4.0);
    o.require(std::abs(fin - lim) <= 1e-4, fmt::format("h={} |finite - e^(-h^2/4)| = {:.2e}", h, std::abs(fin - lim)));
    const double quad = std::abs(column(t, r, "m_integral") - lim);
    o.require(quad <= 1e-8, fmt::format("quadrature gap {:.1e}", quad));
    const double mmax = column(t, r, "m_max");
    o.require(std::abs(mmax - std::sqrt(2.0)) < 1e-15 && mmax > 1.0, fmt::format("max m = {:.6f}", mmax));
  }
  o.require(dt < 1.0, fmt::format("{:.3f}s", dt));
  return o;
}

// ---- 5 ----
Outcome hodges_curve() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<double> far;
  for (int i = 0; i <= 20; ++i) {
    far.push_back(0.5 + 0.49 * i / 20.0);
    far.push_back(-far.back());
  }
  const RiskCurve plateau = hodges_risk(far, 10000);
  double dev = 0.0;
  for (const double r : plateau.risk) dev = std::max(dev, std::abs(r - 4.0) / 4.0);
  o.require(dev <= 0.05, fmt::format("n=1e4, |theta1| >= 0.5: max relative deviation from 4 = {:.2e}", dev));

  std::vector<double> near;
  for (int i = 1; i <= 600; ++i) near.push_back(0.3 * i / 600.0);
  double prev = 0.0;
  std::string peaks;
  bool rising = true;
  for (const std::size_t n : {100ul, 1000ul, 10000ul}) {
    const RiskCurve c = hodges_risk(near, n);
    const double p = *std::max_element(c.risk.begin(), c.risk.end());
    rising = rising && p > 4.0 && p > prev;
    peaks += fmt::format("{}{:.4f}", peaks.empty() ? "" : " < ", p);
    prev = p;
  }
  o.require(rising, "peaks over (0, 0.3]: " + peaks);

  HodgesOptions plain;
  plain.truncate = false;
  std::vector<double> all = near;
  all.insert(all.end(), far.begin(), far.end());
  double worst = 0.0;
  for (const std::size_t n : {100ul, 10000ul}) {
    for (const double r : hodges_risk(all, n, plain).risk) worst = std::max(worst, std::abs(r - 4.0));
  }
  o.require(worst <= 1e-6, fmt::format("untruncated max |risk - 4| = {:.1e}", worst));
  const double dt = seconds_since(t0);
  o.require(dt < 30.0, fmt::format("{:.2f}s", dt));
  return o;
}

// ---- 6 ----
Outcome james_stein() {
  Outcome o;
  const auto t0 = Clock::now();
  const RVector dir = vec({1.0, 2.0, 2.0}) / 3.0;
  const McEstimate zero = james_stein_risk(RVector::Zero(3), 1000000, 7, 4);
  const double want = 4.0 - 4.0 * std::sqrt(2.0 / M_PI);
  o.require(std::abs(zero.risk - want) <= 3.0 * zero.stderr_,
            fmt::format("h=0: {:.5f} +- {:.5f} vs {:.5f}", zero.risk, zero.stderr_, want));
  for (const double hn : {0.0, 1.0, 2.0, 5.0, 10.0}) {
    const McEstimate e = james_stein_risk(hn * dir, 1000000, 11, 4);
    o.require(e.risk + 3.0 * e.stderr_ < 3.0, fmt::format("|h|={}: risk + 3 se = {:.4f}", hn, e.risk + 3.0 * e.stderr_));
  }
  const McEstimate big = james_stein_risk(50.0 * dir, 1000000, 13, 4);
  o.require(std::abs(big.risk - 3.0) <= 3.0 * big.stderr_,
            fmt::format("|h|=50: {:.4f} +- {:.4f} vs 3", big.risk, big.stderr_));
  const double dt = seconds_since(t0);
  o.require(dt < 60.0, fmt::format("{:.2f}s", dt));
  return o;
}

// ---- 7 ----
Outcome convergence() {
  Outcome o;
  const auto t0 = Clock::now();
  const SiteFamily fam = iid_family(make_bloch_ball(), vec({0, 0, 0}));
  const RVector e1 = vec({1, 0, 0});
  const RVector e2 = vec({0, 1, 0});
  const RVector u = vec({0.6, 0.8, 0.0});
  const std::vector<std::pair<std::string, std::function<double(std::size_t)>>> series{
      {"sandwich", [&](std::size_t n) { return sandwich_value(fam, u, vec({0, 0, 1}), n).gap; }},
      {"quasi-char", [&](std::size_t n) { return quasi_char_finite_n(fam, e1, {e1, e2}, n).gap; }},
      {"weyl", [&](std::size_t n) { return weyl_residual(fam, e1, e2, n); }},
  };
  for (const auto& [name, f] : series) {
    std::vector<double> v;
    for (const std::size_t n : {100ul, 10000ul, 1000000ul}) v.push_back(f(n));
    const bool ok = v[2] < 1e-3 && v[1] <= 1.5 * v[0] && v[2] <= 1.5 * v[1];
    o.require(ok, fmt::format("{} {:.2e} {:.2e} {:.2e}", name, v[0], v[1], v[2]));
  }
  const double dt = seconds_since(t0);
  o.require(dt < 5.0, fmt::format("{:.2f}s", dt));
  return o;
}

// ---- 8 ----
Outcome oracle_equivalences() {
  Outcome o;
  oracle::Rng rng(808);

  double gm = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index dim = 2 + trial % 4;
    const CMatrix ga = oracle::random_complex(rng, dim, dim);
    const CMatrix gb = oracle::random_complex(rng, dim, dim);
    const CMatrix a = ga * ga.adjoint() + 0.1 * CMatrix::Identity(dim, dim);
    const CMatrix b = gb * gb.adjoint() + 0.1 * CMatrix::Identity(dim, dim);
    const CMatrix m = geometric_mean(a, b);
    gm = std::max(gm, max_abs(m - oracle::geometric_mean_direct(a, b)) / std::max(1.0, max_abs(m)));
  }
  o.require(gm <= 1e-9, fmt::format("geometric mean {:.1e}", gm));

  double comm = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index dim = 2 + trial % 3;
    const CMatrix rho = oracle::random_faithful_state(rng, dim);
    const CMatrix x = oracle::random_hermitian(rng, dim);
    comm = std::max(comm, max_abs(commutation_apply(DensityMatrix(rho), x) - oracle::commutation_superoperator(rho, x)));
  }
  o.require(comm <= 1e-10, fmt::format("commutation operator {:.1e}", comm));

  double nm = 0.0;
  std::normal_distribution<double> n01;
  for (Eigen::Index r = 1; r <= 4; ++r) {
    for (Eigen::Index d = 1; d <= std::min<Eigen::Index>(r, 3); ++d) {
      for (int trial = 0; trial < 3; ++trial) {
        const CMatrix a = 0.7 * oracle::random_complex(rng, r, r);
        const CMatrix sigma = a * a.adjoint() + 0.1 * CMatrix::Identity(r, r);
        RMatrix f(r, d), ga(d, d);
        for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = n01(rng);
        for (Eigen::Index i = 0; i < ga.size(); ++i) ga.data()[i] = n01(rng);
        const RMatrix g = ga * ga.transpose() + 0.3 * RMatrix::Identity(d, d);
        const CMatrix tau = sigma * f.cast<cplx>();
        const double v = rep_bound(sigma, tau, g).value;
        nm = std::max(nm, std::abs(v - oracle::rep_bound_nelder_mead(sigma, tau, g)) / std::max(1.0, v));
      }
    }
  }
  o.require(nm <= 1e-5, fmt::format("barrier vs Nelder-Mead {:.1e}", nm));

  double lr = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index dim = 2 + trial % 3;
    const Eigen::Index rank = trial % 4 == 0 ? 1 : dim;
    const CMatrix r = rank == dim ? oracle::random_faithful_state(rng, dim) : oracle::random_state(rng, dim, rank);
    const CMatrix s = oracle::random_state(rng, dim, trial % 5 != 0 ? dim : 1);
    const auto lb = sqrt_likelihood_ratio(DensityMatrix(r), DensityMatrix(s));
    lr = std::max(lr, max_abs(s - lb.R * r * lb.R - lb.sigma_perp));
  }
  o.require(lr <= 1e-8, fmt::format("Lebesgue reconstruction {:.1e}", lr));

  double ql = 0.0;
  for (const double p0 : {0.3, 0.45, 0.8}) {
    CMatrix rho0 = CMatrix::Zero(2, 2);
    rho0.diagonal() << p0, 1.0 - p0;
    CMatrix b = CMatrix::Zero(2, 2);
    b.diagonal() << 1.0, -1.0;
    for (const double h : {0.25, 0.5, -0.7}) {
      const QlanResidual q = qlan_residual(make_affine(rho0, {b}), vec({0}), vec({h}), 8);
      ql = std::max(ql, std::abs(q.residual - oracle::classical_lan(p0, h, 8).residual));
    }
  }
  o.require(ql <= 1e-10, fmt::format("q-LAN vs classical {:.1e}", ql));
  return o;
}

// ---- 9 ----
Outcome sandwich_inequality() {
  Outcome o;
  oracle::Rng rng(909);
  int ineq = 0;
  int matched = 0;
  int invariant = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto draw = fixture::random_span(rng, trial % 2 == 0);
    const RMatrix a = sandwich_matrix(draw.rho, draw.xs);
    const RMatrix gm = geometric_mean_with_transpose(covariance_matrix(draw.rho, draw.xs));
    const double lmin = Eigen::SelfAdjointEigenSolver<RMatrix>(gm - a).eigenvalues().minCoeff();
    const bool inv = check_d_invariance(DensityMatrix(draw.rho), draw.xs).invariant;
    ineq += lmin >= -1e-8 ? 1 : 0;
    matched += ((gm - a).cwiseAbs().maxCoeff() <= 1e-8) == inv ? 1 : 0;
    invariant += inv ? 1 : 0;
  }
  o.require(ineq == 500, fmt::format("A <= Sigma#Sigma^T on {}/500", ineq));
  o.require(matched == 500, fmt::format("equality <=> invariant on {}/500 ({} invariant)", matched, invariant));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-failure" && i + 1 < argc) {
      known.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--known-failure N]...\n", argv[0]);
      return 1;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Holevo bound anchors", holevo_anchors},
      {"bound independent of the D-extension", extension_independence},
      {"Gaussian purity", gaussian_purity},
      {"no limiting POVM", povm_demo},
      {"Hodges risk curve", hodges_curve},
      {"James-Stein superefficiency", james_stein},
      {"convergence diagnostics", convergence},
      {"oracle equivalences", oracle_equivalences},
      {"sandwich inequality and equality case", sandwich_inequality},
  };

  bool as_expected = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double dt = seconds_since(t0);
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    const bool expected_fail = known.count(id) > 0;
    std::printf("criterion %d: %s  %s (%.2fs)%s\n  %s\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(), dt,
                expected_fail ? (o.pass ? "  [declared known failure, now passing]" : "  [known failure]") : "",
                detail.c_str());
    std::fflush(stdout);
    if (o.pass == expected_fail) as_expected = false;
  }
  return as_expected ? 0 : 1;
}
