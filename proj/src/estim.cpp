#include "qasym/estim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include <fmt/format.h>

#include "qasym/error.hpp"
#include "qasym/quadrature.hpp"

namespace qasym {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Sorted breakpoints with near-duplicates removed.
std::vector<double> tidy(std::vector<double> pts, double lo, double hi) {
  std::vector<double> out;
  std::sort(pts.begin(), pts.end());
  for (double p : pts) {
    p = std::clamp(p, lo, hi);
    if (out.empty() || p - out.back() > 1e-14 * std::max(1.0, std::abs(hi))) out.push_back(p);
  }
  return out;
}

// Mean/M2 accumulator; merges use Chan's update.
struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    const double total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * o.count / total;
    m2 += o.m2 + delta * delta * count * o.count / total;
    count = total;
  }
};

Moments js_shard(const RVector& h, std::size_t samples, std::uint64_t seed) {
  SeededRNG rng(seed);
  Moments m;
  for (std::size_t s = 0; s < samples; ++s) {
    double x[3];
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (int i = 0; i < 3; ++i) {
        x[i] = h(i) + rng.normal();
        norm2 += x[i] * x[i];
      }
    } while (norm2 < 1e-24);
    const double shrink = 1.0 - 1.0 / std::sqrt(norm2);
    double loss = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double e = shrink * x[i] - h(i);
      loss += e * e;
    }
    m.add(loss);
  }
  return m;
}

}  // namespace

void validate_curve(const RiskCurve& c) {
  if (c.abscissa.size() != c.risk.size()) {
    throw ValidationError(fmt::format("risk curve: {} abscissae but {} risks", c.abscissa.size(), c.risk.size()));
  }
  if (c.stderr_ && c.stderr_->size() != c.risk.size()) throw ValidationError("risk curve: stderr length mismatch");
  for (const double r : c.risk) {
    if (!std::isfinite(r) || r < 0.0) throw ValidationError(fmt::format("risk curve: invalid risk value {}", r));
  }
}

SeededRNG::SeededRNG(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double SeededRNG::uniform() {
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

double SeededRNG::normal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const double rad = std::sqrt(-2.0 * std::log(uniform()));
  const double ang = 2.0 * std::numbers::pi * uniform();
  spare_ = rad * std::sin(ang);
  return rad * std::cos(ang);
}

std::uint64_t SeededRNG::shard_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ (index + 1) * 0xd1342543de82ef95ULL);
}

RiskCurve hodges_risk(const std::vector<double>& theta1_grid, std::size_t n, const HodgesOptions& opts) {
  if (n == 0) throw ValidationError("hodges_risk: n must be at least 1");
  if (opts.radial_order == 0 || opts.angular_order == 0) throw ValidationError("hodges_risk: orders must be positive");
  const double nn = static_cast<double>(n);
  const double sigma = std::sqrt(2.0 / nn);
  const double rho_n = opts.truncate ? std::pow(nn, -0.25) : 0.0;

  RiskCurve curve;
  curve.metadata["n"] = std::to_string(n);
  curve.metadata["radial_order"] = std::to_string(opts.radial_order);
  curve.metadata["angular_order"] = std::to_string(opts.angular_order);
  curve.metadata["truncate"] = opts.truncate ? "true" : "false";

  for (const double t1 : theta1_grid) {
    if (!(std::abs(t1) < 1.0)) throw ValidationError(fmt::format("hodges_risk: theta1 = {} is outside (-1, 1)", t1));
    const double one_minus = 1.0 - t1 * t1;
    const double c = std::abs(t1);
    const double phi_c = t1 >= 0.0 ? 0.0 : std::numbers::pi;
    const double r_max = c + 9.0 * sigma;
    const double norm = nn / (4.0 * std::numbers::pi * std::sqrt(one_minus));
    const double w_zero = t1 * t1 / one_minus;
    auto w = [&](double r, double phi) {
      const double dx = r * std::cos(phi) - t1;
      const double sy = r * std::sin(phi);
      return dx * dx / one_minus + sy * sy;
    };

    std::vector<double> radial = {0.0, r_max};
    for (int k = -9; k <= 9; ++k) radial.push_back(c + k * sigma);
    if (rho_n > 0.0 && rho_n < r_max) radial.push_back(rho_n);
    radial = tidy(radial, 0.0, r_max);

    // Geometrically graded angular panels around the direction of theta.
    const double a = sigma / std::max(c, sigma);
    std::vector<double> angular = {-std::numbers::pi, 0.0, std::numbers::pi};
    for (double delta = a; delta < std::numbers::pi; delta *= 2.0) {
      angular.push_back(delta);
      angular.push_back(-delta);
    }
    angular = tidy(angular, -std::numbers::pi, std::numbers::pi);

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < radial.size(); ++i) {
      const QuadratureRule rr = gauss_legendre(opts.radial_order, radial[i], radial[i + 1]);
      const bool inside = radial[i + 1] <= rho_n;
      for (std::size_t j = 0; j + 1 < angular.size(); ++j) {
        const QuadratureRule ra = gauss_legendre(opts.angular_order, phi_c + angular[j], phi_c + angular[j + 1]);
        for (std::size_t p = 0; p < rr.nodes.size(); ++p) {
          const double r = rr.nodes[p];
          double acc = 0.0;
          for (std::size_t q = 0; q < ra.nodes.size(); ++q) {
            const double wq = w(r, ra.nodes[q]);
            acc += ra.weights[q] * (inside ? w_zero : wq) * std::exp(-0.25 * nn * wq);
          }
          total += rr.weights[p] * r * acc;
        }
      }
    }
    curve.abscissa.push_back(t1);
    curve.risk.push_back(nn * norm * total);
  }
  validate_curve(curve);
  return curve;
}

McEstimate james_stein_risk(const RVector& h, std::size_t samples, std::uint64_t seed, std::size_t workers) {
  if (h.size() != 3) throw ValidationError(fmt::format("james_stein_risk: h has length {}, expected 3", h.size()));
  if (samples < 2) throw ValidationError("james_stein_risk: need at least 2 samples");
  const std::size_t shards = (samples + kShardSize - 1) / kShardSize;
  std::vector<Moments> parts(shards);
  auto run = [&](std::size_t s) {
    const std::size_t count = std::min(kShardSize, samples - s * kShardSize);
    parts[s] = js_shard(h, count, SeededRNG::shard_seed(seed, s));
  };
  workers = std::clamp<std::size_t>(workers, 1, shards);
  if (workers == 1) {
    for (std::size_t s = 0; s < shards; ++s) run(s);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t s = w; s < shards; s += workers) run(s);
      });
    }
    for (auto& t : pool) t.join();
  }
  Moments total;
  for (const auto& p : parts) total.merge(p);
  McEstimate out;
  out.samples = samples;
  out.risk = total.mean;
  out.stderr_ = std::sqrt(total.m2 / (total.count - 1.0) / total.count);
  return out;
}

RiskCurve james_stein_curve(const std::vector<RVector>& hs, std::size_t samples, std::uint64_t seed,
                            std::size_t workers) {
  RiskCurve curve;
  curve.stderr_.emplace();
  curve.metadata["samples"] = std::to_string(samples);
  curve.metadata["seed"] = std::to_string(seed);
  curve.metadata["rng"] = SeededRNG::kAlgorithm;
  for (const auto& h : hs) {
    const McEstimate e = james_stein_risk(h, samples, seed, workers);
    curve.abscissa.push_back(h.norm());
    curve.risk.push_back(e.risk);
    curve.stderr_->push_back(e.stderr_);
  }
  validate_curve(curve);
  return curve;
}

RiskCurve regular_risk(const BoundResult& res, const RMatrix& g, const std::vector<double>& h_grid) {
  const RMatrix v = optimal_covariance(res, g);
  const double value = (g * v).trace();
  RiskCurve curve;
  curve.abscissa = h_grid;
  curve.risk.assign(h_grid.size(), value);
  validate_curve(curve);
  return curve;
}

double minimax_scan(const RiskCurve& curve, const std::vector<std::size_t>& indices) {
  validate_curve(curve);
  if (indices.empty()) throw ValidationError("minimax_scan: the index set is empty");
  double worst = -std::numeric_limits<double>::infinity();
  for (const std::size_t i : indices) {
    if (i >= curve.risk.size()) {
      throw ValidationError(fmt::format("minimax_scan: index {} out of range (curve has {} points)", i, curve.risk.size()));
    }
    worst = std::max(worst, curve.risk[i]);
  }
  return worst;
}

RiskCurve truncated_risk_3d(const std::vector<double>& h_norms, double threshold, std::size_t order) {
  if (!(threshold >= 0.0)) throw ValidationError("truncated_risk_3d: threshold must be non-negative");
  const double gauss_norm = std::pow(2.0 * std::numbers::pi, -1.5) * 2.0 * std::numbers::pi;
  RiskCurve curve;
  curve.metadata["threshold"] = fmt::format("{:.17g}", threshold);
  for (const double hn : h_norms) {
    if (!(hn >= 0.0)) throw ValidationError("truncated_risk_3d: ||h|| must be non-negative");
    // 3 + E[(||h||^2 - ||x - h||^2) 1{||x|| < c}] in spherical coordinates.
    const auto r_panels = static_cast<std::size_t>(std::ceil(threshold)) + 1;
    const auto u_panels = static_cast<std::size_t>(std::ceil(threshold * hn / 2.0)) + 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < r_panels; ++i) {
      const double r0 = threshold * static_cast<double>(i) / static_cast<double>(r_panels);
      const double r1 = threshold * static_cast<double>(i + 1) / static_cast<double>(r_panels);
      const QuadratureRule rr = gauss_legendre(order, r0, r1);
      for (std::size_t j = 0; j < u_panels; ++j) {
        const double u0 = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(u_panels);
        const double u1 = -1.0 + 2.0 * static_cast<double>(j + 1) / static_cast<double>(u_panels);
        const QuadratureRule ru = gauss_legendre(order, u0, u1);
        for (std::size_t p = 0; p < rr.nodes.size(); ++p) {
          const double rho = rr.nodes[p];
          for (std::size_t q = 0; q < ru.nodes.size(); ++q) {
            const double dist2 = rho * rho - 2.0 * rho * hn * ru.nodes[q] + hn * hn;
            acc += rr.weights[p] * ru.weights[q] * (hn * hn - dist2) * std::exp(-0.5 * dist2) * rho * rho;
          }
        }
      }
    }
    curve.abscissa.push_back(hn);
    curve.risk.push_back(3.0 + gauss_norm * acc);
  }
  validate_curve(curve);
  return curve;
}

}  // namespace qasym
