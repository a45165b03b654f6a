#pragma once

// Risk experiments: the quantum Hodges estimator's weighted risk on the spin
// coherent model, James-Stein shrinkage in the classical 3-d limit model, the
// constant risk of the regular optimal estimator and minimax scans.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qasym/bound.hpp"
#include "qasym/linalg.hpp"

namespace qasym {

struct RiskCurve {
  std::vector<double> abscissa;
  std::vector<double> risk;
  std::optional<std::vector<double>> stderr_;  // Monte Carlo only
  std::map<std::string, std::string> metadata;
};

/// Throws ValidationError unless lengths agree and every risk is finite and >= 0.
void validate_curve(const RiskCurve& c);

/// mt19937_64 uniforms (53-bit) turned into normals by Box-Muller.
/// The generator is part of the output contract: same seed, same stream.
class SeededRNG {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/box-muller";

  explicit SeededRNG(std::uint64_t seed);
  std::uint64_t seed() const { return seed_; }
  /// Uniform on (0, 1].
  double uniform();
  double normal();
  /// Seed of shard `index` derived from the master seed by splitmix64.
  static std::uint64_t shard_seed(std::uint64_t master, std::uint64_t index);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct HodgesOptions {
  std::size_t radial_order = 64;   // Gauss-Legendre nodes per radial panel
  std::size_t angular_order = 32;  // per angular panel
  bool truncate = true;            // false gives the plain (untruncated) estimator
};

/// n * E[w_theta(T_n)] for the Hodges estimator T_n on the plane theta^2 = 0,
/// with the estimate distributed as N(theta, (J/2)^{-1}/n) and truncation at
/// radius n^{-1/4}. Polar quadrature around the origin with panels
/// concentrated on the Gaussian.
RiskCurve hodges_risk(const std::vector<double>& theta1_grid, std::size_t n, const HodgesOptions& opts = {});

struct McEstimate {
  double risk = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

inline constexpr std::size_t kShardSize = 1u << 16;

/// E||y - h||^2 with x ~ N(h, I_3), y = (1 - 1/||x||) x. Samples are split into
/// fixed shards of kShardSize seeded from (seed, shard index) and reduced in
/// index order, so `workers` never changes the result.
McEstimate james_stein_risk(const RVector& h, std::size_t samples, std::uint64_t seed, std::size_t workers = 1);

/// James-Stein curve over a list of h vectors; abscissa is ||h||.
RiskCurve james_stein_curve(const std::vector<RVector>& hs, std::size_t samples, std::uint64_t seed,
                            std::size_t workers = 1);

/// Constant curve Tr(G V*) at every abscissa.
RiskCurve regular_risk(const BoundResult& res, const RMatrix& g, const std::vector<double>& h_grid);

/// sup of curve.risk over the given indices.
double minimax_scan(const RiskCurve& curve, const std::vector<std::size_t>& indices);

/// Risk E||T - h||^2 of the truncated estimator T = x 1{||x|| >= c} with
/// x ~ N(h, I_3), as a function of ||h|| (by quadrature over the ball).
RiskCurve truncated_risk_3d(const std::vector<double>& h_norms, double threshold, std::size_t order = 64);

}  // namespace qasym
