#include "qasym/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>

#include <gsl/gsl_integration.h>

#include "qasym/error.hpp"

namespace qasym {

namespace {

struct FixedDeleter {
  void operator()(gsl_integration_fixed_workspace* w) const { gsl_integration_fixed_free(w); }
};

// Rules on a reference interval, cached per (type, n).
const QuadratureRule& cached_rule(const gsl_integration_fixed_type* type, std::size_t n) {
  static std::mutex mutex;
  static std::map<std::pair<const void*, std::size_t>, QuadratureRule> cache;
  const std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_pair(static_cast<const void*>(type), n);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  // Legendre on [0, 1]; Hermite with weight exp(-(x - 0)^2).
  std::unique_ptr<gsl_integration_fixed_workspace, FixedDeleter> w(
      gsl_integration_fixed_alloc(type, n, 0.0, 1.0, 0.0, 0.0));
  if (!w) throw ValidationError("quadrature: could not allocate rule");
  QuadratureRule rule;
  const double* x = gsl_integration_fixed_nodes(w.get());
  const double* wt = gsl_integration_fixed_weights(w.get());
  rule.nodes.assign(x, x + n);
  rule.weights.assign(wt, wt + n);
  return cache.emplace(key, std::move(rule)).first->second;
}

}  // namespace

QuadratureRule gauss_legendre(std::size_t n, double a, double b) {
  if (n == 0) throw ValidationError("gauss_legendre: need at least one node");
  const QuadratureRule& ref = cached_rule(gsl_integration_fixed_legendre, n);
  QuadratureRule out;
  out.nodes.resize(n);
  out.weights.resize(n);
  const double len = b - a;
  for (std::size_t i = 0; i < n; ++i) {
    out.nodes[i] = a + len * ref.nodes[i];
    out.weights[i] = len * ref.weights[i];
  }
  return out;
}

QuadratureRule gauss_hermite(std::size_t n) {
  if (n == 0) throw ValidationError("gauss_hermite: need at least one node");
  return cached_rule(gsl_integration_fixed_hermite, n);
}

}  // namespace qasym
