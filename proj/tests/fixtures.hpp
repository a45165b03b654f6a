#pragma once

// Random experiment inputs built on top of the library (unlike oracles.hpp).

#include <vector>

#include "oracles.hpp"
#include "qasym/dext.hpp"
#include "qasym/model.hpp"

namespace fixture {

using oracle::Rng;
using qasym::CMatrix;
using qasym::DExtension;
using qasym::ParametricModel;
using qasym::RMatrix;

/// theta -> rho0 + sum theta^i B_i with a faithful random rho0 and small traceless B_i.
ParametricModel random_affine_model(Rng& rng, Eigen::Index dim, std::size_t d);

/// Same span, different basis: the first d elements are kept (so F = [I; 0]),
/// the rest are mixed by a random invertible matrix and shifted by random
/// multiples of the first d.
DExtension rotated_extension(const qasym::DensityMatrix& rho, const DExtension& ext, Rng& rng);

/// For faithful rho: the extension padded with the whole zero-mean operator
/// space (trivially D-invariant), then rotated. Larger r than the greedy closure.
DExtension padded_extension(const qasym::DensityMatrix& rho, const DExtension& ext, Rng& rng);

struct SpanDraw {
  CMatrix rho;
  std::vector<CMatrix> xs;
};
/// Random qubit or qutrit state with 1-3 zero-mean observables; when
/// `close` is set the span is replaced by its D-closure.
SpanDraw random_span(Rng& rng, bool close);

}  // namespace fixture
