#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qasym/asym.hpp"
#include "qasym/bound.hpp"
#include "qasym/dext.hpp"
#include "qasym/error.hpp"
#include "qasym/estim.hpp"
#include "qasym/gauss.hpp"
#include "qasym/model.hpp"

namespace py = pybind11;
using namespace qasym;

namespace {

ParametricModel builtin(const std::string& tag) {
  if (tag == "pure_1d") return make_pure_1d();
  if (tag == "spin_coherent") return make_spin_coherent();
  if (tag == "bloch_ball") return make_bloch_ball();
  throw ValidationError("unknown builtin model '" + tag + "'");
}


}  // namespace

PYBIND11_MODULE(_qasym, mod) {
  mod.doc() = "Numerical core of the asymptotic quantum estimation toolkit";

  py::register_exception<ValidationError>(mod, "ValidationError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(mod, "ConvergenceError", PyExc_RuntimeError);

  // linalg
  mod.def("herm_eig", [](const CMatrix& h) {
    const HermEig e = herm_eig(h);
    return py::make_tuple(e.values, e.vectors);
  });
  mod.def("matrix_sqrt", [](const CMatrix& h) { return matrix_function(h, MatFn::Sqrt); });
  mod.def("geometric_mean", &geometric_mean);
  mod.def("geometric_mean_with_transpose", &geometric_mean_with_transpose);
  mod.def("trace_norm", &trace_norm);
  mod.def("kron", &kron);

  // model
  py::class_<ParametricModel>(mod, "ParametricModel")
      .def_property_readonly("name", &ParametricModel::name)
      .def_property_readonly("hilbert_dim", &ParametricModel::hilbert_dim)
      .def_property_readonly("param_dim", &ParametricModel::param_dim);
  mod.def("builtin_model", &builtin, py::arg("tag"));
  mod.def("affine_model", &make_affine, py::arg("rho0"), py::arg("directions"));
  mod.def("state_at", [](const ParametricModel& m, const RVector& th) { return state_at(m, th).matrix(); });
  mod.def("sld", &sld);
  mod.def("sld_fisher", &sld_fisher);
  mod.def("sqrt_likelihood_ratio", [](const CMatrix& rho, const CMatrix& sigma) {
    const auto l = sqrt_likelihood_ratio(DensityMatrix(rho), DensityMatrix(sigma));
    return py::make_tuple(l.R, l.sigma_perp, l.residual);
  });

  // dext
  mod.def("commutation_apply",
          [](const CMatrix& rho, const CMatrix& x) { return commutation_apply(DensityMatrix(rho), x); });
  py::class_<InvarianceReport>(mod, "InvarianceReport")
      .def_readonly("invariant", &InvarianceReport::invariant)
      .def_readonly("residuals", &InvarianceReport::residuals)
      .def_readonly("condition_i_gap", &InvarianceReport::condition_i_gap)
      .def_readonly("gram_min_eigenvalue", &InvarianceReport::gram_min_eigenvalue);
  mod.def(
      "check_d_invariance",
      [](const CMatrix& rho, const std::vector<CMatrix>& xs, double tol) {
        return check_d_invariance(DensityMatrix(rho), xs, tol);
      },
      py::arg("rho"), py::arg("xs"), py::arg("tol") = kInvarianceTolerance);
  py::class_<DExtension>(mod, "DExtension")
      .def_readonly("x", &DExtension::x)
      .def_readonly("f", &DExtension::f)
      .def_readonly("sigma", &DExtension::sigma)
      .def_readonly("a", &DExtension::a)
      .def_readonly("tau", &DExtension::tau)
      .def_property_readonly("r", &DExtension::r)
      .def_property_readonly("d", &DExtension::d);
  mod.def("build_d_extension", [](const CMatrix& rho, const std::vector<CMatrix>& slds) {
    return build_d_extension(DensityMatrix(rho), slds);
  });

  // gauss
  mod.def("quasi_char_function", [](const CMatrix& sigma, const RMatrix& f, const RVector& h,
                                     const std::vector<RVector>& xis) {
    return quasi_char_function(GaussianShiftSpec::from_extension(sigma, f), h, xis);
  });
  mod.def("purity", [](const CMatrix& sigma) {
    const Purity p = purity(sigma);
    return py::dict(py::arg("tr_rho_sq") = p.tr_rho_sq, py::arg("is_pure") = p.is_pure, py::arg("det_v") = p.det_v,
                    py::arg("det_s") = p.det_s);
  });
  mod.def("doubled_covariance", &doubled_covariance);

  // bound
  py::class_<BoundResult>(mod, "BoundResult")
      .def_readonly("value", &BoundResult::value)
      .def_readonly("k_star", &BoundResult::k_star)
      .def_readonly("z_star", &BoundResult::z_star)
      .def_readonly("v_star", &BoundResult::v_star)
      .def_readonly("iterations", &BoundResult::iterations);
  mod.def("rep_bound", [](const CMatrix& s, const CMatrix& t, const RMatrix& g) { return rep_bound(s, t, g); });
  mod.def("holevo_bound_iid",
          [](const ParametricModel& m, const RVector& th, const RMatrix& g) { return holevo_bound_iid(m, th, g); });

  // asym
  mod.def("iid_sandwich_gap", [](const ParametricModel& m, const RVector& th, const RVector& xi, const RVector& eta,
                                 std::size_t n) { return sandwich_value(iid_family(m, th), xi, eta, n).gap; });
  mod.def("iid_weyl_residual", [](const ParametricModel& m, const RVector& th, const RVector& xi, const RVector& eta,
                                  std::size_t n) { return weyl_residual(iid_family(m, th), xi, eta, n); });
  mod.def("no_limit_povm_demo", [](const std::vector<double>& hs, std::size_t n) {
    py::list out;
    for (const auto& r : no_limit_povm_demo(hs, n)) {
      out.append(py::dict(py::arg("h") = r.h, py::arg("finite_n_prob") = r.finite_n_prob,
                          py::arg("limit_prob") = r.limit_prob, py::arg("m_gap") = r.m_gap, py::arg("m_max") = r.m_max));
    }
    return out;
  });

  // estim
  mod.def(
      "hodges_risk",
      [](const std::vector<double>& grid, std::size_t n, bool truncate) {
        HodgesOptions o;
        o.truncate = truncate;
        return hodges_risk(grid, n, o).risk;
      },
      py::arg("grid"), py::arg("n"), py::arg("truncate") = true);
  mod.def(
      "james_stein_risk",
      [](const RVector& h, std::size_t samples, std::uint64_t seed, std::size_t workers) {
        const McEstimate e = james_stein_risk(h, samples, seed, workers);
        return py::make_tuple(e.risk, e.stderr_);
      },
      py::arg("h"), py::arg("samples"), py::arg("seed"), py::arg("workers") = 1);

}
