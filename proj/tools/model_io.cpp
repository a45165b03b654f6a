#include "model_io.hpp"

#include <fstream>

#include <fmt/format.h>

#include "qasym/error.hpp"

namespace qasym::cli {

using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
}

std::size_t require_count(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_unsigned()) {
    throw ValidationError(fmt::format("model file: '{}' must be a non-negative integer", key));
  }
  return j[key].get<std::size_t>();
}

void check_shape(const char* name, std::size_t got_dim, std::size_t want_dim, std::size_t got_d, std::size_t want_d) {
  if (got_dim != want_dim || got_d != want_d) {
    throw ValidationError(fmt::format("model file: {} has dim {} and param_dim {}, file says {} and {}", name, want_dim,
                                      want_d, got_dim, got_d));
  }
}

}  // namespace

CMatrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ValidationError(fmt::format("{}: expected a non-empty array of rows", what));
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError(fmt::format("{}: row {} has the wrong length", what, i));
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      const json& e = row[static_cast<std::size_t>(k)];
      if (e.is_number()) {
        m(i, k) = e.get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(i, k) = cplx(e[0].get<double>(), e[1].get<double>());
      } else {
        throw ValidationError(fmt::format("{}: entry ({}, {}) must be a number or [re, im]", what, i, k));
      }
    }
  }
  return m;
}

json matrix_to_json(const CMatrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back({m(i, k).real(), m(i, k).imag()});
    out.push_back(row);
  }
  return out;
}

json matrix_to_json(const RMatrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(row);
  }
  return out;
}

ModelHandle model_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("model file: top level must be an object");
  const std::size_t dim = require_count(j, "dim");
  const std::size_t d = require_count(j, "param_dim");
  const std::string kind = j.value("kind", "");
  if (kind == "builtin") {
    const std::string tag = j.value("tag", "");
    const json params = j.value("params", json::object());
    if (tag == "product_non_iid") {
      RVector base(3);
      base << 0.0, 0.0, 0.5;
      if (params.contains("base")) {
        const auto b = params["base"].get<std::vector<double>>();
        if (b.size() != 3) throw ValidationError("product_non_iid: base must have 3 entries");
        base << b[0], b[1], b[2];
      }
      ProductModel pm = make_product_non_iid(base, params.value("decay", 0.5), d);
      check_shape(tag.c_str(), dim, pm.hilbert_dim, d, pm.param_dim);
      return pm;
    }
    ParametricModel m = [&] {
      if (tag == "pure_1d") return make_pure_1d();
      if (tag == "spin_coherent") return make_spin_coherent();
      if (tag == "bloch_ball") return make_bloch_ball();
      throw ValidationError(fmt::format("model file: unknown builtin tag '{}'", tag));
    }();
    check_shape(tag.c_str(), dim, m.hilbert_dim(), d, m.param_dim());
    return m;
  }
  if (kind == "affine") {
    if (!j.contains("rho0") || !j.contains("B")) throw ValidationError("affine model needs 'rho0' and 'B'");
    CMatrix rho0 = matrix_from_json(j["rho0"], "rho0");
    std::vector<CMatrix> dirs;
    for (const auto& b : j["B"]) dirs.push_back(matrix_from_json(b, "B_i"));
    if (static_cast<std::size_t>(rho0.rows()) != dim || dirs.size() != d) {
      throw ValidationError(fmt::format("affine model: rho0 is {}x{} with {} directions, file says dim {} and param_dim {}",
                                        rho0.rows(), rho0.cols(), dirs.size(), dim, d));
    }
    return make_affine(std::move(rho0), std::move(dirs));
  }
  throw ValidationError(fmt::format("model file: kind must be 'builtin' or 'affine', got '{}'", kind));
}

ModelHandle load_model(const std::string& name_or_path) {
  if (name_or_path == "pure_1d") return make_pure_1d();
  if (name_or_path == "spin_coherent") return make_spin_coherent();
  if (name_or_path == "bloch_ball") return make_bloch_ball();
  if (name_or_path == "product_non_iid") {
    RVector base(3);
    base << 0.0, 0.0, 0.5;
    return make_product_non_iid(base, 0.5, 1);
  }
  return model_from_json(read_json(name_or_path));
}

const ParametricModel& base_model(const ModelHandle& h) {
  if (const auto* m = std::get_if<ParametricModel>(&h)) return *m;
  return std::get<ProductModel>(h).limit;
}

GaussianShiftSpec load_gaussian(const std::string& path) {
  const json j = read_json(path);
  if (!j.is_object() || !j.contains("sigma")) throw ValidationError("Gaussian file needs a 'sigma' matrix");
  CMatrix sigma = matrix_from_json(j["sigma"], "sigma");
  if (!j.contains("F") && !j.contains("tau")) return GaussianShiftSpec::covariance_only(std::move(sigma));
  if (!j.contains("F")) throw ValidationError("Gaussian file: 'tau' given without 'F'");
  const RMatrix f = matrix_from_json(j["F"], "F").real();
  if (j.contains("tau")) return GaussianShiftSpec(std::move(sigma), matrix_from_json(j["tau"], "tau"), f);
  return GaussianShiftSpec::from_extension(std::move(sigma), f);
}

json gaussian_to_json(const CMatrix& sigma, const RMatrix& f) {
  return json{{"sigma", matrix_to_json(sigma)}, {"F", matrix_to_json(f)}, {"tau", matrix_to_json(CMatrix(sigma * f.cast<cplx>()))}};
}

}  // namespace qasym::cli
