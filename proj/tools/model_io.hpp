#pragma once

// Model and Gaussian-spec files for the command-line tool.
//
// Model file:
//   {"dim": 2, "param_dim": 1, "kind": "affine",
//    "rho0": [[[0.5,0],[0,0]], [[0,0],[0.5,0]]],
//    "B": [ [[[0.5,0],[0,0]], [[0,0],[-0.5,0]]] ]}
//   {"dim": 2, "param_dim": 3, "kind": "builtin", "tag": "bloch_ball"}
//   {"dim": 2, "param_dim": 1, "kind": "builtin", "tag": "product_non_iid",
//    "params": {"base": [0, 0, 0.5], "decay": 0.5}}
// Complex entries are [re, im]; a bare number is read as a real entry.
//
// Gaussian file: {"sigma": matrix, "F": real matrix (optional), "tau": matrix (optional)}.

#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "qasym/gauss.hpp"
#include "qasym/model.hpp"

namespace qasym::cli {

using ModelHandle = std::variant<ParametricModel, ProductModel>;

/// A builtin name (pure_1d, spin_coherent, bloch_ball, product_non_iid) or a path to a model file.
ModelHandle load_model(const std::string& name_or_path);
ModelHandle model_from_json(const nlohmann::json& j);

/// Per-site model used for single-state questions (the limit site for products).
const ParametricModel& base_model(const ModelHandle& h);

CMatrix matrix_from_json(const nlohmann::json& j, const char* what);
nlohmann::json matrix_to_json(const CMatrix& m);
nlohmann::json matrix_to_json(const RMatrix& m);

GaussianShiftSpec load_gaussian(const std::string& path);
nlohmann::json gaussian_to_json(const CMatrix& sigma, const RMatrix& f);

}  // namespace qasym::cli
