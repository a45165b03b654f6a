#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "model_io.hpp"
#include "qasym/asym.hpp"
#include "qasym/bound.hpp"
#include "qasym/dext.hpp"
#include "qasym/error.hpp"
#include "qasym/estim.hpp"
#include "qasym/gauss.hpp"

#ifndef QASYM_VERSION
#define QASYM_VERSION "0.0.0"
#endif

namespace qasym::cli {

using nlohmann::json;

namespace {

std::string format_cell(const Table::Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return fmt::format("{:.17g}", *d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (const char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const char* what) {
  const std::string s = text.substr(text.find_first_not_of(" \t") == std::string::npos ? 0 : text.find_first_not_of(" \t"));
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end == s.c_str() || std::string(end).find_first_not_of(" \t") != std::string::npos) {
    throw ValidationError(fmt::format("{}: '{}' is not a number", what, text));
  }
  return v;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  if (s.empty()) throw ValidationError(fmt::format("{}: empty list", what));
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(parse_double(part, what));
  return out;
}

RVector parse_vector(const std::string& s, const char* what) {
  const auto v = parse_list(s, what);
  return Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<RVector> parse_vectors(const std::string& s, const char* what) {
  std::vector<RVector> out;
  for (const auto& part : split(s, ';')) out.push_back(parse_vector(part, what));
  return out;
}

std::vector<std::size_t> parse_counts(const std::string& s, const char* what) {
  std::vector<std::size_t> out;
  for (const double v : parse_list(s, what)) {
    if (!(v >= 1.0) || v != std::floor(v)) throw ValidationError(fmt::format("{}: {} is not a positive integer", what, v));
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

// "a:b:k" -> k evenly spaced points from a to b, otherwise a comma list.
std::vector<double> parse_grid(const std::string& s, const char* what) {
  if (s.find(':') == std::string::npos) return parse_list(s, what);
  const auto parts = split(s, ':');
  if (parts.size() != 3) throw ValidationError(fmt::format("{}: expected start:stop:count", what));
  const double a = parse_double(parts[0], what);
  const double b = parse_double(parts[1], what);
  const double k = parse_double(parts[2], what);
  if (!(k >= 1.0) || k != std::floor(k)) throw ValidationError(fmt::format("{}: count must be a positive integer", what));
  const auto count = static_cast<std::size_t>(k);
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return out;
}

RMatrix parse_weight(const std::string& w, const ParametricModel* m, const RVector* theta, Eigen::Index d) {
  if (w == "identity") return RMatrix::Identity(d, d);
  if (w == "fisher") {
    if (m == nullptr) throw ValidationError("--weight fisher needs a model");
    return sld_fisher(*m, *theta);
  }
  if (w.rfind("diag:", 0) == 0) {
    const RVector v = parse_vector(w.substr(5), "--weight");
    if (v.size() != d) throw ValidationError(fmt::format("--weight diag has {} entries, expected {}", v.size(), d));
    return v.asDiagonal();
  }
  throw ValidationError(fmt::format("--weight must be identity, fisher or diag:..., got '{}'", w));
}

void add_matrix(Table& t, const std::string& name, const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      t.rows.push_back({name, static_cast<long long>(i), static_cast<long long>(k), m(i, k).real(), m(i, k).imag()});
    }
  }
}

Table matrix_table() { return Table{{"name", "row", "col", "re", "im"}, {}}; }

Table quantity_table() { return Table{{"quantity", "value"}, {}}; }

void add_quantity(Table& t, const std::string& name, double v) { t.rows.push_back({name, v}); }

void add_real_matrix(Table& t, const std::string& name, const RMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) add_quantity(t, fmt::format("{}[{},{}]", name, i, k), m(i, k));
  }
}

Table curve_table(const RiskCurve& c) {
  Table t{{"abscissa", "risk"}, {}};
  if (c.stderr_) t.columns.push_back("stderr");
  for (std::size_t i = 0; i < c.risk.size(); ++i) {
    std::vector<Table::Cell> row{c.abscissa[i], c.risk[i]};
    if (c.stderr_) row.emplace_back((*c.stderr_)[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

struct Args {
  std::string model = "bloch_ball";
  std::string theta;
  std::string weight = "identity";
  std::string input;
  std::string out;
  std::string format = "csv";
  std::string xi;
  std::string eta;
  std::string h;
  std::string n = "1000000";
  std::string grid;
  std::string indices;
  std::string curve;
  std::string gaussian_out;
  double tol = kInvarianceTolerance;
  double threshold = -1.0;
  std::size_t samples = 1000000;
  unsigned long long seed = 7;
  std::size_t workers = 1;
  std::size_t radial_order = 64;
  std::size_t angular_order = 32;
  std::size_t hermite_order = 64;
  bool no_truncate = false;
  BarrierOptions barrier;
};

RVector theta_or_zero(const Args& a, const ParametricModel& m) {
  if (a.theta.empty()) return RVector::Zero(static_cast<Eigen::Index>(m.param_dim()));
  return parse_vector(a.theta, "--theta");
}

SiteFamily family_for(const ModelHandle& h, const RVector& theta) {
  if (const auto* pm = std::get_if<ProductModel>(&h)) return product_family(*pm, theta);
  return iid_family(std::get<ParametricModel>(h), theta);
}

std::filesystem::path resolve_out(const std::string& out) {
  std::filesystem::path p(out);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("QASYM_OUTPUT_DIR"); dir != nullptr && *dir != '\0') p = std::filesystem::path(dir) / p;
  }
  return p;
}

}  // namespace

void write_csv(std::ostream& os, const Table& t, const RunInfo& info) {
  os << "# qasym " << QASYM_VERSION << '\n';
  os << "# command: " << info.command << '\n';
  std::string joined;
  for (const auto& a : info.args) joined += (joined.empty() ? "" : " ") + a;
  os << "# args: " << joined << '\n';
  os << "# seed: " << (info.seed ? std::to_string(*info.seed) : std::string("none")) << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
    os << '\n';
  }
}

void write_json(std::ostream& os, const Table& t, const RunInfo& info) {
  json meta{{"tool", "qasym"}, {"version", QASYM_VERSION}, {"command", info.command}, {"args", info.args}};
  meta["seed"] = info.seed ? json(*info.seed) : json(nullptr);
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (const auto& c : row) std::visit([&](const auto& v) { r.push_back(v); }, c);
    rows.push_back(r);
  }
  os << json{{"meta", meta}, {"columns", t.columns}, {"rows", rows}}.dump(2) << '\n';
}

namespace {

struct CsvField {
  std::string text;
  bool quoted = false;
};

// One record; quoted fields may contain separators, doubled quotes and newlines.
bool read_record(std::istream& is, std::vector<CsvField>& out) {
  out.clear();
  std::string line;
  if (!std::getline(is, line)) return false;
  CsvField cur;
  bool in_quotes = false;
  for (std::size_t i = 0;; ++i) {
    if (i == line.size()) {
      if (in_quotes && std::getline(is, line)) {
        cur.text += '\n';
        i = static_cast<std::size_t>(-1);
        continue;
      }
      break;
    }
    const char ch = line[i];
    if (in_quotes) {
      if (ch != '"') {
        cur.text += ch;
      } else if (i + 1 < line.size() && line[i + 1] == '"') {
        cur.text += '"';
        ++i;
      } else {
        in_quotes = false;
      }
    } else if (ch == '"') {
      in_quotes = cur.quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur = {};
    } else {
      cur.text += ch;
    }
  }
  if (in_quotes) throw ValidationError("CSV input has an unterminated quoted field");
  out.push_back(std::move(cur));
  return true;
}

}  // namespace

Table read_csv(std::istream& is) {
  Table t;
  bool header = true;
  std::vector<CsvField> fields;
  while (true) {
    const auto pos = is.tellg();
    std::string peek;
    if (!std::getline(is, peek)) break;
    if (peek.empty() || peek[0] == '#') continue;
    is.clear();
    is.seekg(pos);
    read_record(is, fields);
    if (header) {
      for (auto& f : fields) t.columns.push_back(std::move(f.text));
      header = false;
      continue;
    }
    std::vector<Table::Cell> row;
    for (const auto& f : fields) {
      char* end = nullptr;
      const double v = f.quoted ? 0.0 : std::strtod(f.text.c_str(), &end);
      if (!f.quoted && !f.text.empty() && *end == '\0') {
        row.emplace_back(v);
      } else {
        row.emplace_back(f.text);
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (header) throw ValidationError("CSV input has no header row");
  return t;
}

int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  Args a;
  CLI::App app{"Asymptotic quantum estimation toolkit", "qasym"};
  // --h is the local shift, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string(QASYM_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  auto add_io = [&](CLI::App* c) {
    c->add_option("--out", a.out, "Output file (relative paths resolve against QASYM_OUTPUT_DIR)");
    c->add_option("--format", a.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  auto add_model = [&](CLI::App* c) {
    c->add_option("--model", a.model, "Builtin model name or model JSON file");
    c->add_option("--theta", a.theta, "Parameter point, comma separated (default 0)");
  };

  auto* model_cmd = app.add_subcommand("model", "Model inspection")->require_subcommand(1);
  auto* model_show = model_cmd->add_subcommand("show", "Print rho_theta");
  add_model(model_show);
  add_io(model_show);

  auto* sld_cmd = app.add_subcommand("sld", "Symmetric logarithmic derivatives");
  add_model(sld_cmd);
  add_io(sld_cmd);
  auto* fisher_cmd = app.add_subcommand("fisher", "SLD Fisher information");
  add_model(fisher_cmd);
  add_io(fisher_cmd);

  auto* dext_cmd = app.add_subcommand("dext", "D-invariant extensions")->require_subcommand(1);
  auto* dext_check = dext_cmd->add_subcommand("check", "Is the SLD span D-invariant?");
  auto* dext_build = dext_cmd->add_subcommand("build", "Greedy D-invariant extension of the SLD span");
  for (auto* c : {dext_check, dext_build}) {
    add_model(c);
    add_io(c);
    c->add_option("--tol", a.tol, "Invariance tolerance");
  }
  dext_build->add_option("--gaussian-out", a.gaussian_out, "Also write Sigma and F as a Gaussian JSON file");

  auto* bound_cmd = app.add_subcommand("bound", "Representation bound")->require_subcommand(1);
  auto* bound_rep = bound_cmd->add_subcommand("rep", "Bound for a Gaussian file (Sigma, tau or F)");
  bound_rep->add_option("--input", a.input, "Gaussian JSON file")->required();
  auto* bound_holevo = bound_cmd->add_subcommand("holevo", "Holevo bound of a model via its D-extension");
  add_model(bound_holevo);
  for (auto* c : {bound_rep, bound_holevo}) {
    add_io(c);
    c->add_option("--weight", a.weight, "identity, fisher or diag:w1,w2,...");
    c->add_option("--mu0", a.barrier.mu0, "Initial barrier weight");
    c->add_option("--barrier-factor", a.barrier.factor, "Barrier weight reduction factor");
    c->add_option("--barrier-tol", a.barrier.tolerance, "Stop when mu (d + r) falls below this");
  }

  auto* gauss_cmd = app.add_subcommand("gauss", "Gaussian shift family")->require_subcommand(1);
  auto* gauss_purity = gauss_cmd->add_subcommand("purity", "Tr rho^2 of N(0, Sigma)");
  auto* gauss_split = gauss_cmd->add_subcommand("split", "Classical/quantum splitting of Sigma");
  auto* gauss_char = gauss_cmd->add_subcommand("char", "(Quasi-)characteristic function");
  for (auto* c : {gauss_purity, gauss_split, gauss_char}) {
    add_io(c);
    c->add_option("--input", a.input, "Gaussian JSON file")->required();
  }
  gauss_char->add_option("--h", a.h, "Shift h (default 0)");
  gauss_char->add_option("--xi", a.xi, "xi_1;xi_2;... (ordered product)")->required();

  auto* asym_cmd = app.add_subcommand("asym", "Finite-n convergence diagnostics")->require_subcommand(1);
  auto* asym_sandwich = asym_cmd->add_subcommand("sandwich", "Sandwich condition gap");
  auto* asym_clt = asym_cmd->add_subcommand("clt", "Quasi-characteristic convergence under the shifted state");
  auto* asym_weyl = asym_cmd->add_subcommand("weyl", "Asymptotic Weyl CCR residual");
  auto* asym_qlan = asym_cmd->add_subcommand("qlan", "q-LAN residual on materialized tensor powers");
  auto* asym_povm = asym_cmd->add_subcommand("povm-demo", "Binary POVM without a limiting POVM");
  for (auto* c : {asym_sandwich, asym_clt, asym_weyl, asym_qlan, asym_povm}) {
    add_io(c);
    c->add_option("--n", a.n, "Sample sizes, comma separated");
  }
  for (auto* c : {asym_sandwich, asym_clt, asym_weyl, asym_qlan}) add_model(c);
  for (auto* c : {asym_sandwich, asym_weyl}) {
    c->add_option("--xi", a.xi, "xi")->required();
    c->add_option("--eta", a.eta, "eta")->required();
  }
  asym_clt->add_option("--h", a.h, "Local shift h (default 0)");
  asym_clt->add_option("--xi", a.xi, "xi_1;xi_2;...")->required();
  asym_qlan->add_option("--h", a.h, "Local shift h")->required();
  asym_povm->add_option("--h", a.h, "h values, comma separated")->required();
  asym_povm->add_option("--hermite-order", a.hermite_order, "Gauss-Hermite nodes");

  auto* estim_cmd = app.add_subcommand("estim", "Risk experiments")->require_subcommand(1);
  auto* estim_hodges = estim_cmd->add_subcommand("hodges", "Quantum Hodges weighted risk curve");
  auto* estim_js = estim_cmd->add_subcommand("james-stein", "James-Stein Monte Carlo risk");
  auto* estim_regular = estim_cmd->add_subcommand("regular", "Constant risk of the regular optimal estimator");
  auto* estim_minimax = estim_cmd->add_subcommand("minimax", "sup of a risk curve over an index set");
  auto* estim_trunc = estim_cmd->add_subcommand("truncated", "Truncated estimator risk in the 3-d classical limit");
  for (auto* c : {estim_hodges, estim_js, estim_regular, estim_minimax, estim_trunc}) add_io(c);
  estim_hodges->add_option("--theta1", a.grid, "theta1 grid: list or start:stop:count")->required();
  estim_hodges->add_option("--n", a.n, "Sample sizes, comma separated");
  estim_hodges->add_flag("--no-truncate", a.no_truncate, "Disable the truncation (plain estimator)");
  estim_hodges->add_option("--radial-order", a.radial_order, "Gauss-Legendre nodes per radial panel");
  estim_hodges->add_option("--angular-order", a.angular_order, "Gauss-Legendre nodes per angular panel");
  estim_js->add_option("--h", a.h, "h vectors, h1;h2;... (3 entries each)")->required();
  estim_js->add_option("--samples", a.samples, "Monte Carlo samples per h");
  estim_js->add_option("--seed", a.seed, "Master seed");
  estim_js->add_option("--workers", a.workers, "Worker threads (does not change the result)");
  add_model(estim_regular);
  estim_regular->add_option("--weight", a.weight, "identity, fisher or diag:w1,w2,...");
  estim_regular->add_option("--h", a.h, "Abscissa grid");
  estim_minimax->add_option("--curve", a.curve, "CSV curve written by another estim command")->required();
  estim_minimax->add_option("--indices", a.indices, "Row indices (default all)");
  estim_trunc->add_option("--h", a.h, "||h|| grid: list or start:stop:count")->required();
  estim_trunc->add_option("--threshold", a.threshold, "Truncation radius (default n^{1/4})");
  estim_trunc->add_option("--n", a.n, "Sample size used for the default threshold");

  std::vector<std::string> reversed(argv.rbegin(), argv.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return 1;
  }

  RunInfo info;
  info.args = argv;
  Table table;
  try {
    auto model_point = [&]() {
      ModelHandle h = load_model(a.model);
      const ParametricModel& m = base_model(h);
      return std::make_pair(std::move(h), theta_or_zero(a, m));
    };

    if (model_show->parsed()) {
      info.command = "model show";
      auto [h, theta] = model_point();
      table = matrix_table();
      add_matrix(table, "rho", state_at(base_model(h), theta).matrix());
    } else if (sld_cmd->parsed()) {
      info.command = "sld";
      auto [h, theta] = model_point();
      table = matrix_table();
      const auto ls = sld(base_model(h), theta);
      for (std::size_t i = 0; i < ls.size(); ++i) add_matrix(table, fmt::format("L{}", i + 1), ls[i]);
    } else if (fisher_cmd->parsed()) {
      info.command = "fisher";
      auto [h, theta] = model_point();
      table = quantity_table();
      add_real_matrix(table, "J", sld_fisher(base_model(h), theta));
    } else if (dext_check->parsed()) {
      info.command = "dext check";
      auto [h, theta] = model_point();
      const ParametricModel& m = base_model(h);
      const DensityMatrix rho = state_at(m, theta);
      std::vector<CMatrix> xs;
      for (const auto& l : sld(m, theta)) {
        xs.push_back(l - (rho.matrix() * l).trace().real() * CMatrix::Identity(l.rows(), l.cols()));
      }
      const InvarianceReport rep = check_d_invariance(rho, xs, a.tol);
      table = quantity_table();
      add_quantity(table, "invariant", rep.invariant ? 1.0 : 0.0);
      add_quantity(table, "condition_i_gap", rep.condition_i_gap);
      add_quantity(table, "gram_min_eigenvalue", rep.gram_min_eigenvalue);
      for (std::size_t i = 0; i < rep.residuals.size(); ++i) add_quantity(table, fmt::format("residual[{}]", i), rep.residuals[i]);
    } else if (dext_build->parsed()) {
      info.command = "dext build";
      auto [h, theta] = model_point();
      const ParametricModel& m = base_model(h);
      const DExtension ext = build_d_extension(state_at(m, theta), sld(m, theta), a.tol);
      table = matrix_table();
      for (std::size_t i = 0; i < ext.x.size(); ++i) add_matrix(table, fmt::format("X{}", i + 1), ext.x[i]);
      add_matrix(table, "Sigma", ext.sigma);
      add_matrix(table, "A", ext.a.cast<cplx>());
      add_matrix(table, "F", ext.f.cast<cplx>());
      if (!a.gaussian_out.empty()) {
        std::ofstream g(resolve_out(a.gaussian_out));
        if (!g) throw ValidationError(fmt::format("cannot write '{}'", a.gaussian_out));
        g << gaussian_to_json(ext.sigma, ext.f).dump(2) << '\n';
      }
    } else if (bound_rep->parsed() || bound_holevo->parsed()) {
      BoundResult res;
      RMatrix g;
      if (bound_rep->parsed()) {
        info.command = "bound rep";
        const GaussianShiftSpec spec = load_gaussian(a.input);
        if (spec.d() == 0) throw ValidationError("bound rep: the Gaussian file needs F or tau");
        g = parse_weight(a.weight, nullptr, nullptr, spec.d());
        res = rep_bound(spec.sigma(), spec.tau(), g, a.barrier);
      } else {
        info.command = "bound holevo";
        auto [h, theta] = model_point();
        const ParametricModel& m = base_model(h);
        g = parse_weight(a.weight, &m, &theta, static_cast<Eigen::Index>(m.param_dim()));
        res = holevo_bound_iid(m, theta, g, a.barrier);
      }
      table = quantity_table();
      add_quantity(table, "value", res.value);
      add_quantity(table, "barrier_gap", res.gap);
      add_quantity(table, "iterations", static_cast<double>(res.iterations));
      add_real_matrix(table, "V_star", res.v_star);
      add_real_matrix(table, "K_star", res.k_star);
    } else if (gauss_purity->parsed()) {
      info.command = "gauss purity";
      const Purity p = purity(load_gaussian(a.input).sigma());
      table = quantity_table();
      add_quantity(table, "tr_rho_sq", p.tr_rho_sq);
      add_quantity(table, "is_pure", p.is_pure ? 1.0 : 0.0);
      add_quantity(table, "det_v", p.det_v);
      add_quantity(table, "det_s", p.det_s);
    } else if (gauss_split->parsed()) {
      info.command = "gauss split";
      const SplitForm s = split_classical_quantum(load_gaussian(a.input).sigma());
      table = matrix_table();
      table.rows.push_back({std::string("r_c"), 0LL, 0LL, static_cast<double>(s.r_c), 0.0});
      table.rows.push_back({std::string("r_q"), 0LL, 0LL, static_cast<double>(s.r_q), 0.0});
      table.rows.push_back({std::string("condition_number"), 0LL, 0LL, s.condition_number, 0.0});
      table.rows.push_back({std::string("residual"), 0LL, 0LL, s.residual, 0.0});
      add_matrix(table, "transform", s.transform.cast<cplx>());
      add_matrix(table, "sigma_c", s.sigma_c.cast<cplx>());
      add_matrix(table, "sigma_q", s.sigma_q);
    } else if (gauss_char->parsed()) {
      info.command = "gauss char";
      const GaussianShiftSpec spec = load_gaussian(a.input);
      const RVector h = a.h.empty() ? RVector::Zero(spec.d()) : parse_vector(a.h, "--h");
      const auto xis = parse_vectors(a.xi, "--xi");
      const cplx v = quasi_char_function(spec, h, xis);
      table = quantity_table();
      add_quantity(table, "re", v.real());
      add_quantity(table, "im", v.imag());
    } else if (asym_sandwich->parsed() || asym_weyl->parsed()) {
      const bool sandwich = asym_sandwich->parsed();
      info.command = sandwich ? "asym sandwich" : "asym weyl";
      auto [h, theta] = model_point();
      const SiteFamily fam = family_for(h, theta);
      const RVector xi = parse_vector(a.xi, "--xi");
      const RVector eta = parse_vector(a.eta, "--eta");
      if (sandwich) {
        table = Table{{"n", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "gap"}, {}};
      } else {
        table = Table{{"n", "residual"}, {}};
      }
      for (const std::size_t n : parse_counts(a.n, "--n")) {
        if (sandwich) {
          const SandwichValue s = sandwich_value(fam, xi, eta, n);
          table.rows.push_back({static_cast<long long>(n), s.lhs.real(), s.lhs.imag(), s.rhs.real(), s.rhs.imag(), s.gap});
        } else {
          table.rows.push_back({static_cast<long long>(n), weyl_residual(fam, xi, eta, n)});
        }
      }
    } else if (asym_clt->parsed()) {
      info.command = "asym clt";
      auto [h, theta] = model_point();
      const SiteFamily fam = family_for(h, theta);
      const RVector shift = a.h.empty() ? RVector::Zero(theta.size()) : parse_vector(a.h, "--h");
      const auto xis = parse_vectors(a.xi, "--xi");
      table = Table{{"n", "finite_re", "finite_im", "limit_re", "limit_im", "gap"}, {}};
      for (const std::size_t n : parse_counts(a.n, "--n")) {
        const QuasiCharValue q = quasi_char_finite_n(fam, shift, xis, n);
        table.rows.push_back({static_cast<long long>(n), q.finite_n.real(), q.finite_n.imag(), q.limit.real(),
                              q.limit.imag(), q.gap});
      }
    } else if (asym_qlan->parsed()) {
      info.command = "asym qlan";
      auto [h, theta] = model_point();
      const RVector shift = parse_vector(a.h, "--h");
      table = Table{{"n", "residual", "log_ratio_norm", "score_norm", "singular_mass", "total_dim"}, {}};
      for (const std::size_t n : parse_counts(a.n, "--n")) {
        const QlanResidual q = qlan_residual(base_model(h), theta, shift, n);
        table.rows.push_back({static_cast<long long>(n), q.residual, q.log_ratio_norm, q.score_norm, q.singular_mass,
                              static_cast<long long>(q.total_dim)});
      }
    } else if (asym_povm->parsed()) {
      info.command = "asym povm-demo";
      const auto hs = parse_list(a.h, "--h");
      table = Table{{"n", "h", "finite_n_prob", "limit_prob", "m_integral", "m_gap", "m_max"}, {}};
      for (const std::size_t n : parse_counts(a.n, "--n")) {
        for (const auto& r : no_limit_povm_demo(hs, n, a.hermite_order)) {
          table.rows.push_back({static_cast<long long>(n), r.h, r.finite_n_prob, r.limit_prob, r.m_integral, r.m_gap, r.m_max});
        }
      }
    } else if (estim_hodges->parsed()) {
      info.command = "estim hodges";
      const auto grid = parse_grid(a.grid, "--theta1");
      HodgesOptions o;
      o.radial_order = a.radial_order;
      o.angular_order = a.angular_order;
      o.truncate = !a.no_truncate;
      table = Table{{"n", "abscissa", "risk"}, {}};
      for (const std::size_t n : parse_counts(a.n, "--n")) {
        const RiskCurve c = hodges_risk(grid, n, o);
        for (std::size_t i = 0; i < c.risk.size(); ++i) table.rows.push_back({static_cast<long long>(n), c.abscissa[i], c.risk[i]});
      }
    } else if (estim_js->parsed()) {
      info.command = "estim james-stein";
      info.seed = a.seed;
      const auto hs = parse_vectors(a.h, "--h");
      table = curve_table(james_stein_curve(hs, a.samples, a.seed, a.workers));
    } else if (estim_regular->parsed()) {
      info.command = "estim regular";
      auto [h, theta] = model_point();
      const ParametricModel& m = base_model(h);
      const RMatrix g = parse_weight(a.weight, &m, &theta, static_cast<Eigen::Index>(m.param_dim()));
      const BoundResult res = holevo_bound_iid(m, theta, g);
      const auto grid = a.h.empty() ? std::vector<double>{0.0} : parse_grid(a.h, "--h");
      table = curve_table(regular_risk(res, g, grid));
    } else if (estim_minimax->parsed()) {
      info.command = "estim minimax";
      std::ifstream in(a.curve);
      if (!in) throw ValidationError(fmt::format("cannot open '{}'", a.curve));
      const Table src = read_csv(in);
      const auto col = std::find(src.columns.begin(), src.columns.end(), "risk");
      if (col == src.columns.end()) throw ValidationError("curve file has no 'risk' column");
      const auto idx = static_cast<std::size_t>(col - src.columns.begin());
      RiskCurve c;
      for (std::size_t i = 0; i < src.rows.size(); ++i) {
        const auto* v = std::get_if<double>(&src.rows[i].at(idx));
        if (v == nullptr) throw ValidationError(fmt::format("curve file: row {} has a non-numeric risk", i));
        c.abscissa.push_back(static_cast<double>(i));
        c.risk.push_back(*v);
      }
      std::vector<std::size_t> indices;
      if (a.indices.empty()) {
        indices.resize(c.risk.size());
        std::iota(indices.begin(), indices.end(), 0);
      } else {
        for (const double v : parse_list(a.indices, "--indices")) {
          if (!(v >= 0.0) || v != std::floor(v)) throw ValidationError("--indices must be non-negative integers");
          indices.push_back(static_cast<std::size_t>(v));
        }
      }
      table = quantity_table();
      add_quantity(table, "sup_risk", minimax_scan(c, indices));
    } else if (estim_trunc->parsed()) {
      info.command = "estim truncated";
      double threshold = a.threshold;
      if (threshold < 0.0) threshold = std::pow(static_cast<double>(parse_counts(a.n, "--n").front()), 0.25);
      table = curve_table(truncated_risk_3d(parse_grid(a.h, "--h"), threshold));
    }
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  auto emit = [&](std::ostream& os) {
    if (a.format == "json") {
      write_json(os, table, info);
    } else {
      write_csv(os, table, info);
    }
  };
  if (a.out.empty()) {
    emit(out);
  } else {
    const auto path = resolve_out(a.out);
    std::ofstream f(path);
    if (!f) {
      err << "error: cannot write '" << path.string() << "'\n";
      return 1;
    }
    emit(f);
  }
  return 0;
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace qasym::cli
