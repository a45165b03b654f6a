#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "qasym/bound.hpp"
#include "qasym/estim.hpp"
#include "qasym/model.hpp"

using namespace qasym;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

cli::Table parse(const std::string& csv) {
  std::istringstream in(csv);
  return cli::read_csv(in);
}

double cell(const cli::Table& t, std::size_t row, const std::string& column) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (t.columns[c] != column) continue;
    const auto& v = t.rows.at(row).at(c);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<long long>(&v)) return static_cast<double>(*i);
  }
  FAIL("no numeric column " << column);
  return 0.0;
}

// value column of a quantity,value table
double quantity(const cli::Table& t, const std::string& name) {
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (std::get<std::string>(t.rows[r][0]) == name) return cell(t, r, "value");
  }
  FAIL("no quantity " << name);
  return 0.0;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("qasym_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path data_file(const std::string& name) {
  const char* dir = std::getenv("QASYM_TEST_DATA");
  return fs::path(dir ? dir : "tests/data") / name;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"--version"}).code == 0);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  const Run bogus = run({"bound", "holevo", "--model", "bloch_ball", "--bogus"});
  CHECK(bogus.code == 1);
  CHECK(bogus.err.find("--bogus") != std::string::npos);
  CHECK(run({"model", "show", "--model", "bloch_ball", "--theta", "1,0,0"}).code == 1);
  CHECK(run({"model", "show", "--model", "bloch_ball", "--theta", "0,zero,0"}).code == 1);
  CHECK(run({"fisher", "--model", "no_such_model.json"}).code == 1);
  // a barrier schedule that cannot finish inside the Newton budget
  CHECK(run({"bound", "holevo", "--model", "spin_coherent", "--theta", "0.1,0", "--barrier-factor", "0.999"}).code == 2);
}

TEST_CASE("bound holevo") {
  const Run r = run({"bound", "holevo", "--model", "bloch_ball", "--theta", "0,0,0", "--weight", "identity"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\nvalue,3\n") != std::string::npos);
  CHECK(r.out.rfind("# qasym ", 0) == 0);
  CHECK(r.out.find("# args: bound holevo --model bloch_ball --theta 0,0,0 --weight identity\n") != std::string::npos);

  const Run sc = run({"bound", "holevo", "--model", "spin_coherent", "--theta", "0.2,0.1", "--weight", "fisher"});
  REQUIRE(sc.code == 0);
  CHECK(std::abs(quantity(parse(sc.out), "value") - 4.0) < 1e-6);

  const Run diag = run({"bound", "holevo", "--model", "bloch_ball", "--theta", "0,0,0", "--weight", "diag:1,2,3"});
  REQUIRE(diag.code == 0);
  CHECK(quantity(parse(diag.out), "value") == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(run({"bound", "holevo", "--model", "bloch_ball", "--weight", "diag:1,2"}).code == 1);
}

TEST_CASE("CSV round trip") {
  cli::Table t;
  t.columns = {"name", "x", "k"};
  const std::vector<double> xs{1.0 / 3.0, -2.5e-300, 6.02214076e23, std::nextafter(1.0, 2.0), 0.0,
                               std::numeric_limits<double>::denorm_min()};
  for (std::size_t i = 0; i < xs.size(); ++i) t.rows.push_back({std::string("row, \"") + std::to_string(i) + "\"", xs[i], static_cast<long long>(i)});
  std::ostringstream os;
  cli::write_csv(os, t, {"test", {"a", "b"}, 5ull});
  const cli::Table back = parse(os.str());
  REQUIRE(back.columns == t.columns);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(std::get<std::string>(back.rows[i][0]) == std::get<std::string>(t.rows[i][0]));
    CHECK(cell(back, i, "x") == xs[i]);
    CHECK(cell(back, i, "k") == static_cast<double>(i));
  }

  // a computed curve survives the trip bit for bit
  const Run r = run({"estim", "hodges", "--theta1", "0:0.5:6", "--n", "1000"});
  REQUIRE(r.code == 0);
  const cli::Table curve = parse(r.out);
  const RiskCurve direct = hodges_risk({0.0, 0.1, 0.2, 0.3, 0.4, 0.5}, 1000);
  REQUIRE(curve.rows.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(cell(curve, i, "risk") == direct.risk[i]);
}

TEST_CASE("output files") {
  TempDir tmp;
  REQUIRE(setenv("QASYM_OUTPUT_DIR", tmp.path.c_str(), 1) == 0);
  const std::vector<std::string> js{"estim", "james-stein", "--h", "0,0,0;1,2,2", "--samples", "100000", "--seed", "7"};
  auto with = [](std::vector<std::string> a, std::initializer_list<std::string> extra) {
    a.insert(a.end(), extra);
    return a;
  };
  REQUIRE(run(with(js, {"--out", "a.csv"})).code == 0);
  const std::string a = slurp(tmp.path / "a.csv");
  REQUIRE_FALSE(a.empty());
  REQUIRE(run(with(js, {"--out", "a.csv"})).code == 0);
  CHECK(a == slurp(tmp.path / "a.csv"));
  REQUIRE(run(with(js, {"--out", "c.csv", "--workers", "4"})).code == 0);
  unsetenv("QASYM_OUTPUT_DIR");
  // the worker count shows up only in the args line
  const std::string c = slurp(tmp.path / "c.csv");
  CHECK(a.substr(a.find("\nabscissa")) == c.substr(c.find("\nabscissa")));
  CHECK(a.find("# seed: 7\n") != std::string::npos);

  const cli::Table t = parse(a);
  const McEstimate e = james_stein_risk(RVector::Zero(3), 100000, 7);
  CHECK(cell(t, 0, "risk") == e.risk);
  CHECK(cell(t, 0, "stderr") == e.stderr_);
  CHECK(cell(t, 1, "abscissa") == doctest::Approx(3.0));

  // minimax over the written curve
  const Run mm = run({"estim", "minimax", "--curve", (tmp.path / "a.csv").string()});
  REQUIRE(mm.code == 0);
  CHECK(mm.out.find("value") != std::string::npos);
}

TEST_CASE("JSON output") {
  const Run r = run({"asym", "povm-demo", "--h", "0,1", "--n", "1000000", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["meta"]["command"] == "asym povm-demo");
  CHECK(j["meta"]["seed"].is_null());
  const auto cols = j["columns"].get<std::vector<std::string>>();
  REQUIRE(j["rows"].size() == 2);
  const auto pos = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), "finite_n_prob") - cols.begin());
  REQUIRE(pos < cols.size());
  CHECK(std::abs(j["rows"][1][pos].get<double>() - std::exp(-0.25)) < 1e-4);
}

TEST_CASE("model files") {
  const fs::path model = data_file("affine_qubit.json");
  REQUIRE(fs::exists(model));
  const Run r = run({"fisher", "--model", model.string(), "--theta", "0.05,0.1"});
  REQUIRE(r.code == 0);
  CMatrix rho0(2, 2), bx(2, 2), by(2, 2);
  rho0 << 0.6, cplx(0.1, -0.05), cplx(0.1, 0.05), 0.4;
  bx << 1, 0, 0, -1;
  by << 0, cplx(0, -1), cplx(0, 1), 0;
  RVector th(2);
  th << 0.05, 0.1;
  const RMatrix j = sld_fisher(make_affine(rho0, {bx, by}), th);
  const cli::Table t = parse(r.out);
  CHECK(quantity(t, "J[0,0]") == doctest::Approx(j(0, 0)).epsilon(1e-14));
  CHECK(quantity(t, "J[0,1]") == doctest::Approx(j(0, 1)).epsilon(1e-14));
  CHECK(quantity(t, "J[1,1]") == doctest::Approx(j(1, 1)).epsilon(1e-14));

  TempDir tmp;
  std::ofstream(tmp.path / "broken.json") << "{\"kind\": \"affine\", \"dim\": 2";
  CHECK(run({"fisher", "--model", (tmp.path / "broken.json").string()}).code == 1);
  std::ofstream(tmp.path / "shape.json") << R"({"kind": "builtin", "tag": "bloch_ball", "dim": 2, "param_dim": 2})";
  CHECK(run({"fisher", "--model", (tmp.path / "shape.json").string()}).code == 1);

  // dext build writes a Gaussian file that bound rep accepts
  const fs::path gauss = tmp.path / "gauss.json";
  REQUIRE(run({"dext", "build", "--model", model.string(), "--theta", "0.05,0.1", "--gaussian-out", gauss.string()}).code == 0);
  REQUIRE(fs::exists(gauss));
  const Run rep = run({"bound", "rep", "--input", gauss.string(), "--weight", "identity"});
  const Run hol = run({"bound", "holevo", "--model", model.string(), "--theta", "0.05,0.1", "--weight", "identity"});
  REQUIRE(rep.code == 0);
  REQUIRE(hol.code == 0);
  CHECK(quantity(parse(rep.out), "value") == doctest::Approx(quantity(parse(hol.out), "value")).epsilon(1e-8));
  // the fisher weight needs the model behind the Gaussian
  CHECK(run({"bound", "rep", "--input", gauss.string(), "--weight", "fisher"}).code == 1);
  // odd r: Im Sigma is singular, so purity is undefined but the splitting is not
  CHECK(run({"gauss", "purity", "--input", gauss.string()}).code == 1);
  CHECK(run({"gauss", "split", "--input", gauss.string()}).code == 0);
}
