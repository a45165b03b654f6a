#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qasym::cli {

/// One output table: a header row and rows of numbers or strings.
struct Table {
  using Cell = std::variant<double, long long, std::string>;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Reproducibility header written in front of every table.
struct RunInfo {
  std::string command;
  std::vector<std::string> args;
  std::optional<unsigned long long> seed;
};

void write_csv(std::ostream& os, const Table& t, const RunInfo& info);
void write_json(std::ostream& os, const Table& t, const RunInfo& info);

/// Parse a CSV table written by write_csv (comment lines skipped).
Table read_csv(std::istream& is);

/// Entry point shared by the executable and the tests.
/// Returns 0 on success, 1 on validation or usage errors, 2 on convergence errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace qasym::cli
