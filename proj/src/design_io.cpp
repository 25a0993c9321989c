#include "robustfill/design_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace robustfill {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& field, int line, const std::string& col) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw ParseError("invalid number '" + field + "'", line, col);
  if (!std::isfinite(v))
    throw ParseError("non-finite value '" + field + "'", line, col);
  return v;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string role_token(FactorRole r) {
  switch (r) {
    case FactorRole::Control: return "control";
    case FactorRole::NoiseExternal: return "noise_ext";
    case FactorRole::NoiseInternal: return "noise_int";
  }
  return "control";
}

std::string transform_token(const FactorSpec& f) {
  switch (f.transform) {
    case TransformTag::None: return "none";
    case TransformTag::Transformed: return "tr";
    case TransformTag::DoubleTransformed: return "dt:" + format_number(f.alpha);
    case TransformTag::Hybrid: return "hybrid";
  }
  return "none";
}

}  // namespace

ParseError::ParseError(std::string message, int line, std::string column)
    : std::runtime_error("line " + std::to_string(line) +
                         (column.empty() ? "" : ", column " + column) + ": " +
                         message),
      line_(line),
      column_(std::move(column)) {}

Design read_design(std::istream& in) {
  std::string line;
  int lineno = 0;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line))
      throw ParseError(std::string("missing ") + what + " line", lineno + 1);
    ++lineno;
    return split_csv(line);
  };

  const std::vector<std::string> names = next_line("header");
  if (names.empty() || names[0] != "name")
    throw ParseError("header line must start with 'name'", 1);
  const std::size_t ncols = names.size() - 1;
  if (ncols == 0) throw ParseError("no factor columns", 1);

  const std::vector<std::string> roles = next_line("role");
  if (roles.empty() || roles[0] != "role")
    throw ParseError("second line must start with 'role'", 2);
  if (roles.size() != names.size())
    throw ParseError("role count does not match factor count", 2);

  const std::vector<std::string> transforms = next_line("transform");
  if (transforms.empty() || transforms[0] != "transform")
    throw ParseError("third line must start with 'transform'", 3);
  if (transforms.size() != names.size())
    throw ParseError("transform count does not match factor count", 3);

  std::vector<FactorSpec> factors(ncols);
  for (std::size_t j = 0; j < ncols; ++j) {
    FactorSpec& f = factors[j];
    f.name = names[j + 1];
    const std::string& r = roles[j + 1];
    if (r == "control")
      f.role = FactorRole::Control;
    else if (r == "noise_ext")
      f.role = FactorRole::NoiseExternal;
    else if (r == "noise_int")
      f.role = FactorRole::NoiseInternal;
    else
      throw ParseError("unknown role '" + r + "'", 2, f.name);
    const std::string& t = transforms[j + 1];
    if (t == "none") {
      f.transform = TransformTag::None;
    } else if (t == "tr") {
      f.transform = TransformTag::Transformed;
    } else if (t == "hybrid") {
      f.transform = TransformTag::Hybrid;
    } else if (t.rfind("dt:", 0) == 0) {
      f.transform = TransformTag::DoubleTransformed;
      f.alpha = parse_number(t.substr(3), 3, f.name);
    } else {
      throw ParseError("unknown transform '" + t + "'", 3, f.name);
    }
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != ncols)
      throw ParseError("expected " + std::to_string(ncols) + " fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    std::vector<double> row(ncols);
    for (std::size_t j = 0; j < ncols; ++j)
      row[j] = parse_number(fields[j], lineno, factors[j].name);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows", lineno + 1);

  Eigen::MatrixXd runs(rows.size(), ncols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < ncols; ++j) runs(i, j) = rows[i][j];
  Design design(std::move(runs), std::move(factors));
  design.validate();
  return design;
}

Design read_design(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_design: cannot open " + path);
  return read_design(in);
}

void write_design(const Design& design, std::ostream& out) {
  out << "name";
  for (int j = 0; j < design.n_factors(); ++j) out << ',' << design.factor(j).name;
  out << '\n';
  out << "role";
  for (int j = 0; j < design.n_factors(); ++j)
    out << ',' << role_token(design.factor(j).role);
  out << '\n';
  out << "transform";
  for (int j = 0; j < design.n_factors(); ++j)
    out << ',' << transform_token(design.factor(j));
  out << '\n';
  for (int i = 0; i < design.n_runs(); ++i) {
    for (int j = 0; j < design.n_factors(); ++j) {
      if (j) out << ',';
      out << format_number(design.runs()(i, j));
    }
    out << '\n';
  }
}

void write_design(const Design& design, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_design: cannot open " + path);
  write_design(design, out);
}

}  // namespace robustfill
