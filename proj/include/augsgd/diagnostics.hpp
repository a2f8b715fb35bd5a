#ifndef AUGSGD_DIAGNOSTICS_HPP
#define AUGSGD_DIAGNOSTICS_HPP

#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "augsgd/error.hpp"

namespace augsgd {

inline constexpr double missing = std::numeric_limits<double>::quiet_NaN();

/// One optimizer step, recorded before the update x_k -> x_{k+1}.
/// Fields that are not estimated at step k hold NaN.
struct StepRecord {
  std::size_t k = 0;
  double a_k = missing;
  double x_norm = missing;
  double margin = missing;          ///< R1^2 - (|x_k|^2 + sum_{j>=k} a_j^2)
  double f_inst = missing;          ///< f(x_k, y_k)
  double grad_inst_norm = missing;  ///< |grad_x f(x_k, y_k)|
  double F_est = missing;
  double F_se = missing;            ///< standard error; 0 when exact
  double gradF_norm_est = missing;
  double S_k = missing;             ///< sum_{j<=k} a_j |grad F(x_j)|^2
  double z_k = missing;             ///< sum_{j<=k} a_j u_j

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct Diagnostics {
  std::vector<StepRecord> steps;
  double final_x_norm = missing;
  double final_margin = missing;
  bool diverged = false;  ///< non-finite iterate observed (classical runs only)
  std::string note;
};

inline constexpr std::array<std::string_view, 11> csv_columns = {
    "k", "a_k", "x_norm", "margin", "f_inst", "grad_inst_norm", "F_est", "F_se", "gradF_norm_est", "S_k", "z_k"};

namespace detail {

inline void put_number(std::ostream& out, double v) {
  if (std::isnan(v)) return;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

inline double parse_field(std::string_view field, std::size_t line) {
  if (field.empty()) return missing;
  std::string s(field);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    fail(ErrorCode::MalformedCsv, "line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace detail

/// Writes the diagnostics table; numbers use %.17g so a re-read is exact,
/// missing values are empty fields.
inline void write_csv(std::ostream& out, const Diagnostics& diag) {
  for (std::size_t i = 0; i < csv_columns.size(); ++i) out << (i ? "," : "") << csv_columns[i];
  out << '\n';
  for (const StepRecord& r : diag.steps) {
    out << r.k;
    for (double v : {r.a_k, r.x_norm, r.margin, r.f_inst, r.grad_inst_norm, r.F_est, r.F_se, r.gradF_norm_est, r.S_k,
                     r.z_k}) {
      out << ',';
      detail::put_number(out, v);
    }
    out << '\n';
  }
}

inline std::vector<StepRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::MalformedCsv, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::string expected;
    for (std::size_t i = 0; i < csv_columns.size(); ++i) expected += std::string(i ? "," : "") + std::string(csv_columns[i]);
    if (line != expected) fail(ErrorCode::MalformedCsv, "unexpected header '" + line + "'");
  }
  std::vector<StepRecord> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != csv_columns.size())
      fail(ErrorCode::MalformedCsv, "line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(csv_columns.size()) + " fields");
    const double k = detail::parse_field(fields[0], lineno);
    if (!(k >= 0.0) || k != std::floor(k)) fail(ErrorCode::MalformedCsv, "line " + std::to_string(lineno) + ": bad k");
    StepRecord r;
    r.k = static_cast<std::size_t>(k);
    double* slots[] = {&r.a_k, &r.x_norm, &r.margin, &r.f_inst, &r.grad_inst_norm, &r.F_est, &r.F_se,
                       &r.gradF_norm_est, &r.S_k, &r.z_k};
    for (std::size_t i = 0; i < 10; ++i) *slots[i] = detail::parse_field(fields[i + 1], lineno);
    rows.push_back(r);
  }
  return rows;
}

inline std::string to_csv(const Diagnostics& diag) {
  std::ostringstream out;
  write_csv(out, diag);
  return out.str();
}

}  // namespace augsgd

#endif  // AUGSGD_DIAGNOSTICS_HPP
