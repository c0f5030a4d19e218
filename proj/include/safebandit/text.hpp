#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "safebandit/errors.hpp"
#include "safebandit/geometry.hpp"

namespace safebandit {

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(const std::string& s, double& out) {
  if (s == "nan") {
    out = std::nan("");
    return true;
  }
  if (s == "inf" || s == "-inf") {
    out = s[0] == '-' ? -INFINITY : INFINITY;
    return true;
  }
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  return out;
}

/// Writes "p m" followed by one row per halfspace: a_j then b_j.
inline void write_polytope(std::ostream& out, const geometry::Polytope& poly) {
  out << poly.rows() << ' ' << poly.dim() << '\n';
  for (Eigen::Index j = 0; j < poly.rows(); ++j) {
    for (Eigen::Index k = 0; k < poly.dim(); ++k) out << format_double(poly.A()(j, k)) << ' ';
    out << format_double(poly.b()(j)) << '\n';
  }
}

inline geometry::Polytope read_polytope(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_content_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };
  auto tokens = [&]() {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  };

  if (!next_content_line()) throw ParseError(line_no, "missing header line \"p m\"");
  const auto header = tokens();
  long p = 0, m = 0;
  if (header.size() != 2) throw ParseError(line_no, "header must contain exactly two integers \"p m\"");
  try {
    std::size_t used = 0;
    p = std::stol(header[0], &used);
    if (used != header[0].size()) throw std::invalid_argument("p");
    m = std::stol(header[1], &used);
    if (used != header[1].size()) throw std::invalid_argument("m");
  } catch (const std::exception&) {
    throw ParseError(line_no, "header must contain two integers, got \"" + line + "\"");
  }
  if (p < 1 || m < 1) throw ParseError(line_no, "row and column counts must be positive");

  Eigen::MatrixXd A(p, m);
  Eigen::VectorXd b(p);
  for (long j = 0; j < p; ++j) {
    if (!next_content_line()) throw ParseError(line_no, "expected " + std::to_string(p) + " rows, found " + std::to_string(j));
    const auto fields = tokens();
    if (static_cast<long>(fields.size()) != m + 1)
      throw ParseError(line_no, "expected " + std::to_string(m + 1) + " numbers, found " + std::to_string(fields.size()));
    for (long k = 0; k <= m; ++k) {
      double v = 0.0;
      if (!parse_double(fields[static_cast<std::size_t>(k)], v) || !std::isfinite(v))
        throw ParseError(line_no, "bad number \"" + fields[static_cast<std::size_t>(k)] + "\"");
      if (k < m)
        A(j, k) = v;
      else
        b(j) = v;
    }
    if (A.row(j).norm() == 0.0) throw ParseError(line_no, "halfspace normal is zero");
  }
  if (next_content_line()) throw ParseError(line_no, "trailing content after " + std::to_string(p) + " rows");
  return geometry::Polytope(std::move(A), std::move(b));
}

}  // namespace safebandit
