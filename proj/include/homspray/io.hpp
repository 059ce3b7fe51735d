#pragma once

// Deterministic text output: 17 significant digits through std::to_chars
// (locale-independent), JSON emitted from nlohmann::ordered_json trees with
// our own number formatting, and CSV/JSON forms of trajectories.

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "homspray/dynamics.hpp"
#include "homspray/lie_algebra.hpp"

namespace homspray::io {

using Json = nlohmann::ordered_json;

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // print -0 as 0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 16);
  return std::string(buf, res.ptr);
}

inline Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

/// Rows as nested arrays.
inline Json to_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vec(m.row(r).transpose())));
  return a;
}

namespace detail {

inline void dump(std::ostream& os, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(it.key()).dump() << ": ";
        dump(os, it.value(), indent, depth + 1);
      }
      os << "\n" << close << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      if (flat) {
        os << "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) os << ", ";
          dump(os, j[i], indent, depth + 1);
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        dump(os, j[i], indent, depth + 1);
      }
      os << "\n" << close << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      // JSON has no NaN/Inf.
      os << (std::isfinite(v) ? format_number(v) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

inline void write_json(std::ostream& os, const Json& j) {
  detail::dump(os, j, 2, 0);
  os << "\n";
}

inline std::string json_string(const Json& j) {
  std::ostringstream os;
  write_json(os, j);
  return os.str();
}

/// One CSV row of numbers.
inline void write_csv_row(std::ostream& os, const std::vector<double>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << ',';
    os << format_number(row[i]);
  }
  os << '\n';
}

inline void write_csv_header(std::ostream& os, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) os << ',';
    os << cols[i];
  }
  os << '\n';
}

/// Columns t, <prefix>1 .. <prefix>n.
inline void write_csv(std::ostream& os, const Trajectory& tr, const std::string& prefix = "y") {
  std::vector<std::string> cols{"t"};
  const Eigen::Index n = tr.states.empty() ? 0 : tr.states.front().size();
  for (Eigen::Index i = 0; i < n; ++i) cols.push_back(prefix + std::to_string(i + 1));
  write_csv_header(os, cols);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    std::vector<double> row{tr.times[k]};
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(tr.states[k][i]);
    write_csv_row(os, row);
  }
}

inline Json to_json(const Trajectory& tr) {
  Json j;
  j["meta"] = {{"integrator", tr.meta.integrator},
               {"dt", tr.meta.dt},
               {"accepted", tr.meta.accepted},
               {"rejected", tr.meta.rejected}};
  Json t = Json::array();
  for (double v : tr.times) t.push_back(v);
  j["times"] = t;
  Json s = Json::array();
  for (const Vec& v : tr.states) s.push_back(to_json(v));
  j["states"] = s;
  return j;
}

/// Matrices stored row-major as flat arrays.
inline Json to_json(const GroupTrajectory& gt) {
  Json j;
  j["size"] = gt.matrices.empty() ? 0 : gt.matrices.front().rows();
  j["orthogonality_drift"] = gt.orthogonality_drift;
  Json t = Json::array();
  for (double v : gt.times) t.push_back(v);
  j["times"] = t;
  Json ms = Json::array();
  for (const Mat& m : gt.matrices) {
    Json flat = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    ms.push_back(flat);
  }
  j["matrices"] = ms;
  return j;
}

}  // namespace homspray::io
