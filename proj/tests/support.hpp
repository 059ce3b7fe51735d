#pragma once

// Shared test oracles: matrix exponential (Eigen's MatrixFunctions module,
// scaling and squaring), seeded generators and small finite-difference
// helpers that do not go through the library's own scheme.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cstdint>
#include <functional>
#include <random>

#include "homspray/homogeneous_spray.hpp"
#include "homspray/lie_algebra.hpp"

namespace testing_support {

using homspray::Mat;
using homspray::Vec;

inline Mat expm(const Mat& X) { return X.exp(); }

/// exp(t ad_x) as a matrix acting on algebra coordinates.
inline Mat exp_ad(const homspray::LieAlgebra& g, const Vec& x, double t) { return expm(t * g.ad_matrix(x)); }

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double normal() { return nd_(rng_); }
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  Vec vec(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }
  Vec unit(int n) {
    Vec v = vec(n);
    while (v.norm() < 1e-3) v = vec(n);
    return v / v.norm();
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> nd_{0.0, 1.0};
};

/// Plain 5-point central difference, used as an oracle independent of fd::.
inline Vec diff5(const std::function<Vec(double)>& f, double h) {
  return (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h);
}

inline double diff5(const std::function<double(double)>& f, double h) {
  return (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h);
}

inline std::vector<std::string> finsler_presets() {
  std::vector<std::string> out;
  for (const auto& n : homspray::spray_preset_names())
    if (homspray::spray_preset(n).spray.is_finsler()) out.push_back(n);
  return out;
}

}  // namespace testing_support
