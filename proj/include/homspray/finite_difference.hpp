#pragma once

// Central finite differences with one level of Richardson extrapolation.
//
// Every derivative in the library goes through this header so that error
// budgets are uniform: a k-th order mixed partial uses the 2^k-point sign
// stencil at step h and h/2, combined as (4 D(h/2) - D(h)) / 3, which removes
// the O(h^2) term. The base step for a k-th derivative is eps^(1/(k+2)) times
// a caller-supplied scale; for k = 1 that is cbrt(eps).

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <type_traits>

namespace homspray::fd {

/// Base step for a derivative of the given order, scaled by `scale`.
inline double step(int order, double scale = 1.0) {
  const double eps = std::numeric_limits<double>::epsilon();
  return std::pow(eps, 1.0 / (order + 2)) * scale;
}

/// f'(0) for a scalar- or vector-valued f(s).
template <class F>
auto derivative(F&& f, double h) {
  auto level = [&](double s) { return ((f(s) - f(-s)) / (2.0 * s)).eval(); };
  auto coarse = level(h);
  auto fine = level(0.5 * h);
  return ((4.0 * fine - coarse) / 3.0).eval();
}

/// Scalar overload; Eigen expressions need .eval(), doubles do not.
template <class F>
  requires std::is_same_v<std::decay_t<std::invoke_result_t<F, double>>, double>
double derivative(F&& f, double h) {
  auto level = [&](double s) { return (f(s) - f(-s)) / (2.0 * s); };
  return (4.0 * level(0.5 * h) - level(h)) / 3.0;
}

namespace detail {

template <std::size_t K, class F>
auto sign_stencil(F& f, double h) {
  std::array<double, K> s{};
  using T = std::decay_t<decltype(f(s))>;
  T acc{};
  bool first = true;
  for (unsigned mask = 0; mask < (1u << K); ++mask) {
    double sign = 1.0;
    for (std::size_t i = 0; i < K; ++i) {
      const bool neg = (mask >> i) & 1u;
      s[i] = neg ? -h : h;
      if (neg) sign = -sign;
    }
    if (first) {
      acc = sign * f(s);
      first = false;
    } else {
      acc = acc + sign * f(s);
    }
  }
  return T(acc / std::pow(2.0 * h, static_cast<double>(K)));
}

}  // namespace detail

/// Mixed partial d^K/ds_1..ds_K f(s) at s = 0, where f takes std::array<double, K>.
template <std::size_t K, class F>
auto mixed_partial(F&& f, double h) {
  auto coarse = detail::sign_stencil<K>(f, h);
  auto fine = detail::sign_stencil<K>(f, 0.5 * h);
  using T = decltype(coarse);
  return T((4.0 * fine - coarse) / 3.0);
}

}  // namespace homspray::fd
