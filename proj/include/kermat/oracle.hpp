#pragma once

// Exact brute-force reference routines.  These are the ground truth every
// estimator is measured against; they never materialize the kernel matrix and
// they account every evaluation to the caller's counter.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "kermat/core.hpp"

namespace kermat {

// Full matrix sum via the symmetric half loop plus the diagonal evaluated
// explicitly: exactly n(n-1)/2 + n evaluations.
inline double exact_sum(const PointSet& pts, const KernelSpec& spec, EvalCounter& counter) {
  const std::size_t n = pts.n();
  double off = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const auto xi = pts.row(i);
    for (std::size_t j = 0; j < i; ++j) off += kernel_eval(spec, xi, pts.row(j), counter);
  }
  double diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag += kernel_eval(spec, pts.row(i), pts.row(i), counter);
  return 2.0 * off + diag;
}

// y = K x with the full n^2 evaluation sweep.
inline std::vector<double> exact_mvm(const PointSet& pts, const KernelSpec& spec,
                                     std::span<const double> x, EvalCounter& counter) {
  const std::size_t n = pts.n();
  if (x.size() != n) throw std::invalid_argument("exact_mvm: vector length != point count");
  std::vector<double> y(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const auto xj = pts.row(j);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += kernel_eval(spec, xj, pts.row(i), counter) * x[i];
    y[j] = acc;
  }
  return y;
}

struct TopEig {
  double lambda = 0.0;
  std::vector<double> vec;  // unit, entrywise >= 0
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

// Power iteration on the exact matrix from the uniform nonnegative start.
// Stops when successive Rayleigh quotients differ by less than tol * lambda;
// hitting max_iters is reported through TopEig::converged, never silently.
inline TopEig exact_top_eig(const PointSet& pts, const KernelSpec& spec, EvalCounter& counter,
                            double tol = 1e-9, std::size_t max_iters = 10000) {
  const std::size_t n = pts.n();
  if (!(tol > 0.0)) throw std::invalid_argument("exact_top_eig: tol must be positive");
  TopEig out;
  std::vector<double> z(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double prev = -1.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    std::vector<double> y = exact_mvm(pts, spec, z, counter);
    const double rayleigh = detail::dot(z, y);  // z is unit, so this is z^T K z
    out.lambda = rayleigh;
    out.vec = z;
    out.iterations = it + 1;
    if (it > 0 && std::fabs(rayleigh - prev) < tol * rayleigh) {
      out.converged = true;
      return out;
    }
    prev = rayleigh;
    const double nrm = detail::norm2(y);
    // diag(K) = 1 and z >= 0 keep y nonzero on any valid instance
    if (nrm == 0.0) throw std::runtime_error("exact_top_eig: zero iterate");
    for (std::size_t i = 0; i < n; ++i) z[i] = y[i] / nrm;
  }
  return out;  // converged stays false
}

}  // namespace kermat
