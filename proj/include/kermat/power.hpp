#pragma once

// Power iterations for the top eigenpair of a kernel matrix.
//
//   knpm                — noisy power method over the non-negative
//                         approximate MVM; each iteration multiplies with
//                         relative error eps^2/12 and the best Rayleigh proxy
//                         z_k' y_k (taken before normalization) selects the
//                         returned iterate.
//   full_power          — classic power iteration, one exact n^2 multiply per
//                         iteration, nothing cached across iterations.
//   uniform_noisy_power — power iteration whose multiply is estimated per
//                         output row from a fresh uniform sample of columns,
//                         with the sampling rate growing geometrically.
//
// All methods start from the uniform unit vector; with a kernel matrix
// (non-negative entries) every iterate stays entrywise non-negative.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "kermat/core.hpp"
#include "kermat/mvm.hpp"
#include "kermat/oracle.hpp"
#include "kermat/rng.hpp"

namespace kermat {

struct EigResult {
  std::vector<double> z;       // best iterate, unit norm, entrywise >= 0
  double rayleigh = 0.0;       // best proxy z_k' y_k observed
  std::size_t iterations = 0;
  std::vector<std::uint64_t> evals_per_iter;  // cumulative within the call
  std::vector<double> rel_err_per_iter;       // filled by callers with ground truth
};

// called once per iteration with the unit input iterate and the raw multiply
using PowerObserver =
    std::function<void(std::size_t iter, std::span<const double> z, std::span<const double> y)>;

// geometric sampling-rate schedule: rate_k = min(1, rate0 * growth^k)
struct PowerSchedule {
  double rate0 = 0.0;  // 0 disables budget mode
  double growth = 1.1;

  double rate_at(std::size_t k) const {
    return std::min(1.0, rate0 * std::pow(growth, static_cast<double>(k)));
  }
};

struct KnpmOptions {
  double c_iter = 4.0;         // iteration count ceil(c_iter * ln(n/eps) / eps)
  std::size_t iterations = 0;  // explicit override when > 0
  PowerSchedule schedule{};    // budget-mode MVM rates (experiments only)
};

inline std::size_t knpm_iteration_count(std::size_t n, double eps, double c_iter = 4.0) {
  return static_cast<std::size_t>(
      std::ceil(c_iter * std::log(static_cast<double>(n) / eps) / eps));
}

namespace detail {

inline std::vector<double> uniform_unit_vector(std::size_t n) {
  return std::vector<double>(n, 1.0 / std::sqrt(static_cast<double>(n)));
}

}  // namespace detail

inline EigResult knpm(const PointSet& pts, const KernelSpec& spec, double eps,
                      const MvmConfig& mvm_base, const KnpmOptions& opts, std::uint64_t seed,
                      EvalCounter& counter, const PowerObserver& observer = {}) {
  if (!(eps > 0.0) || !(eps < 1.0)) throw std::invalid_argument("knpm: eps must be in (0,1)");
  const std::size_t n = pts.n();
  const std::size_t iters =
      opts.iterations > 0 ? opts.iterations : knpm_iteration_count(n, eps, opts.c_iter);

  MvmConfig mvm_cfg = mvm_base;
  mvm_cfg.eps = eps * eps / 12.0;

  EigResult out;
  out.iterations = iters;
  out.evals_per_iter.reserve(iters);
  std::vector<double> z = detail::uniform_unit_vector(n);
  out.z = z;
  out.rayleigh = -std::numeric_limits<double>::infinity();
  const std::uint64_t evals0 = counter.count();

  for (std::size_t k = 0; k < iters; ++k) {
    if (opts.schedule.rate0 > 0.0) mvm_cfg.budget_rate = opts.schedule.rate_at(k);
    const std::vector<double> y =
        nonneg_approx_mvm(pts, spec, z, mvm_cfg, derive_seed(seed, k), counter);
    if (observer) observer(k, z, y);
    const double proxy = detail::dot(z, y);
    if (proxy > out.rayleigh) {
      out.rayleigh = proxy;
      out.z = z;
    }
    const double ny = detail::norm2(y);
    if (ny > 0.0)
      for (std::size_t j = 0; j < n; ++j) z[j] = y[j] / ny;
    out.evals_per_iter.push_back(counter.count() - evals0);
  }
  return out;
}

inline EigResult full_power(const PointSet& pts, const KernelSpec& spec, std::size_t iterations,
                            EvalCounter& counter, const PowerObserver& observer = {}) {
  if (iterations < 1) throw std::invalid_argument("full_power: iterations must be >= 1");
  const std::size_t n = pts.n();
  EigResult out;
  out.iterations = iterations;
  out.evals_per_iter.reserve(iterations);
  std::vector<double> z = detail::uniform_unit_vector(n);
  out.z = z;
  out.rayleigh = -std::numeric_limits<double>::infinity();
  const std::uint64_t evals0 = counter.count();

  for (std::size_t k = 0; k < iterations; ++k) {
    const std::vector<double> y = exact_mvm(pts, spec, z, counter);
    if (observer) observer(k, z, y);
    const double proxy = detail::dot(z, y);  // exact Rayleigh quotient of z
    if (proxy > out.rayleigh) {
      out.rayleigh = proxy;
      out.z = z;
    }
    const double ny = detail::norm2(y);
    if (ny > 0.0)
      for (std::size_t j = 0; j < n; ++j) z[j] = y[j] / ny;
    out.evals_per_iter.push_back(counter.count() - evals0);
  }
  return out;
}

inline EigResult uniform_noisy_power(const PointSet& pts, const KernelSpec& spec,
                                     std::size_t iterations, double rate0, double growth,
                                     std::uint64_t seed, EvalCounter& counter,
                                     const PowerObserver& observer = {}) {
  if (iterations < 1) throw std::invalid_argument("uniform_noisy_power: iterations must be >= 1");
  if (!(rate0 > 0.0) || rate0 > 1.0)
    throw std::invalid_argument("uniform_noisy_power: rate0 must be in (0,1]");
  if (!(growth >= 1.0)) throw std::invalid_argument("uniform_noisy_power: growth must be >= 1");
  const std::size_t n = pts.n();
  const PowerSchedule schedule{rate0, growth};

  EigResult out;
  out.iterations = iterations;
  out.evals_per_iter.reserve(iterations);
  std::vector<double> z = detail::uniform_unit_vector(n);
  out.z = z;
  out.rayleigh = -std::numeric_limits<double>::infinity();
  const std::uint64_t evals0 = counter.count();
  Rng rng = seeded_rng(seed);

  for (std::size_t k = 0; k < iterations; ++k) {
    const double rate = schedule.rate_at(k);
    const std::size_t s = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(rate * static_cast<double>(n))), 1, n);
    std::vector<double> y(n, 0.0);
    const double scale = static_cast<double>(n) / static_cast<double>(s);
    std::vector<std::uint32_t> cols;
    for (std::size_t j = 0; j < n; ++j) {
      if (s == n) {
        cols = detail::iota_indices(n);
      } else {
        cols = sample_without_replacement(n, s, rng);  // fresh per output row
      }
      double acc = 0.0;
      const auto qrow = pts.row(j);
      for (std::uint32_t l : cols) acc += kernel_eval(spec, qrow, pts.row(l), counter) * z[l];
      y[j] = scale * acc;
    }
    if (observer) observer(k, z, y);
    const double proxy = detail::dot(z, y);
    if (proxy > out.rayleigh) {
      out.rayleigh = proxy;
      out.z = z;
    }
    const double ny = detail::norm2(y);
    if (ny > 0.0)
      for (std::size_t j = 0; j < n; ++j) z[j] = y[j] / ny;
    out.evals_per_iter.push_back(counter.count() - evals0);
  }
  return out;
}

}  // namespace kermat
