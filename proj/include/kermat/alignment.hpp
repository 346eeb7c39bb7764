#pragma once

// Kernel alignment  A(K, K') = <K,K'> / sqrt(<K,K> <K',K'>)  via kernel sums.
//
// Gaussian kernels of a common bandwidth are closed under entrywise product:
// concatenating paired points multiplies their kernels,
//   exp(-|x-y|^2/s^2) * exp(-|x'-y'|^2/s^2) = exp(-|(x,x')-(y,y')|^2/s^2),
// so each Frobenius inner product is the plain matrix sum of a lifted point
// set and the alignment needs only three sum estimates.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "kermat/core.hpp"
#include "kermat/oracle.hpp"
#include "kermat/rng.hpp"
#include "kermat/sum.hpp"

namespace kermat {

// point i of the result is the concatenation (x_i, x'_i)
inline PointSet product_lift(const PointSet& x, const PointSet& xp) {
  if (x.n() != xp.n()) throw std::invalid_argument("product_lift: point counts differ");
  const std::size_t n = x.n(), d = x.d(), dp = xp.d();
  std::vector<double> coords(n * (d + dp));
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = x.row(i);
    const auto b = xp.row(i);
    double* out = coords.data() + i * (d + dp);
    std::copy(a.begin(), a.end(), out);
    std::copy(b.begin(), b.end(), out + d);
  }
  return PointSet(n, d + dp, std::move(coords));
}

namespace detail {

inline void require_gaussian(const KernelSpec& spec, const char* who) {
  if (spec.family != KernelFamily::gaussian)
    throw std::invalid_argument(std::string(who) + ": only the gaussian family is closed under product");
}

}  // namespace detail

// Exact alignment by three brute-force sums over lifted point sets.
inline double alignment_exact(const PointSet& x, const PointSet& xp, const KernelSpec& spec,
                              EvalCounter& counter) {
  detail::require_gaussian(spec, "alignment_exact");
  spec.validate();
  const double cross = exact_sum(product_lift(x, xp), spec, counter);
  const double self_x = exact_sum(product_lift(x, x), spec, counter);
  const double self_xp = exact_sum(product_lift(xp, xp), spec, counter);
  return cross / std::sqrt(self_x * self_xp);
}

// Estimated alignment: each of the three sums gets (eps/4, delta/3) so the
// ratio lands within (1 +- eps) with probability >= 1 - delta.
inline double kernel_alignment(const PointSet& x, const PointSet& xp, const KernelSpec& spec,
                               double eps, double delta, const SamplerConfig& cfg,
                               std::uint64_t seed, EvalCounter& counter) {
  detail::require_gaussian(spec, "kernel_alignment");
  if (!(eps > 0.0) || !(eps < 1.0))
    throw std::invalid_argument("kernel_alignment: eps must be in (0,1)");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("kernel_alignment: delta must be in (0,1)");
  const double sub_eps = eps / 4.0;
  const double sub_delta = delta / 3.0;
  const double cross =
      estimate_sum(product_lift(x, xp), spec, sub_eps, sub_delta, cfg, derive_seed(seed, 0), counter)
          .value;
  const double self_x =
      estimate_sum(product_lift(x, x), spec, sub_eps, sub_delta, cfg, derive_seed(seed, 1), counter)
          .value;
  const double self_xp =
      estimate_sum(product_lift(xp, xp), spec, sub_eps, sub_delta, cfg, derive_seed(seed, 2), counter)
          .value;
  return cross / std::sqrt(self_x * self_xp);
}

}  // namespace kermat
