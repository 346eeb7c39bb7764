#pragma once

// Point sets, kernel specifications, and the evaluation counter that backs
// every cost measurement in the library.  All estimators count work in kernel
// evaluations, and every kernel value anywhere in the library is produced by
// kernel_eval below, so the counters are the ground truth for cost claims.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kermat {

// Thread-safe tally of kernel evaluations.  Incremented exactly once per
// completed kernel_eval call; bulk helpers funnel through kernel_eval, so no
// evaluation bypasses the count.
class EvalCounter {
 public:
  EvalCounter() = default;
  EvalCounter(const EvalCounter&) = delete;
  EvalCounter& operator=(const EvalCounter&) = delete;

  void add(std::uint64_t k) { n_.fetch_add(k, std::memory_order_relaxed); }
  std::uint64_t count() const { return n_.load(std::memory_order_relaxed); }
  void reset() { n_.store(0, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> n_{0};
};

enum class KernelFamily { gaussian, exponential, laplacian, rational_quadratic };

inline const char* family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::exponential: return "exponential";
    case KernelFamily::laplacian: return "laplacian";
    case KernelFamily::rational_quadratic: return "rational_quadratic";
  }
  return "?";
}

inline KernelFamily family_from_name(std::string_view s) {
  if (s == "gaussian") return KernelFamily::gaussian;
  if (s == "exponential") return KernelFamily::exponential;
  if (s == "laplacian") return KernelFamily::laplacian;
  if (s == "rational_quadratic") return KernelFamily::rational_quadratic;
  throw std::invalid_argument("unknown kernel family: " + std::string(s));
}

// Kernel conventions (bandwidth sigma enters without a factor of 2):
//   gaussian            exp(-||x-y||_2^2 / sigma^2)
//   exponential         exp(-||x-y||_2   / sigma)
//   laplacian           exp(-||x-y||_1   / sigma)
//   rational_quadratic  (1 + ||x-y||_2^2 / sigma^2)^(-beta)
// All four are positive semidefinite with values in [0,1] and k(x,x) = 1.
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 1.0;
  double beta = 1.0;  // rational_quadratic exponent; ignored otherwise

  void validate() const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      throw std::invalid_argument("KernelSpec: bandwidth must be positive and finite");
    if (family == KernelFamily::rational_quadratic && (!(beta > 0.0) || !std::isfinite(beta)))
      throw std::invalid_argument("KernelSpec: beta must be positive and finite");
  }
};

// Row-major n x d point set.  Coordinates are validated finite on
// construction so the hot evaluation path can stay branch-light.
class PointSet {
 public:
  PointSet(std::size_t n, std::size_t d) : n_(n), d_(d), coords_(n * d, 0.0) {
    if (n == 0 || d == 0) throw std::invalid_argument("PointSet: n and d must be >= 1");
  }

  PointSet(std::size_t n, std::size_t d, std::vector<double> coords)
      : n_(n), d_(d), coords_(std::move(coords)) {
    if (n == 0 || d == 0 || coords_.size() != n_ * d_)
      throw std::invalid_argument("PointSet: coordinate buffer does not form an n x d matrix");
    for (double v : coords_)
      if (!std::isfinite(v)) throw std::invalid_argument("PointSet: non-finite coordinate");
  }

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(coords_.data() + i * d_, d_);
  }
  std::span<double> row_mut(std::size_t i) {
    return std::span<double>(coords_.data() + i * d_, d_);
  }
  const std::vector<double>& coords() const { return coords_; }

  // new point set holding rows idx[0], idx[1], ... in that order
  static PointSet gather(const PointSet& src, std::span<const std::uint32_t> idx) {
    if (idx.empty()) throw std::invalid_argument("PointSet::gather: empty selection");
    PointSet out(idx.size(), src.d_);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto r = src.row(idx[i]);
      std::copy(r.begin(), r.end(), out.row_mut(i).begin());
    }
    return out;
  }

 private:
  std::size_t n_, d_;
  std::vector<double> coords_;
};

namespace detail {

inline double sq_l2(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = x[k] - y[k];
    acc += t * t;
  }
  return acc;
}

inline double l1(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) acc += std::fabs(x[k] - y[k]);
  return acc;
}

}  // namespace detail

// One kernel evaluation; the unit of cost for the whole library.
inline double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                          std::span<const double> y, EvalCounter& counter) {
  if (x.size() != y.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  double value;
  switch (spec.family) {
    case KernelFamily::gaussian: {
      const double s = detail::sq_l2(x, y);
      if (!std::isfinite(s)) throw std::invalid_argument("kernel_eval: non-finite input");
      value = std::exp(-s / (spec.bandwidth * spec.bandwidth));
      break;
    }
    case KernelFamily::exponential: {
      const double s = detail::sq_l2(x, y);
      if (!std::isfinite(s)) throw std::invalid_argument("kernel_eval: non-finite input");
      value = std::exp(-std::sqrt(s) / spec.bandwidth);
      break;
    }
    case KernelFamily::laplacian: {
      const double s = detail::l1(x, y);
      if (!std::isfinite(s)) throw std::invalid_argument("kernel_eval: non-finite input");
      value = std::exp(-s / spec.bandwidth);
      break;
    }
    case KernelFamily::rational_quadratic: {
      const double s = detail::sq_l2(x, y);
      if (!std::isfinite(s)) throw std::invalid_argument("kernel_eval: non-finite input");
      value = std::pow(1.0 + s / (spec.bandwidth * spec.bandwidth), -spec.beta);
      break;
    }
    default:
      throw std::logic_error("kernel_eval: unknown family");
  }
  counter.add(1);
  return value;
}

}  // namespace kermat
