#pragma once

// Non-negative approximate kernel matrix-vector multiplication: for
// entrywise non-negative x, return y = Kx + e where e is entrywise
// non-negative (up to the configured failure probability of the randomized
// density backend) and ||e||_2 <= eps * ||Kx||_2.
//
// Procedure, at internal accuracy eps_int (a fixed fraction of the requested
// eps so the stacked error terms stay inside the contract):
//   1. scale x to unit norm;
//   2. round entries into geometric buckets [q^i, q^(i-1)], q = 1 - eps_int/2,
//      each rounded UP to its bucket's upper endpoint (ties at q^i go to the
//      larger-value bucket);
//   3. per non-empty bucket, estimate the mean kernel density of the bucket's
//      points at every output coordinate (floor mu_i chosen so below-floor
//      mass costs at most eps_int/(b+1) per bucket), inflate by 1/(1-eps_int)
//      to force overestimation, and clamp each contribution up to the global
//      per-entry floor;
//   4. add the constant remainder vector covering all below-bucket entries;
//   5. unscale.
//
// A budget mode replaces the floor-driven sample sizes with an explicit
// per-call evaluation budget split across buckets in proportion to their
// rounded mass (stratified allocation); it is meant for cost-accuracy
// experiments, not for the formal contract.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "kermat/core.hpp"
#include "kermat/kde.hpp"
#include "kermat/rng.hpp"

namespace kermat {

struct MvmConfig {
  double eps = 0.1;                       // relative error target on y - Kx
  KdeBackend backend = KdeBackend::exact;
  double delta = 0.01;                    // joint failure budget over all queries
  double c1 = 4.0;                        // bucket-count constant
  double uniform_c = 4.0;
  double budget_rate = 0.0;               // > 0 switches on budget mode
  double internal_eps_fraction = 0.125;   // eps_int = eps * this
  double budget_bucket_eps = 0.5;         // coarse bucketing used in budget mode

  void validate() const {
    if (!(eps > 0.0) || !(eps < 1.0)) throw std::invalid_argument("MvmConfig: eps must be in (0,1)");
    if (!(delta > 0.0) || !(delta < 1.0))
      throw std::invalid_argument("MvmConfig: delta must be in (0,1)");
    if (!(c1 > 0.0)) throw std::invalid_argument("MvmConfig: c1 must be positive");
    if (budget_rate < 0.0) throw std::invalid_argument("MvmConfig: budget_rate must be >= 0");
    if (!(internal_eps_fraction > 0.0) || internal_eps_fraction > 1.0)
      throw std::invalid_argument("MvmConfig: internal_eps_fraction must be in (0,1]");
    if (!(budget_bucket_eps > 0.0) || !(budget_bucket_eps < 1.0))
      throw std::invalid_argument("MvmConfig: budget_bucket_eps must be in (0,1)");
  }
};

// Bucket count: at least ceil(c1 * ln(n/eps) / eps), grown further until
// q^b <= eps / ((b+1) n^1.5) so that every below-bucket entry of the rounded
// vector is covered by the constant remainder output.
inline std::size_t mvm_bucket_count(std::size_t n, double eps, double c1 = 4.0) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw std::invalid_argument("mvm_bucket_count: eps must be in (0,1)");
  const double nd = static_cast<double>(n);
  std::size_t b = static_cast<std::size_t>(std::ceil(c1 * std::log(nd / eps) / eps));
  b = std::max<std::size_t>(b, 1);
  const double log_q = std::log1p(-eps / 2.0);
  // q^b <= eps / ((b+1) n^1.5)  <=>  b * log q <= log(eps) - log(b+1) - 1.5 log n
  auto covered = [&](std::size_t bb) {
    return static_cast<double>(bb) * log_q <=
           std::log(eps) - std::log(static_cast<double>(bb) + 1.0) - 1.5 * std::log(nd);
  };
  while (!covered(b)) ++b;
  return b;
}

struct Bucketization {
  std::size_t b = 0;       // bucket count
  double q = 0.0;          // geometric ratio 1 - eps/2
  std::vector<std::vector<std::uint32_t>> buckets;  // indices per bucket, 1-based slot i-1
  std::vector<std::uint32_t> remainder;             // entries below every bucket

  double rounded_value(std::size_t i) const {  // upper endpoint of bucket i (1-based)
    return std::pow(q, static_cast<double>(i - 1));
  }
};

// Assign each entry of a unit-norm non-negative vector to its geometric
// bucket: i = ceil(ln v / ln q) with ties at q^i kept in bucket i.  Values
// within 1e-9 bucket-widths of a boundary count as ties so that exactly
// representable powers of q land deterministically despite log rounding;
// the resulting over-rounding is a relative 1e-9 of one bucket width.
inline Bucketization mvm_bucketize(std::span<const double> x, double eps, std::size_t b) {
  Bucketization out;
  out.b = b;
  out.q = 1.0 - eps / 2.0;
  out.buckets.assign(b, {});
  const double log_q = std::log1p(-eps / 2.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double v = x[j];
    if (!(v >= 0.0)) throw std::invalid_argument("mvm_bucketize: negative or NaN entry");
    if (v == 0.0) {
      out.remainder.push_back(static_cast<std::uint32_t>(j));
      continue;
    }
    double idx = v >= 1.0 ? 1.0 : std::ceil(std::log(v) / log_q - 1e-9);
    if (idx < 1.0) idx = 1.0;
    if (idx > static_cast<double>(b)) {
      out.remainder.push_back(static_cast<std::uint32_t>(j));
    } else {
      out.buckets[static_cast<std::size_t>(idx) - 1].push_back(static_cast<std::uint32_t>(j));
    }
  }
  return out;
}

struct MvmStats {
  std::size_t bucket_count = 0;
  std::size_t occupied_buckets = 0;
  std::uint64_t evals = 0;
};

namespace detail {

// Stratified evaluation budget: round(B * w_i / W) samples for bucket i,
// clamped to [1, bucket size], where w_i = |X_i| * rounded_value(i).
inline std::vector<std::size_t> budget_allocation(const Bucketization& bk, double total_budget) {
  std::vector<std::size_t> alloc(bk.b, 0);
  double total_weight = 0.0;
  for (std::size_t i = 1; i <= bk.b; ++i)
    total_weight += static_cast<double>(bk.buckets[i - 1].size()) * bk.rounded_value(i);
  if (total_weight <= 0.0) return alloc;
  for (std::size_t i = 1; i <= bk.b; ++i) {
    const std::size_t sz = bk.buckets[i - 1].size();
    if (sz == 0) continue;
    const double w = static_cast<double>(sz) * bk.rounded_value(i);
    const double want = std::round(total_budget * w / total_weight);
    alloc[i - 1] = std::clamp<std::size_t>(
        want <= 0.0 ? 0 : static_cast<std::size_t>(want), 1, sz);
  }
  return alloc;
}

}  // namespace detail

inline std::vector<double> nonneg_approx_mvm(const PointSet& pts, const KernelSpec& spec,
                                             std::span<const double> x, const MvmConfig& cfg,
                                             std::uint64_t seed, EvalCounter& counter,
                                             MvmStats* stats = nullptr) {
  cfg.validate();
  spec.validate();
  const std::size_t n = pts.n();
  if (x.size() != n) throw std::invalid_argument("nonneg_approx_mvm: size mismatch");
  double norm_sq = 0.0;
  for (double v : x) {
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("nonneg_approx_mvm: x must be finite and entrywise >= 0");
    norm_sq += v * v;
  }
  if (norm_sq == 0.0) throw std::invalid_argument("nonneg_approx_mvm: x must not be the zero vector");
  const double norm = std::sqrt(norm_sq);

  const bool budget_mode = cfg.budget_rate > 0.0;
  // budget mode stratifies with coarse buckets; the contract path derives its
  // internal accuracy from the requested eps so the stacked terms fit inside it
  const double eps = budget_mode ? cfg.budget_bucket_eps : cfg.eps * cfg.internal_eps_fraction;
  const std::size_t b = mvm_bucket_count(n, eps, cfg.c1);
  std::vector<double> xu(n);
  for (std::size_t j = 0; j < n; ++j) xu[j] = x[j] / norm;
  const Bucketization bk = mvm_bucketize(xu, eps, b);

  const double floor_value = eps / ((static_cast<double>(b) + 1.0) * std::sqrt(static_cast<double>(n)));
  const std::uint64_t evals_before = counter.count();
  std::vector<double> y(n, 0.0);

  std::vector<std::size_t> alloc;
  if (budget_mode)
    alloc = detail::budget_allocation(bk, cfg.budget_rate * static_cast<double>(n));

  std::size_t occupied = 0;
  for (std::size_t i = 1; i <= b; ++i) {
    const auto& members = bk.buckets[i - 1];
    if (members.empty()) continue;
    ++occupied;
    const double c_i = bk.rounded_value(i);
    const double scale = static_cast<double>(members.size()) * c_i;

    if (budget_mode) {
      // fixed-size uniform subsample of the bucket, mean scaled by the
      // rounded bucket mass; no inflation (experiment mode)
      Rng rng = derive_rng(seed, i);
      const std::size_t s = alloc[i - 1];
      std::vector<std::uint32_t> sample;
      if (s >= members.size()) {
        sample = members;
      } else {
        const auto picks = sample_without_replacement(members.size(), s, rng);
        sample.reserve(s);
        for (std::uint32_t pidx : picks) sample.push_back(members[pidx]);
      }
      const double inv = 1.0 / static_cast<double>(sample.size());
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        const auto qrow = pts.row(j);
        for (std::uint32_t t : sample) acc += kernel_eval(spec, qrow, pts.row(t), counter);
        y[j] += std::max(scale * acc * inv, floor_value);
      }
    } else {
      KdeConfig kcfg{std::min(floor_value / scale, 1.0), eps,
                     cfg.delta / (3.0 * static_cast<double>(n) * static_cast<double>(b)),
                     cfg.uniform_c};
      const auto est = kde_build(cfg.backend, pts, spec, kcfg, members, derive_seed(seed, i));
      const double inflate = 1.0 / (1.0 - eps);
      for (std::size_t j = 0; j < n; ++j)
        y[j] += std::max(scale * est->query(pts.row(j), counter) * inflate, floor_value);
    }
  }

  for (std::size_t j = 0; j < n; ++j) y[j] = (y[j] + floor_value) * norm;

  if (stats) {
    stats->bucket_count = b;
    stats->occupied_buckets = occupied;
    stats->evals = counter.count() - evals_before;
  }
  return y;
}

}  // namespace kermat
