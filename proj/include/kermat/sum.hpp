#pragma once

// Sublinear kernel-matrix sum estimation.  A Z draw samples each index into a
// principal submatrix A with probability p, estimates the off-diagonal sum of
// K_A, and rescales:
//
//   Z = n + s_o(K_A) / p^2,   E[Z] = s(K),   p defaults to 1/sqrt(n).
//
// Off-diagonal sums of a drawn submatrix come from the dyadic exclusion index.
// The fast path classifies rows by reported density against the threshold
// t / m^2, scans heavy rows exactly, and recovers the light mass from a
// uniform row sample; the simple path sums one exclusion query per row with
// floor mu = mu_c * eps / m^2.  estimate_sum averages ceil(c_z / eps^2) draws
// per batch and takes the median over ceil(c_m ln(1/delta)) batches.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "kermat/core.hpp"
#include "kermat/exclusion.hpp"
#include "kermat/kde.hpp"
#include "kermat/oracle.hpp"
#include "kermat/rng.hpp"

namespace kermat {

struct SamplerConfig {
  double sample_prob = 0.0;     // 0 selects the default 1/sqrt(n)
  double c_z = 8.0;             // Z draws per batch: ceil(c_z / eps^2)
  double c_m = 1.0;             // batches: max(1, ceil(c_m ln(1/delta)))
  double c_s = 4.0;             // light-row samples: ceil(c_s t^2 / eps^4)
  double mu_c = 1.0;            // floor constant for the simple estimator
  double heavy_threshold = 0.0; // 0 selects m^(2p/(2+p)) eps^(2/(2+p))
  KdeBackend backend = KdeBackend::exact;
  bool fast = true;             // heavy/light split instead of per-row sums
  double uniform_c = 4.0;

  void validate() const {
    if (sample_prob < 0.0 || sample_prob > 1.0)
      throw std::invalid_argument("SamplerConfig: sample_prob must be in [0,1]");
    if (!(c_z > 0.0) || !(c_m > 0.0) || !(c_s > 0.0) || !(mu_c > 0.0))
      throw std::invalid_argument("SamplerConfig: constants must be positive");
    if (heavy_threshold < 0.0)
      throw std::invalid_argument("SamplerConfig: heavy_threshold must be >= 0");
  }

  std::size_t draws_per_batch(double eps) const {
    return static_cast<std::size_t>(std::ceil(c_z / (eps * eps)));
  }
  std::size_t batches(double delta) const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(c_m * std::log(1.0 / delta))));
  }
};

inline double backend_cost_exponent(KdeBackend b) {
  return b == KdeBackend::uniform ? 1.0 : 0.0;
}

// default heavy-row threshold t = m^(2p/(2+p)) * eps^(2/(2+p))
inline double heavy_threshold_default(std::size_t m, double eps, double p) {
  return std::pow(static_cast<double>(m), 2.0 * p / (2.0 + p)) * std::pow(eps, 2.0 / (2.0 + p));
}

// indices kept by independent Bernoulli(prob) trials, ascending
inline std::vector<std::uint32_t> sample_submatrix(std::size_t n, double prob, Rng& rng) {
  if (!(prob >= 0.0) || !(prob <= 1.0))
    throw std::invalid_argument("sample_submatrix: prob must be in [0,1]");
  std::vector<std::uint32_t> out;
  if (prob == 1.0) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint32_t>(i);
    return out;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    if (u(rng) < prob) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

namespace detail {

inline double exact_row_off_diag(const PointSet& pts, const KernelSpec& spec, std::size_t i,
                                 EvalCounter& counter) {
  double acc = 0.0;
  const auto xi = pts.row(i);
  for (std::size_t j = 0; j < pts.n(); ++j)
    if (j != i) acc += kernel_eval(spec, xi, pts.row(j), counter);
  return acc;
}

}  // namespace detail

// One exclusion query per row, floor mu_c * eps / m^2, amplified to
// per-query success 1 - 1/m^2.
inline double off_diag_sum_simple(const PointSet& sub, const KernelSpec& spec, double eps,
                                  const SamplerConfig& cfg, std::uint64_t seed,
                                  EvalCounter& counter) {
  const std::size_t m = sub.n();
  if (m < 2) return 0.0;
  const double mm = static_cast<double>(m) * static_cast<double>(m);
  KdeConfig kcfg{cfg.mu_c * eps / mm, eps, 1.0 / mm, cfg.uniform_c};
  DyadicExclusionIndex index(cfg.backend, sub, spec, kcfg, derive_seed(seed, 0));
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) acc += index.query(i, counter);
  return acc;
}

// Heavy/light split: rows whose reported density reaches t/m^2 are scanned
// exactly; the light remainder is recovered from a uniform row sample of size
// ceil(c_s t^2 / eps^4) (full coverage when that exceeds the light count).
inline double off_diag_sum_fast(const PointSet& sub, const KernelSpec& spec, double eps,
                                const SamplerConfig& cfg, std::uint64_t seed,
                                EvalCounter& counter) {
  const std::size_t m = sub.n();
  if (m < 2) return 0.0;
  const double p = backend_cost_exponent(cfg.backend);
  const double t = cfg.heavy_threshold > 0.0 ? cfg.heavy_threshold
                                             : heavy_threshold_default(m, eps, p);
  const double mm = static_cast<double>(m) * static_cast<double>(m);
  const double mu = t / mm;
  KdeConfig kcfg{std::min(mu, 1.0), eps, 1.0 / mm, cfg.uniform_c};
  DyadicExclusionIndex index(cfg.backend, sub, spec, kcfg, derive_seed(seed, 0));

  double heavy_sum = 0.0;
  std::vector<std::uint32_t> light;
  for (std::size_t i = 0; i < m; ++i) {
    const double reported_density = index.query(i, counter) / static_cast<double>(m);
    if (reported_density >= mu)
      heavy_sum += detail::exact_row_off_diag(sub, spec, i, counter);
    else
      light.push_back(static_cast<std::uint32_t>(i));
  }
  if (light.empty()) return heavy_sum;

  const double want = std::ceil(cfg.c_s * t * t / (eps * eps * eps * eps));
  const std::size_t k = want >= static_cast<double>(light.size())
                            ? light.size()
                            : static_cast<std::size_t>(want);
  if (k == 0) return heavy_sum;
  Rng rng = derive_rng(seed, 1);
  const auto picks = sample_without_replacement(light.size(), k, rng);
  double light_acc = 0.0;
  for (std::uint32_t s : picks)
    light_acc += detail::exact_row_off_diag(sub, spec, light[s], counter);
  return heavy_sum + light_acc * static_cast<double>(light.size()) / static_cast<double>(k);
}

struct SumEstimate {
  double value = 0.0;              // always >= n
  std::uint64_t evals = 0;         // kernel evaluations consumed by the call
  std::uint64_t points_sampled = 0;// total |A| across all Z draws
  std::size_t draws = 0;
};

inline SumEstimate estimate_sum(const PointSet& pts, const KernelSpec& spec, double eps,
                                double delta, const SamplerConfig& cfg, std::uint64_t seed,
                                EvalCounter& counter) {
  if (!(eps > 0.0) || !(eps < 1.0)) throw std::invalid_argument("estimate_sum: eps must be in (0,1)");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("estimate_sum: delta must be in (0,1)");
  cfg.validate();
  spec.validate();
  const std::size_t n = pts.n();
  const double nd = static_cast<double>(n);
  const double p = cfg.sample_prob > 0.0 ? cfg.sample_prob : 1.0 / std::sqrt(nd);
  const std::size_t reps = cfg.draws_per_batch(eps);
  const std::size_t batches = cfg.batches(delta);

  SumEstimate out;
  const std::uint64_t evals_before = counter.count();
  std::vector<double> batch_means;
  batch_means.reserve(batches);
  std::uint64_t draw_id = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    double acc = 0.0;
    for (std::size_t r = 0; r < reps; ++r, ++draw_id) {
      Rng rng = derive_rng(seed, draw_id);
      const auto idx = sample_submatrix(n, p, rng);
      out.points_sampled += idx.size();
      double z = nd;
      if (idx.size() >= 2) {
        const PointSet sub = PointSet::gather(pts, idx);
        const std::uint64_t sub_seed = derive_seed(seed, (draw_id << 1) + 1);
        double so = cfg.fast ? off_diag_sum_fast(sub, spec, eps, cfg, sub_seed, counter)
                             : off_diag_sum_simple(sub, spec, eps, cfg, sub_seed, counter);
        if (so < eps) so = 0.0;  // below this scale the draw carries no signal
        z = nd + so / (p * p);
      }
      acc += z;
    }
    batch_means.push_back(acc / static_cast<double>(reps));
  }
  out.draws = draw_id;
  const std::size_t mid = (batch_means.size() - 1) / 2;  // lower median
  std::nth_element(batch_means.begin(), batch_means.begin() + mid, batch_means.end());
  out.value = batch_means[mid];
  out.evals = counter.count() - evals_before;
  return out;
}

// Uniform off-diagonal pair sampling: t = ceil(c n ln(1/delta) / eps^2) pairs
// (i, j), i != j, with replacement; estimate n + n(n-1) * mean.
inline double claim_baseline(const PointSet& pts, const KernelSpec& spec, double eps, double delta,
                             std::uint64_t seed, EvalCounter& counter, double c = 4.0,
                             std::uint64_t* pairs_out = nullptr) {
  if (!(eps > 0.0) || !(eps < 1.0)) throw std::invalid_argument("claim_baseline: eps in (0,1)");
  if (!(delta > 0.0) || !(delta < 1.0)) throw std::invalid_argument("claim_baseline: delta in (0,1)");
  const std::size_t n = pts.n();
  if (n < 2) return static_cast<double>(n);
  const double nd = static_cast<double>(n);
  const std::uint64_t t =
      static_cast<std::uint64_t>(std::ceil(c * nd * std::log(1.0 / delta) / (eps * eps)));
  if (pairs_out) *pairs_out = t;
  Rng rng = seeded_rng(seed);
  std::uniform_int_distribution<std::uint64_t> pick_i(0, n - 1);
  std::uniform_int_distribution<std::uint64_t> pick_j(0, n - 2);
  double acc = 0.0;
  for (std::uint64_t s = 0; s < t; ++s) {
    const std::size_t i = pick_i(rng);
    std::size_t j = pick_j(rng);
    if (j >= i) ++j;
    acc += kernel_eval(spec, pts.row(i), pts.row(j), counter);
  }
  return nd + nd * (nd - 1.0) * acc / static_cast<double>(t);
}

}  // namespace kermat
