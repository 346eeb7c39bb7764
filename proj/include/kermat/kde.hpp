#pragma once

// Kernel density estimation backends behind one interface: a query for point
// q against a target set T returns an estimate of mean_{p in T} k(q, p).
// Randomized backends promise relative error eps above the density floor mu
// with per-query failure probability fail_prob; deterministic backends are
// exact (scan) or additively accurate (fast Gauss transform).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "kermat/core.hpp"
#include "kermat/fgt.hpp"
#include "kermat/rng.hpp"

namespace kermat {

enum class KdeBackend { exact, uniform, fgt };

inline const char* backend_name(KdeBackend b) {
  switch (b) {
    case KdeBackend::exact: return "exact";
    case KdeBackend::uniform: return "uniform";
    case KdeBackend::fgt: return "fgt";
  }
  return "?";
}

inline KdeBackend backend_from_name(std::string_view s) {
  if (s == "exact") return KdeBackend::exact;
  if (s == "uniform") return KdeBackend::uniform;
  if (s == "fgt") return KdeBackend::fgt;
  throw std::invalid_argument("unknown kde backend: " + std::string(s));
}

struct KdeConfig {
  double mu;                    // density floor, in (0, 1]
  double eps;                   // relative error target, in (0, 1)
  double fail_prob = 1.0 / 3.0; // per-query failure probability
  double uniform_c = 4.0;       // sample-size constant for the uniform backend

  void validate() const {
    if (!(mu > 0.0) || !(mu <= 1.0)) throw std::invalid_argument("KdeConfig: mu must be in (0,1]");
    if (!(eps > 0.0) || !(eps < 1.0)) throw std::invalid_argument("KdeConfig: eps must be in (0,1)");
    if (!(fail_prob > 0.0) || !(fail_prob < 1.0))
      throw std::invalid_argument("KdeConfig: fail_prob must be in (0,1)");
    if (!(uniform_c > 0.0)) throw std::invalid_argument("KdeConfig: uniform_c must be positive");
  }
};

// Queries never evaluate kernels at build time; per-query evaluation cost is
// the backend's business and flows through the caller's counter.
class KdeEstimator {
 public:
  virtual ~KdeEstimator() = default;
  virtual double query(std::span<const double> q, EvalCounter& counter) const = 0;
  virtual std::size_t target_count() const = 0;
  // exponent p in the per-query cost c / (mu^p eps^2): exact 0, uniform 1, fgt 0
  virtual double cost_exponent() const = 0;
  virtual bool deterministic() const = 0;
};

namespace detail {

inline std::vector<std::uint32_t> iota_indices(std::size_t n) {
  std::vector<std::uint32_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::uint32_t>(i);
  return v;
}

}  // namespace detail

// Full scan over the targets: m evaluations per query, exact answer.
class ExactKde final : public KdeEstimator {
 public:
  ExactKde(const PointSet& pts, const KernelSpec& spec, std::vector<std::uint32_t> targets)
      : pts_(&pts), spec_(spec), targets_(std::move(targets)) {
    if (targets_.empty()) throw std::invalid_argument("ExactKde: empty target set");
  }

  double query(std::span<const double> q, EvalCounter& counter) const override {
    double acc = 0.0;
    for (std::uint32_t i : targets_) acc += kernel_eval(spec_, q, pts_->row(i), counter);
    return acc / static_cast<double>(targets_.size());
  }

  std::size_t target_count() const override { return targets_.size(); }
  double cost_exponent() const override { return 0.0; }
  bool deterministic() const override { return true; }

 private:
  const PointSet* pts_;
  KernelSpec spec_;
  std::vector<std::uint32_t> targets_;
};

// Mean over a build-time uniform subsample (without replacement) of size
// ceil(uniform_c / (mu eps^2)), capped at the target count.  At the cap the
// sample covers every target and the estimator degenerates to an exact scan.
class UniformKde final : public KdeEstimator {
 public:
  UniformKde(const PointSet& pts, const KernelSpec& spec, const KdeConfig& cfg,
             std::vector<std::uint32_t> targets, std::uint64_t seed)
      : pts_(&pts), spec_(spec), m_(targets.size()) {
    if (targets.empty()) throw std::invalid_argument("UniformKde: empty target set");
    cfg.validate();
    const double raw = cfg.uniform_c / (cfg.mu * cfg.eps * cfg.eps);
    std::size_t want = raw >= static_cast<double>(m_)
                           ? m_
                           : static_cast<std::size_t>(std::ceil(raw));
    if (want == 0) want = 1;
    if (want >= m_) {
      sample_ = std::move(targets);
    } else {
      Rng rng = seeded_rng(seed);
      const auto picks = sample_without_replacement(m_, want, rng);
      sample_.reserve(want);
      for (std::uint32_t p : picks) sample_.push_back(targets[p]);
    }
  }

  double query(std::span<const double> q, EvalCounter& counter) const override {
    double acc = 0.0;
    for (std::uint32_t i : sample_) acc += kernel_eval(spec_, q, pts_->row(i), counter);
    return acc / static_cast<double>(sample_.size());
  }

  std::size_t target_count() const override { return m_; }
  std::size_t sample_size() const { return sample_.size(); }
  double cost_exponent() const override { return 1.0; }
  bool deterministic() const override { return sample_.size() == m_; }

 private:
  const PointSet* pts_;
  KernelSpec spec_;
  std::size_t m_;
  std::vector<std::uint32_t> sample_;
};

// Adapter giving the fast Gauss transform the shared interface.  The additive
// target is mu * eps, which implies relative error eps whenever the true
// density is at least mu.  Queries cost zero kernel evaluations.
class FgtKde final : public KdeEstimator {
 public:
  FgtKde(const PointSet& pts, const KernelSpec& spec, const KdeConfig& cfg,
         std::span<const std::uint32_t> targets)
      : est_(pts, spec, cfg.mu * cfg.eps, targets) {}

  double query(std::span<const double> q, EvalCounter&) const override { return est_.query(q); }
  std::size_t target_count() const override { return est_.target_count(); }
  double cost_exponent() const override { return 0.0; }
  bool deterministic() const override { return true; }
  const FgtEstimator& transform() const { return est_; }

 private:
  FgtEstimator est_;
};

// Median of independently built replicas.  Boosts a per-query success of 2/3
// to 1 - fail_prob with ceil(18 ln(1/fail_prob)) replicas.
class AmplifiedKde final : public KdeEstimator {
 public:
  explicit AmplifiedKde(std::vector<std::unique_ptr<KdeEstimator>> replicas)
      : replicas_(std::move(replicas)) {
    if (replicas_.empty()) throw std::invalid_argument("AmplifiedKde: no replicas");
  }

  double query(std::span<const double> q, EvalCounter& counter) const override {
    std::vector<double> vals;
    vals.reserve(replicas_.size());
    for (const auto& r : replicas_) vals.push_back(r->query(q, counter));
    const std::size_t mid = (vals.size() - 1) / 2;  // lower median
    std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
    return vals[mid];
  }

  std::size_t target_count() const override { return replicas_.front()->target_count(); }
  double cost_exponent() const override { return replicas_.front()->cost_exponent(); }
  bool deterministic() const override { return replicas_.front()->deterministic(); }
  std::size_t replica_count() const { return replicas_.size(); }

 private:
  std::vector<std::unique_ptr<KdeEstimator>> replicas_;
};

inline std::size_t amplification_replicas(double fail_prob) {
  if (fail_prob >= 1.0 / 3.0) return 1;
  return static_cast<std::size_t>(std::ceil(18.0 * std::log(1.0 / fail_prob)));
}

// Factory over an explicit target index list.  Randomized backends whose
// configuration saturates to a deterministic structure skip amplification.
inline std::unique_ptr<KdeEstimator> kde_build(KdeBackend backend, const PointSet& pts,
                                               const KernelSpec& spec, const KdeConfig& cfg,
                                               std::vector<std::uint32_t> targets,
                                               std::uint64_t seed) {
  cfg.validate();
  spec.validate();
  if (targets.empty()) throw std::invalid_argument("kde_build: empty target set");
  switch (backend) {
    case KdeBackend::exact:
      return std::make_unique<ExactKde>(pts, spec, std::move(targets));
    case KdeBackend::fgt:
      return std::make_unique<FgtKde>(pts, spec, cfg, targets);
    case KdeBackend::uniform: {
      auto first = std::make_unique<UniformKde>(pts, spec, cfg, targets, derive_seed(seed, 0));
      const std::size_t reps = first->deterministic() ? 1 : amplification_replicas(cfg.fail_prob);
      if (reps == 1) return first;
      std::vector<std::unique_ptr<KdeEstimator>> replicas;
      replicas.reserve(reps);
      replicas.push_back(std::move(first));
      for (std::size_t r = 1; r < reps; ++r)
        replicas.push_back(
            std::make_unique<UniformKde>(pts, spec, cfg, targets, derive_seed(seed, r)));
      return std::make_unique<AmplifiedKde>(std::move(replicas));
    }
  }
  throw std::logic_error("kde_build: unknown backend");
}

inline std::unique_ptr<KdeEstimator> kde_build(KdeBackend backend, const PointSet& pts,
                                               const KernelSpec& spec, const KdeConfig& cfg,
                                               std::uint64_t seed) {
  return kde_build(backend, pts, spec, cfg, detail::iota_indices(pts.n()), seed);
}

}  // namespace kermat
