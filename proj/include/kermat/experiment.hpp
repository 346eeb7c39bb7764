#pragma once

// Experiment orchestration: run the competing eigenvector methods (or sum
// estimators) under one seed and emit per-iteration records suitable for
// cost-accuracy plots.
//
// Record semantics for the eigenvector experiment: record k (1-based) carries
// the cumulative kernel evaluations after iteration k, the method's own
// Rayleigh proxy z_k' y_k from that iteration, and — when ground truth is
// available — the true relative error 1 - (z'Kz)/lambda1 of the iterate
// PRODUCED by iteration k, i.e. the accuracy those evaluations bought.
// Ground-truth evaluations run on scratch counters and never appear in
// evals_cum.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kermat/core.hpp"
#include "kermat/io.hpp"
#include "kermat/oracle.hpp"
#include "kermat/power.hpp"
#include "kermat/rng.hpp"
#include "kermat/sum.hpp"

namespace kermat {

enum class Method { full, uniform, knpm };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::full: return "full";
    case Method::uniform: return "uniform";
    case Method::knpm: return "knpm";
  }
  return "?";
}

inline Method method_from_name(std::string_view s) {
  if (s == "full") return Method::full;
  if (s == "uniform") return Method::uniform;
  if (s == "knpm") return Method::knpm;
  throw std::invalid_argument("unknown method: " + std::string(s));
}

struct EigExperimentConfig {
  std::vector<Method> methods{Method::full, Method::uniform, Method::knpm};
  std::size_t iterations = 20;
  PowerSchedule schedule{0.01, 1.1};  // uniform baseline and knpm budget rates
  double eps = 0.1;                   // knpm accuracy parameter
  KdeBackend knpm_backend = KdeBackend::uniform;
  bool knpm_budget_mode = true;       // drive knpm's MVM from the schedule
  // ground truth: lambda1 enables rel_err; the oracle replaces the exact
  // O(n^2) quadratic form when the instance admits a cheaper one
  std::optional<double> lambda1;
  std::function<double(std::span<const double>)> rayleigh_oracle;
  std::size_t exact_ground_truth_limit = 4096;  // largest n for implicit exact lambda1
};

inline std::vector<RunRecord> run_eig_experiment(const PointSet& pts, const KernelSpec& spec,
                                                 const EigExperimentConfig& cfg,
                                                 std::uint64_t seed) {
  const std::size_t n = pts.n();
  if (cfg.iterations < 1)
    throw std::invalid_argument("run_eig_experiment: iterations must be >= 1");

  EvalCounter scratch;  // ground-truth work, isolated from method counters
  std::optional<double> lambda1 = cfg.lambda1;
  if (!lambda1) {
    if (n > cfg.exact_ground_truth_limit)
      throw std::invalid_argument(
          "run_eig_experiment: ground truth unavailable; supply lambda1 for n > " +
          std::to_string(cfg.exact_ground_truth_limit));
    lambda1 = exact_top_eig(pts, spec, scratch).lambda;
  }
  const auto true_rayleigh = [&](std::span<const double> z) {
    if (cfg.rayleigh_oracle) return cfg.rayleigh_oracle(z);
    const std::vector<double> kz = exact_mvm(pts, spec, std::vector<double>(z.begin(), z.end()),
                                             scratch);
    return detail::dot(z, kz);
  };

  std::vector<RunRecord> records;
  records.reserve(cfg.methods.size() * cfg.iterations);
  for (Method m : cfg.methods) {
    EvalCounter counter;
    const auto observer = [&](std::size_t k, std::span<const double> z,
                              std::span<const double> y) {
      RunRecord rec;
      rec.iter = k + 1;
      rec.evals_cum = counter.count();
      rec.rayleigh = detail::dot(z, y);
      const double ny = detail::norm2(y);
      std::vector<double> z_next(z.begin(), z.end());
      if (ny > 0.0)
        for (std::size_t j = 0; j < z_next.size(); ++j) z_next[j] = y[j] / ny;
      const double rq = true_rayleigh(z_next);
      rec.rel_err = std::clamp(1.0 - rq / *lambda1, 0.0, 1.0);
      rec.method = method_name(m);
      rec.seed = seed;
      records.push_back(std::move(rec));
    };

    switch (m) {
      case Method::full:
        full_power(pts, spec, cfg.iterations, counter, observer);
        break;
      case Method::uniform:
        uniform_noisy_power(pts, spec, cfg.iterations, cfg.schedule.rate0, cfg.schedule.growth,
                            derive_seed(seed, 1), counter, observer);
        break;
      case Method::knpm: {
        MvmConfig mvm_cfg;
        mvm_cfg.backend = cfg.knpm_backend;
        KnpmOptions opts;
        opts.iterations = cfg.iterations;
        if (cfg.knpm_budget_mode) opts.schedule = cfg.schedule;
        knpm(pts, spec, cfg.eps, mvm_cfg, opts, derive_seed(seed, 2), counter, observer);
        break;
      }
    }
  }
  return records;
}

// ---------------------------------------------------------------------------

struct SumTrialRecord {
  std::uint64_t trial = 0;
  std::uint64_t n = 0;
  double estimate = 0.0;           // submatrix-sampling estimator
  double baseline = 0.0;           // uniform pair-sampling baseline
  std::uint64_t points_sampled = 0;
  std::uint64_t evals_estimate = 0;
  std::uint64_t evals_baseline = 0;
  std::uint64_t seed = 0;
};

struct SumExperimentSummary {
  std::size_t trials = 0;
  double exact = 0.0;
  double success_rate = 0.0;           // fraction of trials within (1 +- eps)
  double baseline_success_rate = 0.0;
  double mean_points_sampled = 0.0;
  double mean_evals = 0.0;
  double mean_evals_baseline = 0.0;
};

struct SumExperimentResult {
  SumExperimentSummary summary;
  std::vector<SumTrialRecord> records;
};

inline SumExperimentResult run_sum_experiment(const PointSet& pts, const KernelSpec& spec,
                                              double eps, double delta, std::size_t trials,
                                              const SamplerConfig& cfg, std::uint64_t seed,
                                              std::optional<double> exact_value = {},
                                              std::size_t exact_limit = 4096) {
  if (trials == 0) throw std::invalid_argument("run_sum_experiment: trials must be >= 1");
  const std::size_t n = pts.n();
  double exact;
  if (exact_value) {
    exact = *exact_value;
  } else {
    if (n > exact_limit)
      throw std::invalid_argument("run_sum_experiment: supply the exact sum for n > " +
                                  std::to_string(exact_limit));
    EvalCounter scratch;
    exact = exact_sum(pts, spec, scratch);
  }

  SumExperimentResult out;
  out.summary.trials = trials;
  out.summary.exact = exact;
  out.records.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    SumTrialRecord rec;
    rec.trial = t;
    rec.n = n;
    rec.seed = seed;
    {
      EvalCounter counter;
      const SumEstimate est =
          estimate_sum(pts, spec, eps, delta, cfg, derive_seed(seed, 2 * t), counter);
      rec.estimate = est.value;
      rec.points_sampled = est.points_sampled;
      rec.evals_estimate = est.evals;
    }
    {
      EvalCounter counter;
      rec.baseline =
          claim_baseline(pts, spec, eps, delta, derive_seed(seed, 2 * t + 1), counter);
      rec.evals_baseline = counter.count();
    }
    if (std::abs(rec.estimate - exact) <= eps * exact) out.summary.success_rate += 1.0;
    if (std::abs(rec.baseline - exact) <= eps * exact) out.summary.baseline_success_rate += 1.0;
    out.summary.mean_points_sampled += static_cast<double>(rec.points_sampled);
    out.summary.mean_evals += static_cast<double>(rec.evals_estimate);
    out.summary.mean_evals_baseline += static_cast<double>(rec.evals_baseline);
    out.records.push_back(rec);
  }
  const double tn = static_cast<double>(trials);
  out.summary.success_rate /= tn;
  out.summary.baseline_success_rate /= tn;
  out.summary.mean_points_sampled /= tn;
  out.summary.mean_evals /= tn;
  out.summary.mean_evals_baseline /= tn;
  return out;
}

inline void emit_sum_records(const std::vector<SumTrialRecord>& records, std::ostream& out,
                             RecordFormat format) {
  if (format == RecordFormat::csv) {
    out << "trial,n,estimate,baseline,points_sampled,evals_estimate,evals_baseline,seed\n";
    for (const auto& r : records)
      out << r.trial << ',' << r.n << ',' << format_double(r.estimate) << ','
          << format_double(r.baseline) << ',' << r.points_sampled << ',' << r.evals_estimate
          << ',' << r.evals_baseline << ',' << r.seed << '\n';
    return;
  }
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["trial"] = r.trial;
    j["n"] = r.n;
    j["estimate"] = r.estimate;
    j["baseline"] = r.baseline;
    j["points_sampled"] = r.points_sampled;
    j["evals_estimate"] = r.evals_estimate;
    j["evals_baseline"] = r.evals_baseline;
    j["seed"] = r.seed;
    out << j.dump() << '\n';
  }
}

inline void emit_sum_records(const std::vector<SumTrialRecord>& records, const std::string& path,
                             RecordFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_sum_records: cannot open " + path);
  emit_sum_records(records, out, format);
  if (!out) throw std::runtime_error("emit_sum_records: write failed for " + path);
}

}  // namespace kermat
