// Command-line front end: synthetic instance generation, sum / eigenvector
// experiments, kernel alignment, and a density-estimation benchmark.
//
// Records stream to --out when given (summary on stdout), otherwise records
// go to stdout and the summary to stderr, so either side can be piped.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kermat/kermat.hpp"

namespace {

using namespace kermat;

struct KernelOpts {
  std::string family = "gaussian";
  double bandwidth = 1.0;
  double beta = 1.0;
};

struct DataOpts {
  std::string path;
  std::string format = "csv";
  double class_filter = 0.0;
  bool has_class_filter = false;
  bool normalize = false;
};

struct OutOpts {
  std::string path;  // empty -> stdout
  std::string format = "csv";
};

void add_kernel_opts(CLI::App* sub, KernelOpts& k) {
  sub->add_option("--kernel", k.family, "kernel family")
      ->check(CLI::IsMember({"gaussian", "exponential", "laplacian", "rational_quadratic"}))
      ->capture_default_str();
  sub->add_option("--bandwidth", k.bandwidth, "kernel bandwidth sigma")->capture_default_str();
  sub->add_option("--beta", k.beta, "rational-quadratic exponent")->capture_default_str();
}

void add_data_opts(CLI::App* sub, DataOpts& d) {
  sub->add_option("--data", d.path, "input dataset file")->required()->check(CLI::ExistingFile);
  sub->add_option("--data-format", d.format, "input format")
      ->check(CLI::IsMember({"csv", "libsvm", "whitespace"}))
      ->capture_default_str();
  sub->add_option("--class-filter", d.class_filter, "keep only rows with this label")
      ->each([&d](const std::string&) { d.has_class_filter = true; });
  sub->add_flag("--normalize", d.normalize, "min-max scale each dimension to [0,1]");
}

void add_out_opts(CLI::App* sub, OutOpts& o) {
  sub->add_option("--out", o.path, "write records to this file (default: stdout)");
  sub->add_option("--format", o.format, "record format")
      ->check(CLI::IsMember({"csv", "jsonl"}))
      ->capture_default_str();
}

void add_seed_opt(CLI::App* sub, std::uint64_t& seed) {
  sub->add_option("--seed", seed, "master random seed")
      ->envname("KERMAT_SEED")
      ->capture_default_str();
}

KernelSpec make_spec(const KernelOpts& k) {
  KernelSpec spec{family_from_name(k.family), k.bandwidth, k.beta};
  spec.validate();
  return spec;
}

PointSet load(const DataOpts& d) {
  DatasetSource src;
  src.path = d.path;
  src.format = data_format_from_name(d.format);
  if (d.has_class_filter) src.class_filter = d.class_filter;
  src.normalize = d.normalize;
  return load_dataset(src);
}

// records to --out (summary -> stdout) or records to stdout (summary -> stderr)
template <typename EmitFn>
std::ostream& route_records(const OutOpts& o, EmitFn&& do_emit) {
  const RecordFormat fmt = record_format_from_name(o.format);
  if (o.path.empty()) {
    do_emit(std::cout, fmt);
    return std::cerr;
  }
  std::ofstream file(o.path);
  if (!file) throw std::runtime_error("cannot open " + o.path);
  do_emit(file, fmt);
  if (!file) throw std::runtime_error("write failed for " + o.path);
  return std::cout;
}

void write_points_csv(const PointSet& pts, std::ostream& out) {
  for (std::size_t i = 0; i < pts.n(); ++i) {
    const auto row = pts.row(i);
    for (std::size_t j = 0; j < pts.d(); ++j) {
      if (j) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
}

double mean_density(const PointSet& pts, const KernelSpec& spec, std::span<const double> q,
                    EvalCounter& counter) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pts.n(); ++i) acc += kernel_eval(spec, q, pts.row(i), counter);
  return acc / static_cast<double>(pts.n());
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- gen

struct GenOpts {
  std::string type = "far";
  std::size_t n = 1024;
  std::size_t d = 2;
  double constant = 2.0;                 // duplicate instance C
  std::vector<std::size_t> sizes;        // clusters
  std::size_t singles = 0;               // clusters
  std::size_t mixture_k = 4;             // mixture
  double separation = 10.0;              // mixture
  double noise = 0.1;                    // mixture
  KernelOpts kernel;
  std::uint64_t seed = 0;
  std::string out;
};

void run_gen(const GenOpts& g) {
  const KernelSpec spec = make_spec(g.kernel);
  Rng rng = seeded_rng(g.seed);
  nlohmann::ordered_json meta;
  meta["type"] = g.type;
  PointSet pts(1, 1);
  if (g.type == "far") {
    pts = gen_far_points(g.n, g.d, spec, rng);
    meta["expected_sum"] = static_cast<double>(g.n);
  } else if (g.type == "duplicate") {
    DuplicateInstance inst = gen_duplicate_instance(g.n, g.d, g.constant, spec, rng);
    meta["duplicates"] = inst.duplicates.size();
    meta["expected_sum"] = inst.expected_sum();
    pts = std::move(inst.points);
  } else if (g.type == "clusters") {
    if (g.sizes.empty()) throw std::invalid_argument("gen: --sizes required for type clusters");
    ClusteredInstance inst = gen_duplicate_clusters(g.d, g.sizes, g.singles, spec, rng);
    meta["clusters"] = inst.clusters.size();
    meta["singles"] = inst.singles.size();
    meta["lambda1"] = inst.lambda1();
    pts = std::move(inst.points);
  } else {  // mixture
    pts = gen_gaussian_mixture(g.n, g.d, g.mixture_k, g.separation, g.noise, rng);
    meta["components"] = g.mixture_k;
    meta["separation"] = g.separation;
    meta["noise"] = g.noise;
  }
  meta["n"] = pts.n();
  meta["d"] = pts.d();
  meta["kernel"] = g.kernel.family;
  meta["bandwidth"] = g.kernel.bandwidth;
  meta["seed"] = g.seed;
  if (g.out.empty()) {
    write_points_csv(pts, std::cout);
    std::cerr << meta.dump() << '\n';
  } else {
    std::ofstream file(g.out);
    if (!file) throw std::runtime_error("cannot open " + g.out);
    write_points_csv(pts, file);
    if (!file) throw std::runtime_error("write failed for " + g.out);
    std::cout << meta.dump() << '\n';
  }
}

// ---------------------------------------------------------------- sum

struct SumOpts {
  DataOpts data;
  KernelOpts kernel;
  OutOpts out;
  double eps = 0.2;
  double delta = 0.1;
  std::size_t trials = 10;
  double sample_prob = 0.0;  // 0 -> automatic 1/sqrt(n)
  std::string backend = "exact";
  bool simple = false;
  double ground_truth = 0.0;
  bool has_ground_truth = false;
  std::uint64_t seed = 0;
};

void run_sum(const SumOpts& s) {
  const PointSet pts = load(s.data);
  const KernelSpec spec = make_spec(s.kernel);
  SamplerConfig cfg;
  cfg.sample_prob = s.sample_prob;
  cfg.backend = backend_from_name(s.backend);
  cfg.fast = !s.simple;
  const std::optional<double> exact_value =
      s.has_ground_truth ? std::optional<double>(s.ground_truth) : std::nullopt;
  const SumExperimentResult res =
      run_sum_experiment(pts, spec, s.eps, s.delta, s.trials, cfg, s.seed, exact_value);
  std::ostream& info = route_records(s.out, [&](std::ostream& os, RecordFormat fmt) {
    emit_sum_records(res.records, os, fmt);
  });
  nlohmann::ordered_json j;
  j["n"] = pts.n();
  j["exact"] = res.summary.exact;
  j["trials"] = res.summary.trials;
  j["success_rate"] = res.summary.success_rate;
  j["baseline_success_rate"] = res.summary.baseline_success_rate;
  j["mean_points_sampled"] = res.summary.mean_points_sampled;
  j["mean_evals"] = res.summary.mean_evals;
  j["mean_evals_baseline"] = res.summary.mean_evals_baseline;
  info << j.dump() << '\n';
}

// ---------------------------------------------------------------- eig

struct EigOpts {
  DataOpts data;
  KernelOpts kernel;
  OutOpts out;
  std::vector<std::string> methods{"full", "uniform", "knpm"};
  std::size_t iterations = 20;
  double rate0 = 0.01;
  double growth = 1.1;
  double eps = 0.1;
  std::string backend = "uniform";
  bool contract = false;
  double ground_truth = 0.0;
  bool has_ground_truth = false;
  std::uint64_t seed = 0;
};

void run_eig(const EigOpts& e) {
  const PointSet pts = load(e.data);
  const KernelSpec spec = make_spec(e.kernel);
  EigExperimentConfig cfg;
  cfg.methods.clear();
  for (const auto& m : e.methods) cfg.methods.push_back(method_from_name(m));
  cfg.iterations = e.iterations;
  cfg.schedule = PowerSchedule{e.rate0, e.growth};
  cfg.eps = e.eps;
  cfg.knpm_backend = backend_from_name(e.backend);
  cfg.knpm_budget_mode = !e.contract;
  if (e.has_ground_truth) cfg.lambda1 = e.ground_truth;
  const std::vector<RunRecord> records = run_eig_experiment(pts, spec, cfg, e.seed);
  std::ostream& info = route_records(e.out, [&](std::ostream& os, RecordFormat fmt) {
    emit(records, os, fmt);
  });
  for (const auto& m : e.methods) {
    const RunRecord* last = nullptr;
    for (const auto& r : records)
      if (r.method == m) last = &r;
    if (!last) continue;
    nlohmann::ordered_json j;
    j["method"] = m;
    j["iterations"] = last->iter;
    j["rayleigh"] = last->rayleigh;
    if (last->rel_err) j["rel_err"] = *last->rel_err;
    j["evals_cum"] = last->evals_cum;
    info << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------- align

struct AlignOpts {
  DataOpts data;
  std::string data2;          // empty -> same dataset
  double class_filter2 = 0.0;
  bool has_class_filter2 = false;
  KernelOpts kernel;
  double bandwidth2 = 0.0;    // 0 -> same bandwidth
  double eps = 0.25;
  double delta = 0.1;
  bool exact = false;
  std::uint64_t seed = 0;
};

// A gaussian kernel at bandwidth s2 equals the bandwidth-s kernel on
// coordinates scaled by s/s2, so a second bandwidth reduces to rescaling
// the second point set and sharing one spec.
PointSet scale_points(const PointSet& pts, double factor) {
  std::vector<double> coords(pts.coords().begin(), pts.coords().end());
  for (auto& c : coords) c *= factor;
  return PointSet(pts.n(), pts.d(), std::move(coords));
}

void run_align(const AlignOpts& a) {
  const KernelSpec spec = make_spec(a.kernel);
  const PointSet x = load(a.data);
  DataOpts second = a.data;
  if (!a.data2.empty()) second.path = a.data2;
  if (a.has_class_filter2) {
    second.class_filter = a.class_filter2;
    second.has_class_filter = true;
  }
  PointSet xp = (a.data2.empty() && !a.has_class_filter2) ? x : load(second);
  if (a.bandwidth2 > 0.0 && a.bandwidth2 != a.kernel.bandwidth)
    xp = scale_points(xp, a.kernel.bandwidth / a.bandwidth2);
  EvalCounter counter;
  nlohmann::ordered_json j;
  if (a.exact) {
    j["alignment"] = alignment_exact(x, xp, spec, counter);
    j["estimator"] = "exact";
  } else {
    SamplerConfig cfg;
    j["alignment"] = kernel_alignment(x, xp, spec, a.eps, a.delta, cfg, a.seed, counter);
    j["estimator"] = "sampled";
    j["eps"] = a.eps;
    j["delta"] = a.delta;
  }
  j["n"] = x.n();
  j["evals"] = counter.count();
  std::cout << j.dump() << '\n';
}

// ---------------------------------------------------------------- kde-bench

struct KdeBenchOpts {
  DataOpts data;
  KernelOpts kernel;
  std::string backend = "uniform";
  double mu = 0.01;
  double eps = 0.2;
  double fail_prob = 1.0 / 3.0;
  std::size_t queries = 100;
  std::uint64_t seed = 0;
};

void run_kde_bench(const KdeBenchOpts& b) {
  const PointSet pts = load(b.data);
  const KernelSpec spec = make_spec(b.kernel);
  const KdeConfig cfg{b.mu, b.eps, b.fail_prob};
  Rng rng = seeded_rng(b.seed);
  const std::size_t q = std::min(b.queries, pts.n());
  const std::vector<std::uint32_t> picks = sample_without_replacement(pts.n(), q, rng);

  auto t0 = std::chrono::steady_clock::now();
  const auto est = kde_build(backend_from_name(b.backend), pts, spec, cfg, derive_seed(b.seed, 1));
  const double build_ms = elapsed_ms(t0);

  EvalCounter counter, scratch;
  double max_rel = 0.0, max_abs = 0.0;
  std::size_t below_floor = 0, rel_failures = 0;
  t0 = std::chrono::steady_clock::now();
  std::vector<double> estimates(q);
  for (std::size_t i = 0; i < q; ++i) estimates[i] = est->query(pts.row(picks[i]), counter);
  const double query_ms = elapsed_ms(t0);
  for (std::size_t i = 0; i < q; ++i) {
    const double exact = mean_density(pts, spec, pts.row(picks[i]), scratch);
    max_abs = std::max(max_abs, std::abs(estimates[i] - exact));
    if (exact >= b.mu) {
      const double rel = std::abs(estimates[i] - exact) / exact;
      max_rel = std::max(max_rel, rel);
      if (rel > b.eps) ++rel_failures;
    } else {
      ++below_floor;
    }
  }

  nlohmann::ordered_json j;
  j["backend"] = b.backend;
  j["n"] = pts.n();
  j["d"] = pts.d();
  j["mu"] = b.mu;
  j["eps"] = b.eps;
  j["queries"] = q;
  j["mean_evals_per_query"] =
      q ? static_cast<double>(counter.count()) / static_cast<double>(q) : 0.0;
  j["max_rel_err_above_floor"] = max_rel;
  j["rel_failures"] = rel_failures;
  j["max_abs_err"] = max_abs;
  j["queries_below_floor"] = below_floor;
  j["build_ms"] = build_ms;
  j["query_ms"] = query_ms;
  std::cout << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kermat: sublinear kernel-matrix sum and top-eigenvector estimation"};
  app.require_subcommand(1);

  GenOpts g;
  auto* gen = app.add_subcommand("gen", "generate a synthetic point set as csv");
  gen->add_option("--type", g.type, "instance family")
      ->check(CLI::IsMember({"far", "duplicate", "clusters", "mixture"}))
      ->capture_default_str();
  gen->add_option("--n", g.n, "number of points (far, duplicate, mixture)")
      ->capture_default_str();
  gen->add_option("--d", g.d, "dimension")->capture_default_str();
  gen->add_option("--constant", g.constant, "duplicate instance constant C")
      ->capture_default_str();
  gen->add_option("--sizes", g.sizes, "cluster sizes, comma separated")->delimiter(',');
  gen->add_option("--singles", g.singles, "isolated far points (clusters)")
      ->capture_default_str();
  gen->add_option("--mixture-k", g.mixture_k, "mixture component count")->capture_default_str();
  gen->add_option("--separation", g.separation, "mixture center spacing")->capture_default_str();
  gen->add_option("--noise", g.noise, "mixture within-component spread")->capture_default_str();
  add_kernel_opts(gen, g.kernel);
  add_seed_opt(gen, g.seed);
  gen->add_option("--out", g.out, "output csv path (default: stdout)");
  gen->callback([&] { run_gen(g); });

  SumOpts s;
  auto* sum = app.add_subcommand("sum", "estimate the kernel-matrix sum over repeated trials");
  add_data_opts(sum, s.data);
  add_kernel_opts(sum, s.kernel);
  add_out_opts(sum, s.out);
  sum->add_option("--eps", s.eps, "relative accuracy target")->capture_default_str();
  sum->add_option("--delta", s.delta, "failure probability")->capture_default_str();
  sum->add_option("--trials", s.trials, "independent trials")->capture_default_str();
  sum->add_option("--sample-prob", s.sample_prob, "row sampling probability (0 = 1/sqrt(n))")
      ->capture_default_str();
  sum->add_option("--backend", s.backend, "density estimator inside the row-sum index")
      ->check(CLI::IsMember({"exact", "uniform"}))
      ->capture_default_str();
  sum->add_flag("--simple", s.simple, "disable the heavy/light row split");
  sum->add_option("--ground-truth", s.ground_truth,
                  "precomputed exact sum (required for n > 4096)")
      ->each([&s](const std::string&) { s.has_ground_truth = true; });
  add_seed_opt(sum, s.seed);
  sum->callback([&] { run_sum(s); });

  EigOpts e;
  auto* eig = app.add_subcommand("eig", "compare top-eigenvector methods per iteration");
  add_data_opts(eig, e.data);
  add_kernel_opts(eig, e.kernel);
  add_out_opts(eig, e.out);
  eig->add_option("--methods", e.methods, "methods to run, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  eig->add_option("--iterations", e.iterations, "power iterations per method")
      ->capture_default_str();
  eig->add_option("--rate0", e.rate0, "initial sampling rate")->capture_default_str();
  eig->add_option("--growth", e.growth, "per-iteration rate growth factor")
      ->capture_default_str();
  eig->add_option("--eps", e.eps, "noisy-power accuracy parameter")->capture_default_str();
  eig->add_option("--backend", e.backend, "density backend for the noisy power method")
      ->check(CLI::IsMember({"exact", "uniform", "fgt"}))
      ->capture_default_str();
  eig->add_flag("--contract", e.contract,
                "run the noisy power method at its accuracy contract instead of the "
                "sampling-budget schedule");
  eig->add_option("--ground-truth", e.ground_truth,
                  "precomputed top eigenvalue (required for n > 4096)")
      ->each([&e](const std::string&) { e.has_ground_truth = true; });
  add_seed_opt(eig, e.seed);
  eig->callback([&] { run_eig(e); });

  AlignOpts a;
  auto* align = app.add_subcommand("align", "estimate alignment between two gaussian kernels");
  add_data_opts(align, a.data);
  align->add_option("--data2", a.data2, "second dataset (default: first dataset)");
  align->add_option("--class-filter2", a.class_filter2, "label filter for the second dataset")
      ->each([&a](const std::string&) { a.has_class_filter2 = true; });
  add_kernel_opts(align, a.kernel);
  align->add_option("--bandwidth2", a.bandwidth2, "second kernel bandwidth (0 = same)")
      ->capture_default_str();
  align->add_option("--eps", a.eps, "per-sum relative accuracy")->capture_default_str();
  align->add_option("--delta", a.delta, "failure probability")->capture_default_str();
  align->add_flag("--exact", a.exact, "use the brute-force oracle instead of sampling");
  add_seed_opt(align, a.seed);
  align->callback([&] { run_align(a); });

  KdeBenchOpts b;
  auto* bench = app.add_subcommand("kde-bench", "score a density backend against brute force");
  add_data_opts(bench, b.data);
  add_kernel_opts(bench, b.kernel);
  bench->add_option("--backend", b.backend, "density backend")
      ->check(CLI::IsMember({"exact", "uniform", "fgt"}))
      ->capture_default_str();
  bench->add_option("--mu", b.mu, "density floor")->capture_default_str();
  bench->add_option("--eps", b.eps, "relative error target")->capture_default_str();
  bench->add_option("--fail-prob", b.fail_prob, "per-query failure probability")
      ->capture_default_str();
  bench->add_option("--queries", b.queries, "query points drawn from the dataset")
      ->capture_default_str();
  add_seed_opt(bench, b.seed);
  bench->callback([&] { run_kde_bench(b); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex);
  } catch (const std::exception& ex) {
    std::cerr << "kermat: error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
