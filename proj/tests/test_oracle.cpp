#include <kermat/oracle.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <catch2/catch_amalgamated.hpp>

using namespace kermat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PointSet random_points(std::size_t n, std::size_t d, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> coords(n * d);
  for (auto& c : coords) c = g(rng);
  return PointSet(n, d, std::move(coords));
}

// independent reference kernel (no library code, no counter)
double ref_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  double sq = 0.0, l1 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - y[k];
    sq += diff * diff;
    l1 += std::abs(diff);
  }
  switch (spec.family) {
    case KernelFamily::gaussian: return std::exp(-sq / (spec.bandwidth * spec.bandwidth));
    case KernelFamily::exponential: return std::exp(-std::sqrt(sq) / spec.bandwidth);
    case KernelFamily::laplacian: return std::exp(-l1 / spec.bandwidth);
    case KernelFamily::rational_quadratic:
      return std::pow(1.0 + sq / (spec.bandwidth * spec.bandwidth), -spec.beta);
  }
  return 0.0;
}

Eigen::MatrixXd ref_matrix(const PointSet& pts, const KernelSpec& spec) {
  Eigen::MatrixXd K(pts.n(), pts.n());
  for (std::size_t i = 0; i < pts.n(); ++i)
    for (std::size_t j = 0; j < pts.n(); ++j) K(i, j) = ref_kernel(spec, pts.row(i), pts.row(j));
  return K;
}

PointSet identical_points(std::size_t n, std::size_t d) {
  std::vector<double> coords(n * d, 0.5);
  return PointSet(n, d, std::move(coords));
}

PointSet spread_points(std::size_t n) {  // pairwise distance >= 1000
  std::vector<double> coords(n);
  for (std::size_t i = 0; i < n; ++i) coords[i] = 1000.0 * static_cast<double>(i);
  return PointSet(n, 1, std::move(coords));
}

}  // namespace

TEST_CASE("exact_sum equals closed forms on degenerate instances", "[oracle]") {
  EvalCounter c;
  const KernelSpec spec{KernelFamily::gaussian, 1.0};
  CHECK_THAT(exact_sum(identical_points(3, 2), spec, c), WithinRel(9.0, 1e-14));
  CHECK_THAT(exact_sum(spread_points(10), spec, c), WithinAbs(10.0, 1e-12));
}

TEST_CASE("exact_sum matches an independent double loop", "[oracle]") {
  EvalCounter c;
  const auto pts = random_points(64, 3, 1.0, 5);
  for (auto fam : {KernelFamily::gaussian, KernelFamily::laplacian}) {
    const KernelSpec spec{fam, 0.8, 1.0};
    CHECK_THAT(exact_sum(pts, spec, c), WithinRel(ref_matrix(pts, spec).sum(), 1e-12));
  }
}

TEST_CASE("exact_sum consumes exactly n(n-1)/2 + n evaluations", "[oracle]") {
  EvalCounter c;
  const auto pts = random_points(17, 2, 1.0, 6);
  exact_sum(pts, KernelSpec{KernelFamily::gaussian, 1.0}, c);
  CHECK(c.count() == 17 * 16 / 2 + 17);
}

TEST_CASE("exact_mvm matches the reference product and costs n^2", "[oracle]") {
  EvalCounter c;
  const auto pts = random_points(128, 2, 1.5, 7);
  const KernelSpec spec{KernelFamily::exponential, 1.2};
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(pts.n());
  for (auto& v : x) v = u(rng);

  const auto y = exact_mvm(pts, spec, x, c);
  CHECK(c.count() == 128 * 128);

  const Eigen::VectorXd ref =
      ref_matrix(pts, spec) * Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  for (std::size_t i = 0; i < y.size(); ++i) CHECK_THAT(y[i], WithinRel(ref(i), 1e-12));
}

TEST_CASE("exact_mvm degenerate instances", "[oracle]") {
  EvalCounter c;
  const KernelSpec spec{KernelFamily::gaussian, 1.0};
  std::vector<double> e1{1.0, 0.0, 0.0, 0.0, 0.0};

  const auto far = exact_mvm(spread_points(5), spec, e1, c);
  for (std::size_t i = 0; i < 5; ++i) CHECK_THAT(far[i], WithinAbs(e1[i], 1e-12));

  const auto ones = exact_mvm(identical_points(5, 2), spec, e1, c);
  for (double v : ones) CHECK_THAT(v, WithinRel(1.0, 1e-14));

  CHECK_THROWS_AS(exact_mvm(spread_points(5), spec, std::vector<double>{1.0}, c),
                  std::invalid_argument);
}

TEST_CASE("exact_top_eig on closed-form instances", "[oracle]") {
  EvalCounter c;
  const KernelSpec spec{KernelFamily::gaussian, 1.0};

  SECTION("identical points give lambda1 = n and a uniform vector") {
    const auto r = exact_top_eig(identical_points(8, 2), spec, c);
    REQUIRE(r.converged);
    CHECK_THAT(r.lambda, WithinRel(8.0, 1e-9));
    for (double v : r.vec) CHECK_THAT(v, WithinRel(1.0 / std::sqrt(8.0), 1e-6));
  }
  SECTION("pairwise-far points give lambda1 close to 1") {
    const auto r = exact_top_eig(spread_points(12), spec, c);
    CHECK_THAT(r.lambda, WithinAbs(1.0, 1e-9));
  }
  SECTION("c duplicated points among far points give lambda1 = c") {
    // 4 copies of one site plus 6 singles, all sites far apart
    std::vector<double> coords;
    for (int i = 0; i < 4; ++i) coords.push_back(0.0);
    for (int i = 1; i <= 6; ++i) coords.push_back(1000.0 * i);
    const PointSet pts(10, 1, std::move(coords));
    const auto r = exact_top_eig(pts, spec, c);
    CHECK_THAT(r.lambda, WithinAbs(4.0, 1e-8));
  }
}

TEST_CASE("exact_top_eig agrees with a dense eigensolver", "[oracle]") {
  EvalCounter c;
  for (auto fam : {KernelFamily::gaussian, KernelFamily::rational_quadratic}) {
    const KernelSpec spec{fam, 1.0, 1.0};
    const auto pts = random_points(40, 2, 0.8, 21 + static_cast<int>(fam));
    const auto r = exact_top_eig(pts, spec, c, 1e-12, 20000);
    REQUIRE(r.converged);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ref_matrix(pts, spec));
    CHECK_THAT(r.lambda, WithinRel(es.eigenvalues().maxCoeff(), 1e-7));

    // unit norm, entrywise non-negative
    double norm_sq = 0.0;
    for (double v : r.vec) {
      CHECK(v >= 0.0);
      norm_sq += v * v;
    }
    CHECK_THAT(std::sqrt(norm_sq), WithinAbs(1.0, 1e-10));
  }
}
