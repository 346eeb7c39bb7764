#include <kermat/fgt.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

using namespace kermat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// independent oracle: smallest r with sum_{j>r} w^j/j! <= budget
int ref_tail_order(double w, double budget) {
  if (w == 0.0) return 0;
  std::vector<long double> terms{1.0L};
  while (terms.back() > 1e-38L || terms.size() < static_cast<std::size_t>(w) + 2)
    terms.push_back(terms.back() * w / static_cast<long double>(terms.size()));
  for (int r = 0; r < static_cast<int>(terms.size()); ++r) {
    long double tail = 0.0L;
    for (std::size_t j = terms.size(); j-- > static_cast<std::size_t>(r) + 1;) tail += terms[j];
    if (tail <= static_cast<long double>(budget)) return r;
  }
  return static_cast<int>(terms.size());
}

double ref_gaussian_mean(const PointSet& pts, double sigma, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pts.n(); ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double t = (q[k] - pts.row(i)[k]) / sigma;
      sq += t * t;
    }
    acc += std::exp(-sq);
  }
  return acc / static_cast<double>(pts.n());
}

PointSet clustered_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> which(0, 2);
  const double centers[3] = {-3.0, 0.0, 3.5};
  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = centers[which(rng)];
    for (std::size_t k = 0; k < d; ++k) coords[i * d + k] = c + g(rng);
  }
  return PointSet(n, d, std::move(coords));
}

}  // namespace

TEST_CASE("taylor_order matches the direct remainder-sum oracle", "[fgt]") {
  for (double eps : {0.5, 1e-2, 1e-4}) {
    const double window = 10.0 * std::log(1.0 / eps);
    CHECK(taylor_order(eps) == ref_tail_order(window, eps / 2.0));
  }
}

TEST_CASE("taylor_order near eps = 1 needs almost no terms", "[fgt]") {
  CHECK(taylor_order(0.999999) <= 1);
  CHECK_THROWS_AS(taylor_order(0.0), std::invalid_argument);
  CHECK_THROWS_AS(taylor_order(1.0), std::invalid_argument);
}

TEST_CASE("taylor_tail_order returns the smallest sufficient order", "[fgt]") {
  for (double w : {0.5, 3.0, 7.0, 20.0}) {
    for (double budget : {0.25, 1e-3, 1e-6}) {
      const int r = taylor_tail_order(w, budget);
      CHECK(r == ref_tail_order(w, budget));
    }
  }
  CHECK(taylor_tail_order(0.0, 0.5) == 0);
}

TEST_CASE("monomial feature maps factor dot-product powers", "[fgt]") {
  SECTION("d=1, r=2") {
    const std::vector<double> q{3.0}, p{-2.0};
    const auto X = monomial_features_x(q, 2);
    const auto Y = monomial_features_y(p, 2);
    REQUIRE(X.size() == 1);
    REQUIRE(Y.size() == 1);
    CHECK_THAT(X[0] * Y[0], WithinRel(36.0, 1e-12));  // (qp)^2
  }
  SECTION("r=0 gives [1]") {
    const std::vector<double> q{1.0, 2.0, 3.0};
    const auto X = monomial_features_x(q, 0);
    const auto Y = monomial_features_y(q, 0);
    REQUIRE(X.size() == 1);
    REQUIRE(Y.size() == 1);
    CHECK(X[0] * Y[0] == 1.0);
  }
  SECTION("random d=2, r=3 equals (q.p)^3") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
      const std::vector<double> q{u(rng), u(rng)}, p{u(rng), u(rng)};
      const auto X = monomial_features_x(q, 3);
      const auto Y = monomial_features_y(p, 3);
      REQUIRE(X.size() == Y.size());
      double dot = 0.0;
      for (std::size_t i = 0; i < X.size(); ++i) dot += X[i] * Y[i];
      const double qp = q[0] * p[0] + q[1] * p[1];
      CHECK_THAT(dot, WithinRel(qp * qp * qp, 1e-10));
    }
  }
  SECTION("higher dimension and degree") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::vector<double> q{u(rng), u(rng), u(rng), u(rng)};
    const std::vector<double> p{u(rng), u(rng), u(rng), u(rng)};
    for (int r : {1, 4, 6}) {
      const auto X = monomial_features_x(q, r);
      const auto Y = monomial_features_y(p, r);
      double dot = 0.0;
      for (std::size_t i = 0; i < X.size(); ++i) dot += X[i] * Y[i];
      double qp = 0.0;
      for (std::size_t k = 0; k < 4; ++k) qp += q[k] * p[k];
      CHECK_THAT(dot, WithinRel(std::pow(qp, r), 1e-10));
    }
  }
}

TEST_CASE("multi-index table slices have multiset-coefficient sizes", "[fgt]") {
  // number of degree-r monomials in d variables is C(d+r-1, r)
  const detail::MultiIndexTable table(3, 4);
  const std::size_t expect[5] = {1, 3, 6, 10, 15};
  for (int r = 0; r <= 4; ++r)
    CHECK(table.deg_begin[r + 1] - table.deg_begin[r] == expect[r]);
}

TEST_CASE("fgt cells conserve the point count", "[fgt]") {
  const auto pts = clustered_points(100, 2, 12);
  const FgtEstimator est(pts, KernelSpec{KernelFamily::gaussian, 1.0}, 1e-2);
  CHECK(est.cell_count() >= 1);
  CHECK(est.stored_points() == 100);
  CHECK(est.target_count() == 100);
}

TEST_CASE("fgt discards a point beyond the search radius", "[fgt]") {
  // single target at squared distance >= log(1/eps): true density <= eps,
  // the transform may drop the cell entirely, so the estimate is within eps
  const double eps = 1e-2;
  const PointSet pts(1, 2, {0.0, 0.0});
  const FgtEstimator est(pts, KernelSpec{KernelFamily::gaussian, 1.0}, eps);
  const double r = std::sqrt(std::log(1.0 / eps)) + 0.05;
  const std::vector<double> q{r, 0.0};
  const double truth = std::exp(-r * r);
  CHECK(std::abs(est.query(q) - truth) <= eps);
}

TEST_CASE("fgt rejects non-gaussian kernels and bad eps", "[fgt]") {
  const PointSet pts(1, 1, {0.0});
  CHECK_THROWS_AS(FgtEstimator(pts, KernelSpec{KernelFamily::laplacian, 1.0}, 1e-2),
                  std::invalid_argument);
  CHECK_THROWS_AS(FgtEstimator(pts, KernelSpec{KernelFamily::gaussian, 1.0}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("fgt meets its additive error bound deterministically", "[fgt]") {
  for (std::size_t d : {std::size_t{1}, std::size_t{2}, std::size_t{3}}) {
    for (double eps : {1e-2, 1e-4}) {
      const std::size_t n = d == 3 ? 400 : 1000;
      const auto pts = clustered_points(n, d, 100 + d);
      const FgtEstimator est(pts, KernelSpec{KernelFamily::gaussian, 1.0}, eps);
      double worst = 0.0;
      for (std::size_t i = 0; i < pts.n(); ++i) {
        const double got = est.query(pts.row(i));
        const double truth = ref_gaussian_mean(pts, 1.0, pts.row(i));
        worst = std::max(worst, std::abs(got - truth));
      }
      INFO("d=" << d << " eps=" << eps << " worst=" << worst);
      CHECK(worst <= eps);
    }
  }
}

TEST_CASE("fgt respects the bandwidth", "[fgt]") {
  const double sigma = 0.6, eps = 1e-3;
  const auto pts = clustered_points(500, 2, 31);
  const FgtEstimator est(pts, KernelSpec{KernelFamily::gaussian, sigma}, eps);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int t = 0; t < 50; ++t) {
    const std::vector<double> q{u(rng), u(rng)};
    CHECK(std::abs(est.query(q) - ref_gaussian_mean(pts, sigma, q)) <= eps);
  }
}

TEST_CASE("fgt works over a target subset", "[fgt]") {
  const auto pts = clustered_points(60, 1, 33);
  const std::vector<std::uint32_t> targets{0, 5, 10, 15, 20};
  const FgtEstimator est(pts, KernelSpec{KernelFamily::gaussian, 1.0}, 1e-3, targets);
  CHECK(est.target_count() == 5);
  const auto sub = PointSet::gather(pts, targets);
  const std::vector<double> q{0.3};
  CHECK(std::abs(est.query(q) - ref_gaussian_mean(sub, 1.0, q)) <= 1e-3);
}
