#pragma once

// Synthetic instance generators.
//
// "Far" points sit on a scaled integer lattice whose spacing makes every
// off-diagonal kernel value at most 1e-16 (often exactly 0 in double), so
// K is the identity up to checkable slack.  Collapsing chosen indices onto
// shared sites then plants known structure: a single duplicate group of size
// c contributes exactly c(c-1) off-diagonal mass, and a far-separated group
// acts as an all-ones block with top eigenvalue c, giving closed-form ground
// truth at any scale.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "kermat/core.hpp"
#include "kermat/rng.hpp"

namespace kermat {

// Lattice spacing guaranteeing off-diagonal kernel values <= 1e-16.
// Exponential-type families decay like exp(-(dist/sigma)^p), so a fixed
// multiple of sigma suffices; the rational-quadratic family decays
// polynomially and needs spacing sigma * 10^(8/beta).
inline double far_spacing(const KernelSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case KernelFamily::gaussian:
    case KernelFamily::exponential:
    case KernelFamily::laplacian:
      return 120.0 * spec.bandwidth;
    case KernelFamily::rational_quadratic:
      return spec.bandwidth * std::sqrt(std::pow(10.0, 16.0 / spec.beta));
  }
  throw std::logic_error("far_spacing: unknown family");
}

namespace detail {

// m distinct lattice sites in d dimensions, shuffled, scaled by `spacing`
inline std::vector<std::vector<double>> far_sites(std::size_t m, std::size_t d, double spacing,
                                                  Rng& rng) {
  if (m == 0) return {};
  std::size_t side = static_cast<std::size_t>(
      std::ceil(std::pow(static_cast<double>(m), 1.0 / static_cast<double>(d))));
  side = std::max<std::size_t>(side, 1);
  auto capacity = [&](std::size_t s) {
    double c = 1.0;
    for (std::size_t i = 0; i < d; ++i) c *= static_cast<double>(s);
    return c;
  };
  while (capacity(side) < static_cast<double>(m)) ++side;

  std::vector<std::vector<double>> sites(m, std::vector<double>(d));
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t rem = i;  // mixed-radix decode of the site index
    for (std::size_t k = 0; k < d; ++k) {
      sites[i][k] = spacing * static_cast<double>(rem % side);
      rem /= side;
    }
  }
  std::shuffle(sites.begin(), sites.end(), rng);
  return sites;
}

}  // namespace detail

// n pairwise-far points: K is the identity up to off-diagonal slack <= 1e-16
inline PointSet gen_far_points(std::size_t n, std::size_t d, const KernelSpec& spec, Rng& rng) {
  if (n == 0 || d == 0) throw std::invalid_argument("gen_far_points: n and d must be positive");
  const auto sites = detail::far_sites(n, d, far_spacing(spec), rng);
  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i)
    std::copy(sites[i].begin(), sites[i].end(), coords.begin() + i * d);
  return PointSet(n, d, std::move(coords));
}

struct DuplicateInstance {
  PointSet points;
  std::vector<std::uint32_t> duplicates;  // indices sharing one site (possibly empty)

  // off-diagonal kernel mass is |duplicates| * (|duplicates| - 1) up to slack
  double expected_sum() const {
    const double c = static_cast<double>(duplicates.size());
    return static_cast<double>(points.n()) + c * (c - 1.0);
  }
};

// Far points with ceil(sqrt(2 C n)) random indices collapsed onto a shared
// site, planting an off-diagonal mass of about 2 C n.
inline DuplicateInstance gen_duplicate_instance(std::size_t n, std::size_t d, double C,
                                                const KernelSpec& spec, Rng& rng) {
  if (C < 0.0) throw std::invalid_argument("gen_duplicate_instance: C must be >= 0");
  const double dup_want = std::ceil(std::sqrt(2.0 * C * static_cast<double>(n)));
  if (dup_want > static_cast<double>(n))
    throw std::invalid_argument("gen_duplicate_instance: duplicate group exceeds n (need 2C <= n)");
  PointSet pts = gen_far_points(n, d, spec, rng);
  const std::size_t dup = static_cast<std::size_t>(dup_want);
  DuplicateInstance out{std::move(pts), {}};
  if (dup >= 2) {
    out.duplicates = sample_without_replacement(n, dup, rng);
    const std::uint32_t anchor = out.duplicates.front();
    std::vector<double> site(out.points.row(anchor).begin(), out.points.row(anchor).end());
    for (std::uint32_t idx : out.duplicates) {
      auto row = out.points.row_mut(idx);
      std::copy(site.begin(), site.end(), row.begin());
    }
  }
  return out;
}

// Far-separated groups of exactly duplicated points plus far singles.  The
// kernel matrix is block-diagonal up to 1e-16 slack: an all-ones block per
// group and an identity on the singles, so lambda1 = max group size and the
// quadratic form has the closed form below.
struct ClusteredInstance {
  PointSet points;
  std::vector<std::vector<std::uint32_t>> clusters;  // each of size >= 2
  std::vector<std::uint32_t> singles;

  double lambda1() const {
    double best = singles.empty() && clusters.empty() ? 0.0 : (singles.empty() ? 0.0 : 1.0);
    for (const auto& c : clusters) best = std::max(best, static_cast<double>(c.size()));
    return best;
  }

  // z' K z = sum_groups (sum_i z_i)^2 + sum_singles z_i^2, an O(n) oracle
  double rayleigh(std::span<const double> z) const {
    double acc = 0.0;
    for (const auto& c : clusters) {
      double s = 0.0;
      for (std::uint32_t i : c) s += z[i];
      acc += s * s;
    }
    for (std::uint32_t i : singles) acc += z[i] * z[i];
    return acc;
  }
};

inline ClusteredInstance gen_duplicate_clusters(std::size_t d, std::span<const std::size_t> sizes,
                                                std::size_t n_singles, const KernelSpec& spec,
                                                Rng& rng) {
  if (d == 0) throw std::invalid_argument("gen_duplicate_clusters: d must be positive");
  std::size_t n = n_singles;
  for (std::size_t s : sizes) {
    if (s < 2) throw std::invalid_argument("gen_duplicate_clusters: cluster sizes must be >= 2");
    n += s;
  }
  if (n == 0) throw std::invalid_argument("gen_duplicate_clusters: empty instance");
  const std::size_t m = sizes.size() + n_singles;  // one site per group, one per single
  const auto sites = detail::far_sites(m, d, far_spacing(spec), rng);

  // interleave group members and singles in shuffled index order
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> coords(n * d);
  std::vector<std::vector<std::uint32_t>> clusters;
  std::vector<std::uint32_t> singles;
  std::size_t cursor = 0, site_idx = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g, ++site_idx) {
    std::vector<std::uint32_t> members;
    members.reserve(sizes[g]);
    for (std::size_t k = 0; k < sizes[g]; ++k) {
      const std::uint32_t row = order[cursor++];
      members.push_back(row);
      std::copy(sites[site_idx].begin(), sites[site_idx].end(), coords.begin() + row * d);
    }
    std::sort(members.begin(), members.end());
    clusters.push_back(std::move(members));
  }
  for (std::size_t k = 0; k < n_singles; ++k, ++site_idx) {
    const std::uint32_t row = order[cursor++];
    singles.push_back(row);
    std::copy(sites[site_idx].begin(), sites[site_idx].end(), coords.begin() + row * d);
  }
  std::sort(singles.begin(), singles.end());
  return ClusteredInstance{PointSet(n, d, std::move(coords)), std::move(clusters),
                           std::move(singles)};
}

// k far-separated centers with centered gaussian jitter; point i joins
// cluster i mod k, so cluster sizes are fixed by n and k.
inline PointSet gen_gaussian_mixture(std::size_t n, std::size_t d, std::size_t k,
                                     double separation, double noise, Rng& rng) {
  if (n == 0 || d == 0 || k == 0)
    throw std::invalid_argument("gen_gaussian_mixture: n, d, k must be positive");
  if (!(separation >= 0.0) || !(noise >= 0.0))
    throw std::invalid_argument("gen_gaussian_mixture: separation and noise must be >= 0");
  const auto centers = detail::far_sites(k, d, separation, rng);
  std::normal_distribution<double> gauss(0.0, noise > 0.0 ? noise : 1e-300);
  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centers[i % k];
    for (std::size_t j = 0; j < d; ++j)
      coords[i * d + j] = c[j] + (noise > 0.0 ? gauss(rng) : 0.0);
  }
  return PointSet(n, d, std::move(coords));
}

}  // namespace kermat
