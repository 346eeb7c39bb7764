#pragma once

// Simplified fast Gauss transform: deterministic additive-error density
// evaluation for the gaussian kernel in low dimension.  The factorization
//   exp(-||q-p||^2) = exp(-||u||^2) exp(-||v||^2) exp(2 u.v),
// with u = q - c and v = p - c recentered at a cell center c, turns each
// cell's contribution into a dot product between query features and
// precomputed per-cell moment tensors, so queries cost arithmetic only and
// zero kernel evaluations.

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "kermat/core.hpp"

namespace kermat {

// Smallest r with sum_{j>r} window^j / j! <= budget.  Long-double term
// accumulation; the residue past the scan horizon is bounded geometrically.
inline int taylor_tail_order(double window, double budget) {
  if (!(window >= 0.0) || !std::isfinite(window))
    throw std::invalid_argument("taylor_tail_order: bad window");
  if (!(budget > 0.0)) throw std::invalid_argument("taylor_tail_order: bad budget");
  if (window == 0.0) return 0;
  std::vector<long double> terms;
  terms.push_back(1.0L);  // window^0 / 0!
  const long double w = window;
  std::size_t j = 0;
  // extend until terms are decaying and far below budget
  while (true) {
    ++j;
    terms.push_back(terms.back() * w / static_cast<long double>(j));
    if (j > window && terms.back() < static_cast<long double>(budget) * 1e-9L) break;
    if (j > 1000000) throw std::runtime_error("taylor_tail_order: order cap exceeded");
  }
  // geometric bound on everything past the scan horizon (ratio < 1/2 holds since j > 2*window is implied by the decay test for any sane budget)
  const long double ratio = w / static_cast<long double>(j + 1);
  long double tail = ratio < 1.0L ? terms.back() * ratio / (1.0L - ratio) : 0.0L;
  for (std::size_t r = terms.size(); r-- > 0;) {
    // invariant: tail == sum_{j>r} term_j
    if (tail > static_cast<long double>(budget))
      return static_cast<int>(r + 1);  // r fails, r+1 was the smallest that fit
    tail += terms[r];
  }
  return 0;
}

// Truncation order for exp(x) on the window |x| <= 10*ln(1/eps) with
// remainder at most eps/2.
inline int taylor_order(double eps) {
  if (!(eps > 0.0) || !(eps < 1.0)) throw std::invalid_argument("taylor_order: eps must be in (0,1)");
  return taylor_tail_order(10.0 * std::log(1.0 / eps), eps / 2.0);
}

namespace detail {

// All multi-indices alpha in d variables with |alpha| <= max_degree, graded by
// degree.  Each entry extends its parent by +1 in one coordinate, so monomial
// vectors evaluate with one multiply per entry.
struct MultiIndexTable {
  std::size_t d = 0;
  int max_degree = 0;
  std::vector<std::uint32_t> parent;    // index of alpha - e_coord
  std::vector<std::uint16_t> coord;     // which coordinate was incremented
  std::vector<double> inv_factorial;    // 1 / alpha!
  std::vector<std::uint32_t> deg_begin; // deg_begin[r] .. deg_begin[r+1) = degree-r slice

  MultiIndexTable(std::size_t d_, int max_degree_) : d(d_), max_degree(max_degree_) {
    if (d == 0) throw std::invalid_argument("MultiIndexTable: d must be >= 1");
    if (max_degree < 0) throw std::invalid_argument("MultiIndexTable: negative degree");
    // grow degree by degree; min_coord keeps generation duplicate-free:
    // a child may only increment coordinates >= the last incremented one
    std::vector<std::uint16_t> min_coord;
    parent.push_back(0);
    coord.push_back(0);
    inv_factorial.push_back(1.0);
    min_coord.push_back(0);
    deg_begin = {0, 1};
    std::vector<std::uint16_t> last_exponent{0};  // exponent value in `coord` after the increment
    for (int r = 1; r <= max_degree; ++r) {
      const std::uint32_t lo = deg_begin[r - 1], hi = deg_begin[r];
      for (std::uint32_t p = lo; p < hi; ++p) {
        for (std::size_t k = min_coord[p]; k < d; ++k) {
          const std::uint16_t e =
              (r > 1 && k == coord[p]) ? static_cast<std::uint16_t>(last_exponent[p] + 1) : 1;
          parent.push_back(p);
          coord.push_back(static_cast<std::uint16_t>(k));
          inv_factorial.push_back(inv_factorial[p] / static_cast<double>(e));
          min_coord.push_back(static_cast<std::uint16_t>(k));
          last_exponent.push_back(e);
          if (parent.size() > (1u << 27))
            throw std::runtime_error("MultiIndexTable: monomial count cap exceeded");
        }
      }
      deg_begin.push_back(static_cast<std::uint32_t>(parent.size()));
    }
  }

  std::size_t size() const { return parent.size(); }

  // out[i] = prod_k v[coord path]  (the monomial v^alpha_i)
  void monomials(std::span<const double> v, std::vector<double>& out) const {
    out.resize(size());
    out[0] = 1.0;
    for (std::size_t i = 1; i < size(); ++i) out[i] = out[parent[i]] * v[coord[i]];
  }
};

}  // namespace detail

// Feature maps with X(q,r) . Y(p,r) = (q.p)^r exactly; the multinomial
// coefficient r!/alpha! sits entirely on the X side.
inline std::vector<double> monomial_features_y(std::span<const double> p, int r) {
  detail::MultiIndexTable table(p.size(), r);
  std::vector<double> mono;
  table.monomials(p, mono);
  return std::vector<double>(mono.begin() + table.deg_begin[r], mono.begin() + table.deg_begin[r + 1]);
}

inline std::vector<double> monomial_features_x(std::span<const double> q, int r) {
  detail::MultiIndexTable table(q.size(), r);
  std::vector<double> mono;
  table.monomials(q, mono);
  double r_fact = 1.0;
  for (int j = 2; j <= r; ++j) r_fact *= j;
  std::vector<double> out(mono.begin() + table.deg_begin[r], mono.begin() + table.deg_begin[r + 1]);
  for (std::uint32_t i = table.deg_begin[r]; i < table.deg_begin[r + 1]; ++i)
    out[i - table.deg_begin[r]] *= r_fact * table.inv_factorial[i];
  return out;
}

// Deterministic gaussian-kernel density estimator with additive error
// eps_additive.  Geometry in bandwidth-scaled space with L = ln(1/eps):
// cells of diameter sqrt(L), queries search the ball of radius sqrt(L),
// points beyond it are discarded (their kernel value is below eps), and the
// Taylor order covers the recentered window |2 u.v| <= 1.5 L with tail budget
// eps/4, so |query - exact mean| < eps deterministically.
class FgtEstimator {
 public:
  FgtEstimator(const PointSet& pts, const KernelSpec& spec, double eps_additive,
               std::span<const std::uint32_t> targets = {})
      : d_(pts.d()), eps_(eps_additive) {
    if (spec.family != KernelFamily::gaussian)
      throw std::invalid_argument("FgtEstimator: gaussian kernel only");
    spec.validate();
    if (!(eps_ > 0.0) || !(eps_ < 1.0))
      throw std::invalid_argument("FgtEstimator: eps_additive must be in (0,1)");
    const double inv_sigma = 1.0 / spec.bandwidth;
    L_ = std::log(1.0 / eps_);
    side_ = std::sqrt(L_ / static_cast<double>(d_));
    radius_ = std::sqrt(L_);
    r_max_ = taylor_tail_order(1.5 * L_, eps_ / 4.0);
    table_ = std::make_unique<detail::MultiIndexTable>(d_, r_max_);

    std::vector<std::uint32_t> all;
    if (targets.empty()) {
      all.resize(pts.n());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
      targets = all;
    }
    m_ = targets.size();

    std::vector<double> scaled(d_), v(d_), mono;
    std::vector<std::int64_t> key(d_);
    for (std::uint32_t idx : targets) {
      auto p = pts.row(idx);
      for (std::size_t k = 0; k < d_; ++k) scaled[k] = p[k] * inv_sigma;
      cell_key(scaled, key);
      Cell& cell = cells_[key];
      if (cell.moments.empty()) {
        cell.moments.assign(table_->size(), 0.0);
        cell.center.resize(d_);
        for (std::size_t k = 0; k < d_; ++k)
          cell.center[k] = (static_cast<double>(key[k]) + 0.5) * side_;
      }
      double vnorm2 = 0.0;
      for (std::size_t k = 0; k < d_; ++k) {
        v[k] = scaled[k] - cell.center[k];
        vnorm2 += v[k] * v[k];
      }
      const double w = std::exp(-vnorm2);
      table_->monomials(v, mono);
      for (std::size_t i = 0; i < mono.size(); ++i) cell.moments[i] += w * mono[i];
      ++cell.count;
    }
    inv_sigma_ = inv_sigma;
  }

  // mean kernel density of q against the targets; always >= 0
  double query(std::span<const double> q) const {
    if (q.size() != d_) throw std::invalid_argument("FgtEstimator::query: dimension mismatch");
    std::vector<double> qs(d_);
    for (std::size_t k = 0; k < d_; ++k) qs[k] = q[k] * inv_sigma_;
    std::vector<std::int64_t> lo(d_), hi(d_), key(d_);
    for (std::size_t k = 0; k < d_; ++k) {
      lo[k] = static_cast<std::int64_t>(std::floor((qs[k] - radius_) / side_));
      hi[k] = static_cast<std::int64_t>(std::floor((qs[k] + radius_) / side_));
    }
    double acc = 0.0;
    std::vector<double> u(d_), feat;
    key = lo;
    while (true) {
      auto it = cells_.find(key);
      if (it != cells_.end() && box_intersects_ball(key, qs)) {
        const Cell& cell = it->second;
        double unorm2 = 0.0;
        for (std::size_t k = 0; k < d_; ++k) {
          u[k] = 2.0 * (qs[k] - cell.center[k]);
          unorm2 += (qs[k] - cell.center[k]) * (qs[k] - cell.center[k]);
        }
        table_->monomials(u, feat);
        double dotp = 0.0;
        const auto& invf = table_->inv_factorial;
        for (std::size_t i = 0; i < feat.size(); ++i) dotp += feat[i] * invf[i] * cell.moments[i];
        acc += std::exp(-unorm2) * dotp;
      }
      // advance the mixed-radix counter over the candidate box
      std::size_t k = 0;
      for (; k < d_; ++k) {
        if (++key[k] <= hi[k]) break;
        key[k] = lo[k];
      }
      if (k == d_) break;
    }
    const double mean = acc / static_cast<double>(m_);
    return mean > 0.0 ? mean : 0.0;
  }

  std::size_t target_count() const { return m_; }
  std::size_t cell_count() const { return cells_.size(); }
  int truncation_order() const { return r_max_; }
  double cell_side() const { return side_; }
  double eps_additive() const { return eps_; }
  std::size_t stored_points() const {
    std::size_t s = 0;
    for (const auto& [k, c] : cells_) s += c.count;
    return s;
  }

 private:
  struct Cell {
    std::vector<double> center;   // in scaled space
    std::vector<double> moments;  // sum over points of exp(-||v||^2) v^alpha
    std::size_t count = 0;
  };

  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const {
      std::uint64_t h = 0x9e3779b97f4a7c15ull;
      for (std::int64_t v : k) {
        h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      }
      return static_cast<std::size_t>(h);
    }
  };

  void cell_key(std::span<const double> scaled, std::vector<std::int64_t>& key) const {
    for (std::size_t k = 0; k < d_; ++k)
      key[k] = static_cast<std::int64_t>(std::floor(scaled[k] / side_));
  }

  // squared distance from q to the cell box, compared against L
  bool box_intersects_ball(const std::vector<std::int64_t>& key, std::span<const double> qs) const {
    double dist2 = 0.0;
    for (std::size_t k = 0; k < d_; ++k) {
      const double lo = static_cast<double>(key[k]) * side_;
      const double hi = lo + side_;
      double t = 0.0;
      if (qs[k] < lo) t = lo - qs[k];
      else if (qs[k] > hi) t = qs[k] - hi;
      dist2 += t * t;
    }
    return dist2 <= L_;
  }

  std::size_t d_;
  double eps_, L_, side_, radius_, inv_sigma_ = 1.0;
  int r_max_ = 0;
  std::size_t m_ = 0;
  std::unique_ptr<detail::MultiIndexTable> table_;
  std::unordered_map<std::vector<std::int64_t>, Cell, KeyHash> cells_;
};

}  // namespace kermat
