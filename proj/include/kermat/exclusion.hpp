#pragma once

// Dyadic exclusion index: KDE structures over contiguous dyadic blocks of the
// target set so that, for any row i, the sibling blocks along the root-to-leaf
// path partition [0, m) \ {i}.  One KDE query per level therefore estimates
// the off-diagonal row sum s_{o,i} = sum_{j != i} k(x_i, x_j) without ever
// touching entry (i, i).
//
//   level 1:   [0 . . . . M/2) [M/2 . . . . M)
//   level 2:   [0 . M/4) [ . ) [ . ) [ . . M)
//   ...
//   level L:   singletons                       (M = next power of two >= m)
//
// Blocks are truncated to [0, m); blocks entirely inside the padding answer
// zero and are skipped.

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kermat/core.hpp"
#include "kermat/kde.hpp"
#include "kermat/rng.hpp"

namespace kermat {

class DyadicExclusionIndex {
 public:
  struct BlockRef {
    std::size_t level;  // 1-based
    std::size_t begin, end;  // truncated range, may be empty
  };

  DyadicExclusionIndex(KdeBackend backend, const PointSet& pts, const KernelSpec& spec,
                       const KdeConfig& cfg, std::uint64_t seed)
      : pts_(&pts), m_(pts.n()) {
    if (m_ < 2) throw std::invalid_argument("DyadicExclusionIndex: need at least 2 points");
    big_m_ = 1;
    levels_ = 0;
    while (big_m_ < m_) {
      big_m_ <<= 1;
      ++levels_;
    }
    blocks_.resize(levels_);
    std::uint64_t stream = 0;
    for (std::size_t level = 1; level <= levels_; ++level) {
      const std::size_t width = big_m_ >> level;
      const std::size_t count = std::size_t{1} << level;
      auto& row = blocks_[level - 1];
      row.resize(count);
      for (std::size_t b = 0; b < count; ++b) {
        const std::size_t begin = b * width;
        const std::size_t end = std::min(begin + width, m_);
        if (begin >= m_) continue;  // block fully inside padding
        std::vector<std::uint32_t> targets(end - begin);
        for (std::size_t k = 0; k < targets.size(); ++k)
          targets[k] = static_cast<std::uint32_t>(begin + k);
        row[b] = kde_build(backend, pts, spec, cfg, std::move(targets), derive_seed(seed, stream));
        ++stream;
      }
    }
  }

  // estimate of s_{o,i}: size-weighted KDE answers of the sibling blocks
  double query(std::size_t i, EvalCounter& counter) const {
    if (i >= m_) throw std::out_of_range("DyadicExclusionIndex::query: row out of range");
    const auto q = pts_->row(i);
    double acc = 0.0;
    for (std::size_t level = 1; level <= levels_; ++level) {
      const std::size_t width = big_m_ >> level;
      const std::size_t sibling = (i / width) ^ 1u;
      const auto& est = blocks_[level - 1][sibling];
      if (!est) continue;
      acc += static_cast<double>(est->target_count()) * est->query(q, counter);
    }
    return acc;
  }

  std::size_t levels() const { return levels_; }
  std::size_t size() const { return m_; }

  // truncated sibling ranges summed for row i, in level order (tests)
  std::vector<BlockRef> sibling_blocks(std::size_t i) const {
    std::vector<BlockRef> out;
    for (std::size_t level = 1; level <= levels_; ++level) {
      const std::size_t width = big_m_ >> level;
      const std::size_t sibling = (i / width) ^ 1u;
      const std::size_t begin = sibling * width;
      out.push_back({level, std::min(begin, m_), std::min(begin + width, m_)});
    }
    return out;
  }

  std::size_t estimator_count() const {
    std::size_t c = 0;
    for (const auto& row : blocks_)
      for (const auto& e : row)
        if (e) ++c;
    return c;
  }

 private:
  const PointSet* pts_;
  std::size_t m_, big_m_ = 1, levels_ = 0;
  std::vector<std::vector<std::unique_ptr<KdeEstimator>>> blocks_;
};

}  // namespace kermat
