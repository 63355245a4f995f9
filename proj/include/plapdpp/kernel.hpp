#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <thread>
#include <vector>

#include "plapdpp/averages.hpp"
#include "plapdpp/geometry.hpp"

namespace plapdpp {

/// Worker count for sweeps: PLAPDPP_THREADS if set (>= 1), else 1.
inline unsigned sweep_threads() {
  if (const char* s = std::getenv("PLAPDPP_THREADS")) {
    const long n = std::strtol(s, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return 1;
}

/// Evaluates a midpoint ball average at every Interior and Collar node of a layout.
///
/// The discrete ball is a union of lattice rows along the last axis, each a
/// centred window of some half width w. For every source row, running window
/// max / min / sum for w = 0..R are built incrementally and scattered to the
/// target rows that read them, which costs O(R) per node instead of O(R^d).
/// Targets are processed in ascending source order, so results do not depend
/// on the number of workers.
template <std::size_t D>
class BallKernel {
  static_assert(D >= 2, "rows need at least two axes");

 public:
  BallKernel(const LatticeField<D>& layout, const Averager<D>& avg)
      : layout_(&layout), avg_(&avg) {
    if (!avg.average().is_midpoint_mix())
      throw Error(ErrorKind::InvalidInput, "ball kernel needs a midpoint ball average");
    n_ = layout.extents()[D - 1];
    rows_ = layout.dense_size() / n_;
    radius_ = avg.ball().radius();

    // Row offsets (first D-1 components) with their half widths.
    std::map<std::array<std::int64_t, D - 1>, std::int64_t> widths;
    for (const auto& a : avg.ball().offsets()) {
      std::array<std::int64_t, D - 1> key{};
      for (std::size_t i = 0; i + 1 < D; ++i) key[i] = a[i];
      auto& w = widths[key];
      w = std::max(w, std::abs(a[D - 1]));
    }
    by_width_.assign(static_cast<std::size_t>(radius_ + 1), {});
    for (const auto& [key, w] : widths) {
      RowOffset r;
      for (std::size_t i = 0; i + 1 < D; ++i) r.delta[i] = key[i];
      by_width_[static_cast<std::size_t>(w)].push_back(r);
    }

    // Active span of every row.
    span_lo_.assign(rows_, std::numeric_limits<std::size_t>::max());
    span_hi_.assign(rows_, 0);
    auto mark = [&](std::size_t lin) {
      const std::size_t r = lin / n_;
      const std::size_t c = lin % n_;
      span_lo_[r] = std::min(span_lo_[r], c);
      span_hi_[r] = std::max(span_hi_[r], c);
    };
    for (std::size_t lin : layout.interior()) mark(lin);
    for (std::size_t lin : layout.collar()) mark(lin);
  }

  /// out[lin] = A[in](lin) for every Interior and Collar node; other entries are untouched.
  void apply(const double* in, double* out, unsigned threads = 1) const {
    const std::size_t slabs = layout_->extents()[0];
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(slabs)));
    if (tmax_.size() != layout_->dense_size()) {
      tmax_.assign(layout_->dense_size(), 0.0);
      tmin_.assign(layout_->dense_size(), 0.0);
      tsum_.assign(layout_->dense_size(), 0.0);
    }
    if (threads == 1) {
      run(in, out, 0, slabs);
      return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t lo = slabs * t / threads;
      const std::size_t hi = slabs * (t + 1) / threads;
      pool.emplace_back([this, in, out, lo, hi] { run(in, out, lo, hi); });
    }
    for (auto& th : pool) th.join();
  }

 private:
  struct RowOffset {
    std::array<std::int64_t, D> delta{};  // only the first D-1 entries are used
  };

  // Position of the row of `row` shifted by -delta, or -1 if it leaves the box.
  std::int64_t target_row(std::size_t row, const RowOffset& off) const {
    if constexpr (D == 1) {
      (void)off;
      return static_cast<std::int64_t>(row);
    } else {
      const auto& ext = layout_->extents();
      const auto& stride = layout_->strides();
      std::size_t rest = row * n_;
      std::int64_t target = 0;
      for (std::size_t i = 0; i + 1 < D; ++i) {
        const auto c = static_cast<std::int64_t>(rest / stride[i]);
        rest %= stride[i];
        const std::int64_t tc = c - off.delta[i];
        if (tc < 0 || tc >= static_cast<std::int64_t>(ext[i])) return -1;
        target += tc * static_cast<std::int64_t>(stride[i] / n_);
      }
      return target;
    }
  }

  // Processes the target rows whose first coordinate lies in [slab_lo, slab_hi).
  void run(const double* in, double* out, std::size_t slab_lo, std::size_t slab_hi) const {
    std::vector<double> wmax(n_), wmin(n_), wsum(n_);
    const std::size_t rows_per_slab = rows_ / layout_->extents()[0];
    const std::size_t row_lo = slab_lo * rows_per_slab;
    const std::size_t row_hi = slab_hi * rows_per_slab;
    const bool need_minmax = avg_->uses_midrange();
    const bool need_sum = avg_->uses_mean();

    for (std::size_t r = row_lo; r < row_hi; ++r) {
      if (span_lo_[r] > span_hi_[r]) continue;
      for (std::size_t c = span_lo_[r]; c <= span_hi_[r]; ++c) {
        const std::size_t lin = r * n_ + c;
        tmax_[lin] = -std::numeric_limits<double>::infinity();
        tmin_[lin] = std::numeric_limits<double>::infinity();
        tsum_[lin] = 0.0;
      }
    }

    const std::size_t first_source =
        (slab_lo > static_cast<std::size_t>(radius_) ? slab_lo - static_cast<std::size_t>(radius_) : 0) *
        rows_per_slab;
    const std::size_t last_source =
        std::min(layout_->extents()[0], slab_hi + static_cast<std::size_t>(radius_)) * rows_per_slab;
    const auto n = static_cast<std::int64_t>(n_);

    for (std::size_t src = first_source; src < last_source; ++src) {
      const double* a = in + src * n_;
      bool any = false;
      for (std::size_t w = 0; w <= static_cast<std::size_t>(radius_) && !any; ++w)
        for (const auto& off : by_width_[w]) {
          const auto t = target_row(src, off);
          if (t >= 0 && static_cast<std::size_t>(t) >= row_lo &&
              static_cast<std::size_t>(t) < row_hi &&
              span_lo_[static_cast<std::size_t>(t)] <= span_hi_[static_cast<std::size_t>(t)]) {
            any = true;
            break;
          }
        }
      if (!any) continue;

      for (std::int64_t w = 0; w <= radius_; ++w) {
        if (w == 0) {
          for (std::int64_t j = 0; j < n; ++j) {
            wmax[j] = a[j];
            wmin[j] = a[j];
            wsum[j] = a[j];
          }
        } else {
          // Nodes farther than w from both row ends see both new window ends.
          const std::int64_t mid_lo = std::min(w, n);
          const std::int64_t mid_hi = std::max(mid_lo, n - w);
          for (std::int64_t j = 0; j < n; ++j) {
            if (j == mid_lo) j = mid_hi;
            if (j >= n) break;
            const bool has_left = j - w >= 0;
            const bool has_right = j + w < n;
            const double left = has_left ? a[j - w] : a[j];
            const double right = has_right ? a[j + w] : a[j];
            wmax[j] = std::max(wmax[j], std::max(left, right));
            wmin[j] = std::min(wmin[j], std::min(left, right));
            wsum[j] += (has_left ? left : 0.0) + (has_right ? right : 0.0);
          }
          double* mx = wmax.data();
          double* mn = wmin.data();
          double* sm = wsum.data();
          if (need_minmax)
            for (std::int64_t j = mid_lo; j < mid_hi; ++j) {
              mx[j] = std::max(mx[j], std::max(a[j - w], a[j + w]));
              mn[j] = std::min(mn[j], std::min(a[j - w], a[j + w]));
            }
          if (need_sum)
            for (std::int64_t j = mid_lo; j < mid_hi; ++j) sm[j] += a[j - w] + a[j + w];
        }
        for (const auto& off : by_width_[static_cast<std::size_t>(w)]) {
          const auto t = target_row(src, off);
          if (t < 0) continue;
          const auto tr = static_cast<std::size_t>(t);
          if (tr < row_lo || tr >= row_hi || span_lo_[tr] > span_hi_[tr]) continue;
          const std::size_t base = tr * n_;
          const std::size_t c0 = span_lo_[tr];
          const std::size_t c1 = span_hi_[tr] + 1;
          if (need_minmax) {
            double* tx = tmax_.data() + base;
            double* tn = tmin_.data() + base;
            for (std::size_t c = c0; c < c1; ++c) {
              tx[c] = std::max(tx[c], wmax[c]);
              tn[c] = std::min(tn[c], wmin[c]);
            }
          }
          if (need_sum) {
            double* ts = tsum_.data() + base;
            for (std::size_t c = c0; c < c1; ++c) ts[c] += wsum[c];
          }
        }
      }
    }

    const double count = static_cast<double>(avg_->ball().size());
    const auto& cells = layout_->cells();
    for (std::size_t r = row_lo; r < row_hi; ++r) {
      if (span_lo_[r] > span_hi_[r]) continue;
      for (std::size_t c = span_lo_[r]; c <= span_hi_[r]; ++c) {
        const std::size_t lin = r * n_ + c;
        if (cells[lin] != Cell::Interior && cells[lin] != Cell::Collar) continue;
        const double mid = need_minmax ? 0.5 * tmax_[lin] + 0.5 * tmin_[lin] : 0.0;
        const double mean = need_sum ? tsum_[lin] / count : 0.0;
        out[lin] = avg_->combine(mid, mean);
      }
    }
  }

  const LatticeField<D>* layout_;
  const Averager<D>* avg_;
  std::size_t n_ = 0;
  std::size_t rows_ = 0;
  std::int64_t radius_ = 0;
  std::vector<std::vector<RowOffset>> by_width_;
  std::vector<std::size_t> span_lo_;
  std::vector<std::size_t> span_hi_;
  // Accumulators per dense node; workers write disjoint target rows.
  mutable std::vector<double> tmax_;
  mutable std::vector<double> tmin_;
  mutable std::vector<double> tsum_;
};

}  // namespace plapdpp
