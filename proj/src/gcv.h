#pragma once
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace profit {

struct GcvTracePoint {
  double tuning = 0.0;
  double rss = 0.0;
  double edf = 0.0;
  double score = 0.0;
  bool valid = false;
};

struct GcvChoice {
  double tuning = 0.0;
  int index = -1;
  std::vector<GcvTracePoint> trace;
};

// Generalized cross-validation over a tuning grid (bandwidth or penalty
// weight): minimizes n*RSS/(n - tr(H))^2. The grid must be ascending in
// smoothness; ties are broken toward more smoothing (the later entry).
inline GcvChoice gcv_select(const std::vector<double>& grid, int n,
                            const std::function<std::pair<double, double>(double)>& rss_edf) {
  if (grid.empty()) throw std::invalid_argument("gcv: empty tuning grid");
  GcvChoice out;
  out.trace.reserve(grid.size());
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
    GcvTracePoint pt;
    pt.tuning = grid[static_cast<std::size_t>(i)];
    try {
      const auto [rss, edf] = rss_edf(pt.tuning);
      pt.rss = rss;
      pt.edf = edf;
      if (edf < n && std::isfinite(rss)) {
        const double denom = (n - edf) * (n - edf);
        pt.score = n * rss / denom;
        pt.valid = std::isfinite(pt.score);
      }
    } catch (const std::exception&) {
      pt.valid = false;
    }
    if (pt.valid && pt.score <= best) {  // <= ties toward smoother
      best = pt.score;
      out.tuning = pt.tuning;
      out.index = i;
    }
    out.trace.push_back(pt);
  }
  if (out.index < 0) throw std::runtime_error("gcv: grid entirely undersmoothed");
  return out;
}

// Log-spaced grid helper (inclusive endpoints).
inline std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> g(static_cast<std::size_t>(count));
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < count; ++i)
    g[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (count - 1));
  return g;
}

}  // namespace profit
