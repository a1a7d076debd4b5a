#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ugc_sentinel/projection.hpp"
#include "ugc_sentinel/provenance.hpp"

namespace ugcs {

// One matched pair's "disinformation embedding": the difference between the
// disinformative and authentic vectors, with its 2-D projection.
struct DisinfoPoint {
  std::string pair_id;
  std::vector<double> diff;
  double x = 0.0;
  double y = 0.0;
  double weight = 1.0;
};

struct PairedEmbedding {
  std::string pair_id;
  std::vector<double> authentic;
  std::vector<double> disinfo;
};

inline std::vector<DisinfoPoint> diff_points(
    const std::vector<PairedEmbedding>& pairs, const Projector& projector) {
  std::vector<DisinfoPoint> out;
  out.reserve(pairs.size());
  for (const auto& pe : pairs) {
    if (pe.authentic.size() != pe.disinfo.size())
      throw ValidationError("diff_points: dimension mismatch for pair " +
                            pe.pair_id);
    DisinfoPoint p;
    p.pair_id = pe.pair_id;
    p.diff.resize(pe.authentic.size());
    for (std::size_t i = 0; i < p.diff.size(); ++i)
      p.diff[i] = pe.disinfo[i] - pe.authentic[i];
    const auto [x, y] = projector.project(p.diff);
    p.x = x;
    p.y = y;
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<std::vector<double>> diff_vectors(
    const std::vector<PairedEmbedding>& pairs) {
  std::vector<std::vector<double>> out;
  out.reserve(pairs.size());
  for (const auto& pe : pairs) {
    if (pe.authentic.size() != pe.disinfo.size())
      throw ValidationError("diff_vectors: dimension mismatch for pair " +
                            pe.pair_id);
    std::vector<double> d(pe.authentic.size());
    for (std::size_t i = 0; i < d.size(); ++i)
      d[i] = pe.disinfo[i] - pe.authentic[i];
    out.push_back(std::move(d));
  }
  return out;
}

// --------------------------------------------------------------------------
// Extreme pairs along a projected axis: the exemplar-selection rule behind
// the appendix tables. Ties break on pair_id.

struct ExtremePairs {
  std::vector<std::string> top;     // largest coordinates, descending
  std::vector<std::string> bottom;  // smallest coordinates, ascending
};

inline ExtremePairs extreme_pairs(const std::vector<DisinfoPoint>& points,
                                  int axis, std::size_t k = 3) {
  if (axis != 1 && axis != 2)
    throw ValidationError("extreme_pairs: axis must be 1 or 2");
  if (points.size() < 2 * k)
    throw ValidationError("extreme_pairs: need at least 2k points");
  std::vector<const DisinfoPoint*> sorted;
  sorted.reserve(points.size());
  for (const auto& p : points) sorted.push_back(&p);
  auto coord = [axis](const DisinfoPoint* p) { return axis == 1 ? p->x : p->y; };
  std::sort(sorted.begin(), sorted.end(),
            [&](const DisinfoPoint* a, const DisinfoPoint* b) {
              if (coord(a) != coord(b)) return coord(a) < coord(b);
              return a->pair_id < b->pair_id;
            });
  ExtremePairs out;
  for (std::size_t i = 0; i < k; ++i)
    out.bottom.push_back(sorted[i]->pair_id);
  for (std::size_t i = 0; i < k; ++i)
    out.top.push_back(sorted[sorted.size() - 1 - i]->pair_id);
  return out;
}

// --------------------------------------------------------------------------
// Weighted kernel density estimate on a regular grid. The grid integral
// approximates the total weight; bandwidth defaults to Scott's rule.

struct GridParams {
  std::size_t nx = 100;
  std::size_t ny = 100;
  // Optional overrides; auto-derived otherwise.
  std::optional<double> xmin, xmax, ymin, ymax;
  std::optional<double> bandwidth_x, bandwidth_y;
};

struct DensityGrid {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  std::size_t nx = 0, ny = 0;
  double hx = 0, hy = 0;
  std::vector<double> values;  // row-major, y outer, cell centers

  double at(std::size_t ix, std::size_t iy) const {
    return values[iy * nx + ix];
  }
  double cell_area() const {
    return (xmax - xmin) / static_cast<double>(nx) *
           (ymax - ymin) / static_cast<double>(ny);
  }
  double integral() const {
    double s = 0.0;
    for (const double v : values) s += v;
    return s * cell_area();
  }
};

namespace kde_detail {

inline double weighted_sigma(const std::vector<double>& xs,
                             const std::vector<double>& ws, double wsum) {
  double mean = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mean += ws[i] * xs[i];
  mean /= wsum;
  double var = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - mean;
    var += ws[i] * d * d;
  }
  return std::sqrt(var / wsum);
}

}  // namespace kde_detail

// Weights are typically max(delta_p, 0): the detector's probability gain on
// the disinformative variant. Points with zero weight contribute nothing;
// a run where every weight is zero is an error.
inline DensityGrid density_grid(const std::vector<DisinfoPoint>& points,
                                const std::vector<double>& weights,
                                const GridParams& params = {}) {
  if (points.size() != weights.size())
    throw ValidationError("density_grid: weights must align with points");
  double wsum = 0.0, w2sum = 0.0;
  for (const double w : weights) {
    if (!std::isfinite(w) || w < 0)
      throw ValidationError("density_grid: weights must be finite and >= 0");
    wsum += w;
    w2sum += w * w;
  }
  if (wsum <= 0.0) throw ValidationError("density_grid: all weights zero");

  std::vector<double> xs, ys, ws;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    xs.push_back(points[i].x);
    ys.push_back(points[i].y);
    ws.push_back(weights[i]);
  }

  // Scott's rule in two dimensions: h = sigma * n_eff^(-1/6).
  const double n_eff = wsum * wsum / w2sum;
  double hx = params.bandwidth_x.value_or(0.0);
  double hy = params.bandwidth_y.value_or(0.0);
  if (hx <= 0.0) {
    const double sx = kde_detail::weighted_sigma(xs, ws, wsum);
    hx = sx > 0 ? sx * std::pow(n_eff, -1.0 / 6.0) : 1.0;
  }
  if (hy <= 0.0) {
    const double sy = kde_detail::weighted_sigma(ys, ws, wsum);
    hy = sy > 0 ? sy * std::pow(n_eff, -1.0 / 6.0) : 1.0;
  }

  auto minmax = [](const std::vector<double>& v) {
    double lo = v[0], hi = v[0];
    for (const double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    return std::pair<double, double>{lo, hi};
  };
  const auto [x_lo, x_hi] = minmax(xs);
  const auto [y_lo, y_hi] = minmax(ys);

  DensityGrid grid;
  grid.nx = params.nx;
  grid.ny = params.ny;
  grid.hx = hx;
  grid.hy = hy;
  grid.xmin = params.xmin.value_or(x_lo - 4.0 * hx);
  grid.xmax = params.xmax.value_or(x_hi + 4.0 * hx);
  grid.ymin = params.ymin.value_or(y_lo - 4.0 * hy);
  grid.ymax = params.ymax.value_or(y_hi + 4.0 * hy);
  if (grid.xmax <= grid.xmin || grid.ymax <= grid.ymin)
    throw ValidationError("density_grid: degenerate extents");
  grid.values.assign(grid.nx * grid.ny, 0.0);

  const double dx = (grid.xmax - grid.xmin) / static_cast<double>(grid.nx);
  const double dy = (grid.ymax - grid.ymin) / static_cast<double>(grid.ny);
  const double norm = 1.0 / (2.0 * 3.14159265358979323846 * hx * hy);
  for (std::size_t iy = 0; iy < grid.ny; ++iy) {
    const double cy = grid.ymin + (static_cast<double>(iy) + 0.5) * dy;
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      const double cx = grid.xmin + (static_cast<double>(ix) + 0.5) * dx;
      double v = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double ux = (cx - xs[i]) / hx;
        const double uy = (cy - ys[i]) / hy;
        v += ws[i] * std::exp(-0.5 * (ux * ux + uy * uy));
      }
      grid.values[iy * grid.nx + ix] = v * norm;
    }
  }
  return grid;
}

inline void write_density_csv(const DensityGrid& grid, const std::string& path,
                              const Provenance* prov = nullptr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("write_density_csv: cannot write " + path);
  if (prov != nullptr) os << prov->comment_line();
  os << "x,y,density\n";
  const double dx = (grid.xmax - grid.xmin) / static_cast<double>(grid.nx);
  const double dy = (grid.ymax - grid.ymin) / static_cast<double>(grid.ny);
  char buf[128];
  for (std::size_t iy = 0; iy < grid.ny; ++iy) {
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      const double cx = grid.xmin + (static_cast<double>(ix) + 0.5) * dx;
      const double cy = grid.ymin + (static_cast<double>(iy) + 0.5) * dy;
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", cx, cy,
                    grid.at(ix, iy));
      os << buf;
    }
  }
}

}  // namespace ugcs
