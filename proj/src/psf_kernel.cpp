#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "sitstd/error.hpp"
#include "sitstd/metrics.hpp"
#include "sitstd/psf.hpp"

namespace sitstd::psf {

void UpscaleParams::validate() const {
  if (!std::isfinite(shift_x) || !std::isfinite(shift_y))
    throw Error(ErrorKind::InvalidArgument, "upscale shifts must be finite: " + describe(*this));
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error(ErrorKind::InvalidArgument, "upscale sigma must be positive: " + describe(*this));
}

std::string describe(const UpscaleParams& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(x=%.4g, y=%.4g, sigma=%.4g)", p.shift_x, p.shift_y, p.sigma);
  return buf;
}

void KernelOptions::validate() const {
  if (!(truncation_radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "truncation radius must be positive");
  if (!(min_valid_fraction >= 0.0) || min_valid_fraction > 1.0)
    throw Error(ErrorKind::InvalidArgument, "minimum valid weight fraction must lie in [0, 1]");
}

double gaussian_density(double distance, double sigma) {
  return std::exp(-distance * distance / (2.0 * sigma * sigma)) / (2.0 * std::numbers::pi * sigma * sigma);
}

namespace {

// Lattice index range [lo, hi] of fine pixel centers within [center - h,
// center + h] along one axis. Indices may fall outside the grid.
struct Span {
  long lo = 0;
  long hi = -1;
};

Span lattice_span(double center, double half_width, double origin, double pixel_size) {
  return {static_cast<long>(std::ceil((center - half_width - origin) / pixel_size - 0.5)),
          static_cast<long>(std::floor((center + half_width - origin) / pixel_size - 0.5))};
}

double lattice_center(long k, double origin, double pixel_size) {
  return origin + (static_cast<double>(k) + 0.5) * pixel_size;
}

void check_overlap(const Grid& fine, const Grid& coarse) {
  const double fx1 = fine.origin_x + static_cast<double>(fine.cols) * fine.pixel_size;
  const double fy1 = fine.origin_y + static_cast<double>(fine.rows) * fine.pixel_size;
  const double cx1 = coarse.origin_x + static_cast<double>(coarse.cols) * coarse.pixel_size;
  const double cy1 = coarse.origin_y + static_cast<double>(coarse.rows) * coarse.pixel_size;
  if (cx1 <= fine.origin_x || coarse.origin_x >= fx1 || cy1 <= fine.origin_y || coarse.origin_y >= fy1)
    throw Error(ErrorKind::Extent, "coarse grid " + describe(coarse) + " does not overlap fine grid " + describe(fine));
}

}  // namespace

WeightMap gaussian_weights(const UpscaleParams& params, Point coarse_center, double coarse_pixel_size,
                           const Grid& fine_grid, std::span<const std::uint8_t> mask, double truncation_radius) {
  params.validate();
  fine_grid.validate();
  if (!(truncation_radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "truncation radius must be positive");
  if (!mask.empty() && mask.size() != fine_grid.size())
    throw Error(ErrorKind::DimensionMismatch, "mask length does not match fine grid");

  const double cx = coarse_center.x + params.shift_x * coarse_pixel_size;
  const double cy = coarse_center.y + params.shift_y * coarse_pixel_size;
  const double sigma_map = params.sigma * coarse_pixel_size;
  const double radius = truncation_radius * sigma_map;
  const double ps = fine_grid.pixel_size;

  WeightMap out;
  double total = 0.0;
  double valid = 0.0;
  const Span rows = lattice_span(cy, radius, fine_grid.origin_y, ps);
  for (long l = rows.lo; l <= rows.hi; ++l) {
    const double dy = lattice_center(l, fine_grid.origin_y, ps) - cy;
    const double h2 = radius * radius - dy * dy;
    if (h2 < 0.0) continue;
    const Span cols = lattice_span(cx, std::sqrt(h2), fine_grid.origin_x, ps);
    const bool row_inside = l >= 0 && l < static_cast<long>(fine_grid.rows);
    for (long k = cols.lo; k <= cols.hi; ++k) {
      const double dx = lattice_center(k, fine_grid.origin_x, ps) - cx;
      const double d = std::sqrt(dx * dx + dy * dy) / coarse_pixel_size;
      const double w = gaussian_density(d, params.sigma);
      total += w;
      if (!row_inside || k < 0 || k >= static_cast<long>(fine_grid.cols)) continue;
      const std::size_t index = static_cast<std::size_t>(l) * fine_grid.cols + static_cast<std::size_t>(k);
      if (!mask.empty() && !mask[index]) continue;
      valid += w;
      out.entries.push_back({index, w});
    }
  }
  if (out.entries.empty() || !(valid > 0.0))
    throw Error(ErrorKind::EmptyKernel, "no valid fine pixel within the truncation radius of the kernel centered at (" +
                                            std::to_string(cx) + ", " + std::to_string(cy) + ")");
  for (auto& e : out.entries) e.weight /= valid;
  out.valid_fraction = valid / total;
  return out;
}

// Separable evaluation of the truncated kernel: for each coarse column the
// horizontal weights are fixed, so per fine row we keep running sums of
// w_x * value and w_x * mask over the column's lattice window, and each
// coarse pixel then reads one interval per fine row inside its disc.
MaskedImage upscale(const MaskedImage& fine, const Grid& coarse_grid, const UpscaleParams& params,
                    const KernelOptions& options) {
  params.validate();
  options.validate();
  coarse_grid.validate();
  if (fine.empty()) throw Error(ErrorKind::EmptyInput, "upscale: empty fine image");
  const Grid& fg = fine.grid();
  check_overlap(fg, coarse_grid);

  const double ps = fg.pixel_size;
  const double cps = coarse_grid.pixel_size;
  const double sigma_map = params.sigma * cps;
  const double radius = options.truncation_radius * sigma_map;
  const double inv_two_var = 1.0 / (2.0 * sigma_map * sigma_map);
  const long fine_rows = static_cast<long>(fg.rows);
  const long fine_cols = static_cast<long>(fg.cols);

  MaskedImage out(coarse_grid, 0.0, false);
  std::vector<double> wx;
  std::vector<double> lattice_prefix;
  std::vector<double> value_prefix;
  std::vector<double> weight_prefix;

  for (std::size_t j = 0; j < coarse_grid.cols; ++j) {
    const double cx = coarse_grid.center(0, j).x + params.shift_x * cps;
    const Span window = lattice_span(cx, radius, fg.origin_x, ps);
    if (window.hi < window.lo) continue;
    const auto width = static_cast<std::size_t>(window.hi - window.lo + 1);

    wx.resize(width);
    lattice_prefix.assign(width + 1, 0.0);
    for (std::size_t t = 0; t < width; ++t) {
      const double dx = lattice_center(window.lo + static_cast<long>(t), fg.origin_x, ps) - cx;
      wx[t] = std::exp(-dx * dx * inv_two_var);
      lattice_prefix[t + 1] = lattice_prefix[t] + wx[t];
    }

    const std::size_t stride = width + 1;
    value_prefix.assign(fg.rows * stride, 0.0);
    weight_prefix.assign(fg.rows * stride, 0.0);
    for (std::size_t r = 0; r < fg.rows; ++r) {
      double* pv = &value_prefix[r * stride];
      double* pw = &weight_prefix[r * stride];
      for (std::size_t t = 0; t < width; ++t) {
        const long k = window.lo + static_cast<long>(t);
        double v = 0.0, w = 0.0;
        if (k >= 0 && k < fine_cols) {
          const std::size_t idx = r * fg.cols + static_cast<std::size_t>(k);
          if (fine.valid(idx)) {
            w = wx[t];
            v = w * fine.value(idx);
          }
        }
        pv[t + 1] = pv[t] + v;
        pw[t + 1] = pw[t] + w;
      }
    }

    for (std::size_t i = 0; i < coarse_grid.rows; ++i) {
      const double cy = coarse_grid.center(i, j).y + params.shift_y * cps;
      const Span rows = lattice_span(cy, radius, fg.origin_y, ps);
      double total = 0.0, valid_weight = 0.0, weighted = 0.0;
      for (long l = rows.lo; l <= rows.hi; ++l) {
        const double dy = lattice_center(l, fg.origin_y, ps) - cy;
        const double h2 = radius * radius - dy * dy;
        if (h2 < 0.0) continue;
        const Span cols = lattice_span(cx, std::sqrt(h2), fg.origin_x, ps);
        const long a = std::max(cols.lo, window.lo) - window.lo;
        const long b = std::min(cols.hi, window.hi) - window.lo;
        if (a > b) continue;
        const double wy = std::exp(-dy * dy * inv_two_var);
        total += wy * (lattice_prefix[static_cast<std::size_t>(b + 1)] - lattice_prefix[static_cast<std::size_t>(a)]);
        if (l < 0 || l >= fine_rows) continue;
        const std::size_t base = static_cast<std::size_t>(l) * stride;
        weighted += wy * (value_prefix[base + static_cast<std::size_t>(b + 1)] - value_prefix[base + static_cast<std::size_t>(a)]);
        valid_weight +=
            wy * (weight_prefix[base + static_cast<std::size_t>(b + 1)] - weight_prefix[base + static_cast<std::size_t>(a)]);
      }
      if (!(valid_weight > 0.0) || !(total > 0.0)) continue;
      if (valid_weight / total < options.min_valid_fraction) continue;
      out.set(i, j, weighted / valid_weight);
    }
  }
  return out;
}

std::optional<double> try_objective(const MaskedImage& fine, const MaskedImage& coarse, const UpscaleParams& params,
                                    const KernelOptions& options) {
  return metrics::try_pearson(upscale(fine, coarse.grid(), params, options), coarse);
}

double pairwise_objective(const MaskedImage& fine, const MaskedImage& coarse, const UpscaleParams& params,
                          const KernelOptions& options) {
  auto rho = try_objective(fine, coarse, params, options);
  if (!rho)
    throw Error(ErrorKind::UndefinedObjective,
                "objective undefined at " + describe(params) + ": fewer than 3 joint pixels or zero variance");
  return *rho;
}

}  // namespace sitstd::psf
