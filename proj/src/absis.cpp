#include "sitstd/absis.hpp"

#include <algorithm>
#include <cmath>

#include "sitstd/error.hpp"

namespace sitstd::absis {

std::string_view to_string(DegeneratePolicy p) {
  return p == DegeneratePolicy::Invalidate ? "invalidate" : "constant";
}

DegeneratePolicy parse_degenerate_policy(std::string_view name) {
  if (name == "constant") return DegeneratePolicy::BestConstant;
  if (name == "invalidate") return DegeneratePolicy::Invalidate;
  throw Error(ErrorKind::InvalidArgument, "unknown degenerate-regression policy '" + std::string(name) + "'");
}

void AbsisConfig::validate() const {
  if (window < 3 || window % 2 == 0)
    throw Error(ErrorKind::InvalidArgument, "regression window must be odd and >= 3, got " + std::to_string(window));
  if (baseline_before < 1 || baseline_after < 1)
    throw Error(ErrorKind::InvalidArgument, "baseline counts must be at least 1");
}

std::vector<MaskedImage> capture_pattern(const ImageSeries& series) {
  if (series.empty()) throw Error(ErrorKind::EmptyInput, "pattern capture needs a non-empty series");
  const Grid& grid = series.grid();
  std::vector<MaskedImage> pattern;
  for (std::size_t b = 0; b < series.bands().size(); ++b) {
    MaskedImage p(grid, 0.0, false);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& e : series.entries()) {
        if (!e.bands[b].valid(i)) continue;
        sum += e.bands[b].value(i);
        ++n;
      }
      if (n > 0) p.set(i, sum / static_cast<double>(n));
    }
    pattern.push_back(std::move(p));
  }
  return pattern;
}

AnomalyDecomposition decompose(const ImageSeries& series, const std::vector<MaskedImage>& pattern) {
  if (pattern.size() != series.bands().size())
    throw Error(ErrorKind::DimensionMismatch, "pattern has " + std::to_string(pattern.size()) + " bands, series has " +
                                                  std::to_string(series.bands().size()));
  for (const auto& p : pattern) require_same_grid(p.grid(), series.grid(), "decompose");
  AnomalyDecomposition out{pattern, ImageSeries(series.grid(), series.bands())};
  for (const auto& e : series.entries()) {
    std::vector<MaskedImage> anomalies;
    for (std::size_t b = 0; b < e.bands.size(); ++b) anomalies.push_back(subtract(e.bands[b], pattern[b]));
    out.anomalies.append(e.date, std::move(anomalies));
  }
  return out;
}

ImageSeries reproject_anomalies(const AnomalyDecomposition& decomposition, const Grid& target,
                                const AbsisConfig& config) {
  ImageSeries out(target, decomposition.anomalies.bands());
  for (const auto& e : decomposition.anomalies.entries()) {
    std::vector<MaskedImage> bands;
    for (const auto& a : e.bands) bands.push_back(reproject(a, target, config.resampler));
    out.append(e.date, std::move(bands));
  }
  return out;
}

namespace {

struct WindowStats {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double sxx = 0.0;  // sums of centered products
  double syy = 0.0;
  double sxy = 0.0;
  bool x_flat = false;
  bool y_flat = false;
};

// Centered second moments of two complete windows; nullopt when the window
// leaves the image or touches an invalid pixel in either image.
std::optional<WindowStats> window_stats(const MaskedImage& x, const MaskedImage& y, std::size_t row, std::size_t col,
                                        std::size_t window) {
  const std::size_t half = window / 2;
  if (row < half || col < half || row + half >= x.rows() || col + half >= x.cols()) return std::nullopt;
  const std::size_t r0 = row - half, c0 = col - half;
  double sx = 0.0, sy = 0.0, max_x = 0.0, max_y = 0.0;
  for (std::size_t r = r0; r < r0 + window; ++r) {
    for (std::size_t c = c0; c < c0 + window; ++c) {
      if (!x.valid(r, c) || !y.valid(r, c)) return std::nullopt;
      sx += x.value(r, c);
      sy += y.value(r, c);
      max_x = std::max(max_x, std::abs(x.value(r, c)));
      max_y = std::max(max_y, std::abs(y.value(r, c)));
    }
  }
  const double n = static_cast<double>(window * window);
  WindowStats s;
  s.mean_x = sx / n;
  s.mean_y = sy / n;
  for (std::size_t r = r0; r < r0 + window; ++r) {
    for (std::size_t c = c0; c < c0 + window; ++c) {
      const double dx = x.value(r, c) - s.mean_x;
      const double dy = y.value(r, c) - s.mean_y;
      s.sxx += dx * dx;
      s.syy += dy * dy;
      s.sxy += dx * dy;
    }
  }
  // Zero variance up to rounding: the window's spread is below 1e-12 of its
  // magnitude.
  s.x_flat = std::sqrt(s.sxx / n) <= 1e-12 * max_x;
  s.y_flat = std::sqrt(s.syy / n) <= 1e-12 * max_y;
  return s;
}

}  // namespace

MaskedImage windowed_correlation(const MaskedImage& target, const MaskedImage& baseline, std::size_t window) {
  require_same_grid(target.grid(), baseline.grid(), "windowed correlation");
  if (window == 0 || window % 2 == 0)
    throw Error(ErrorKind::InvalidArgument, "correlation window must be odd, got " + std::to_string(window));
  MaskedImage out(target.grid(), 0.0, false);
  for (std::size_t r = 0; r < target.rows(); ++r) {
    for (std::size_t c = 0; c < target.cols(); ++c) {
      const auto s = window_stats(baseline, target, r, c, window);
      if (!s || s->x_flat || s->y_flat) continue;
      out.set(r, c, std::clamp(s->sxy / std::sqrt(s->sxx * s->syy), -1.0, 1.0));
    }
  }
  return out;
}

SelectionMask select_optimal(std::span<const MaskedImage> correlation_maps) {
  if (correlation_maps.empty()) throw Error(ErrorKind::EmptyInput, "optimal-date selection needs at least one map");
  const Grid& grid = correlation_maps.front().grid();
  for (const auto& m : correlation_maps) require_same_grid(m.grid(), grid, "selection");
  SelectionMask sel{std::vector<int>(grid.size(), -1), MaskedImage(grid, 0.0, false)};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t k = 0; k < correlation_maps.size(); ++k) {
      const auto& m = correlation_maps[k];
      if (!m.valid(i)) continue;
      if (sel.date_index[i] < 0 || m.value(i) > sel.best_rho.value(i)) {
        sel.date_index[i] = static_cast<int>(k);
        sel.best_rho.set(i, m.value(i));
      }
    }
  }
  return sel;
}

LocalRegressionField fit_local_regression(const MaskedImage& target, std::span<const MaskedImage> candidates,
                                          const SelectionMask& selection, std::size_t window,
                                          DegeneratePolicy policy) {
  if (window == 0 || window % 2 == 0)
    throw Error(ErrorKind::InvalidArgument, "regression window must be odd, got " + std::to_string(window));
  const Grid& grid = target.grid();
  for (const auto& c : candidates) require_same_grid(c.grid(), grid, "local regression");
  if (selection.date_index.size() != grid.size())
    throw Error(ErrorKind::DimensionMismatch, "selection mask does not match the target grid");

  LocalRegressionField field{MaskedImage(grid, 0.0, false), MaskedImage(grid, 0.0, false),
                             std::vector<std::uint8_t>(grid.size(), 0)};
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      const std::size_t i = r * grid.cols + c;
      if (!selection.valid(i)) continue;
      const auto k = static_cast<std::size_t>(selection.date_index[i]);
      if (k >= candidates.size())
        throw Error(ErrorKind::InvalidArgument, "selection refers to candidate " + std::to_string(k) + " of " +
                                                    std::to_string(candidates.size()));
      const auto s = window_stats(candidates[k], target, r, c, window);
      if (!s) continue;
      if (s->x_flat) {
        field.degenerate[i] = 1;
        if (policy == DegeneratePolicy::Invalidate) continue;
        field.slope.set(i, 0.0);
        field.intercept.set(i, s->mean_y);
        continue;
      }
      const double slope = s->sxy / s->sxx;
      field.slope.set(i, slope);
      field.intercept.set(i, s->mean_y - slope * s->mean_x);
    }
  }
  return field;
}

MaskedImage predict_anomaly(const LocalRegressionField& field, std::span<const MaskedImage> baseline_anomalies,
                            const SelectionMask& selection) {
  const Grid& grid = field.slope.grid();
  require_same_grid(field.intercept.grid(), grid, "prediction");
  for (const auto& a : baseline_anomalies) require_same_grid(a.grid(), grid, "prediction");
  if (selection.date_index.size() != grid.size())
    throw Error(ErrorKind::DimensionMismatch, "selection mask does not match the regression field");
  MaskedImage out(grid, 0.0, false);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!selection.valid(i) || !field.slope.valid(i) || !field.intercept.valid(i)) continue;
    const auto k = static_cast<std::size_t>(selection.date_index[i]);
    if (k >= baseline_anomalies.size() || !baseline_anomalies[k].valid(i)) continue;
    out.set(i, field.intercept.value(i) + field.slope.value(i) * baseline_anomalies[k].value(i));
  }
  return out;
}

MaskedImage rebuild(const MaskedImage& pattern, const MaskedImage& anomaly) {
  require_same_grid(pattern.grid(), anomaly.grid(), "rebuild");
  return add(pattern, anomaly);
}

std::vector<Date> select_baseline(const ImageSeries& coarse, const ImageSeries& aggregated_fine, Date target,
                                  const AbsisConfig& config) {
  config.validate();
  if (!coarse.find(target)) throw Error(ErrorKind::NotFound, "target date " + target.iso() + " not in the coarse series");
  std::vector<Date> before, after;
  for (const auto& e : coarse.entries()) {
    if (e.date == target || !aggregated_fine.find(e.date)) continue;
    (e.date < target ? before : after).push_back(e.date);
  }
  if (before.size() < config.baseline_before || after.size() < config.baseline_after)
    throw Error(ErrorKind::BaselineUnavailable,
                "baseline unavailable for " + target.iso() + ": need " + std::to_string(config.baseline_before) +
                    " dates before and " + std::to_string(config.baseline_after) + " after, found " +
                    std::to_string(before.size()) + " and " + std::to_string(after.size()));
  std::vector<Date> baseline(before.end() - static_cast<std::ptrdiff_t>(config.baseline_before), before.end());
  baseline.insert(baseline.end(), after.begin(), after.begin() + static_cast<std::ptrdiff_t>(config.baseline_after));
  return baseline;
}

StandardizedImage absis_standardize(const ImageSeries& coarse, const ImageSeries& aggregated_fine, Date target,
                                    const AbsisConfig& config) {
  config.validate();
  if (coarse.bands().size() != aggregated_fine.bands().size())
    throw Error(ErrorKind::DimensionMismatch, "coarse and aggregated-fine series carry different band counts");
  const std::vector<Date> baseline = select_baseline(coarse, aggregated_fine, target, config);

  const ImageSeries coarse_baseline = coarse.subset(baseline);
  const ImageSeries fine_baseline = aggregated_fine.subset(baseline);
  const std::vector<MaskedImage> coarse_pattern = capture_pattern(coarse_baseline);
  const std::vector<MaskedImage> fine_pattern = capture_pattern(fine_baseline);

  std::vector<Date> coarse_dates = baseline;
  coarse_dates.push_back(target);
  const AnomalyDecomposition coarse_decomp = decompose(coarse.subset(coarse_dates), coarse_pattern);
  const ImageSeries reprojected = reproject_anomalies(coarse_decomp, aggregated_fine.grid(), config);
  const AnomalyDecomposition fine_decomp = decompose(fine_baseline, fine_pattern);

  StandardizedImage out;
  out.target = target;
  out.baseline = baseline;
  const SeriesEntry& target_anomaly = reprojected.at(target);
  for (std::size_t b = 0; b < coarse.bands().size(); ++b) {
    std::vector<MaskedImage> coarse_anomalies, fine_anomalies, maps;
    for (Date d : baseline) {
      coarse_anomalies.push_back(reprojected.at(d).bands[b]);
      fine_anomalies.push_back(fine_decomp.anomalies.at(d).bands[b]);
    }
    for (const auto& a : coarse_anomalies)
      maps.push_back(windowed_correlation(target_anomaly.bands[b], a, config.window));

    SelectionMask selection = select_optimal(maps);
    LocalRegressionField field =
        fit_local_regression(target_anomaly.bands[b], coarse_anomalies, selection, config.window, config.degenerate);
    const MaskedImage predicted = predict_anomaly(field, fine_anomalies, selection);
    out.bands.push_back(rebuild(fine_pattern[b], predicted));
    out.diagnostics.push_back({std::move(selection), std::move(field), coarse_pattern[b], fine_pattern[b]});
  }
  return out;
}

}  // namespace sitstd::absis
