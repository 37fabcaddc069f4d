#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sitstd/raster.hpp"

namespace sitstd::absis {

// What to do at a pixel whose selected predictor window has zero variance.
enum class DegeneratePolicy {
  BestConstant,  // slope 0, intercept = target window mean
  Invalidate,    // leave the pixel invalid
};

std::string_view to_string(DegeneratePolicy p);
DegeneratePolicy parse_degenerate_policy(std::string_view name);

struct AbsisConfig {
  std::size_t window = 5;  // odd, >= 3, aggregated-fine pixels
  std::size_t baseline_before = 3;
  std::size_t baseline_after = 3;
  Resampler resampler = Resampler::Bilinear;
  DegeneratePolicy degenerate = DegeneratePolicy::BestConstant;

  void validate() const;
};

// Pixel-wise temporal pattern plus per-date anomalies (image - pattern).
struct AnomalyDecomposition {
  std::vector<MaskedImage> pattern;  // one per band
  ImageSeries anomalies;
};

// Per-band mean over the dates at which each pixel is valid; invalid where no
// date is valid.
std::vector<MaskedImage> capture_pattern(const ImageSeries& series);

AnomalyDecomposition decompose(const ImageSeries& series, const std::vector<MaskedImage>& pattern);

// Resamples every anomaly onto `target` with the configured resampler.
ImageSeries reproject_anomalies(const AnomalyDecomposition& decomposition, const Grid& target,
                                const AbsisConfig& config);

// Pearson correlation of the window x window neighbourhoods centered at each
// pixel. Invalid when either window is incomplete (masked or outside the
// image) or has zero variance.
MaskedImage windowed_correlation(const MaskedImage& target, const MaskedImage& baseline, std::size_t window);

// Per-pixel argmax over candidate dates; ties go to the earliest date.
struct SelectionMask {
  std::vector<int> date_index;  // -1 where no candidate was valid
  MaskedImage best_rho;

  bool valid(std::size_t i) const noexcept { return date_index[i] >= 0; }
};

SelectionMask select_optimal(std::span<const MaskedImage> correlation_maps);

// Local OLS of target windows on the selected date's windows.
struct LocalRegressionField {
  MaskedImage intercept;
  MaskedImage slope;
  std::vector<std::uint8_t> degenerate;  // 1 where the degenerate policy applied
};

LocalRegressionField fit_local_regression(const MaskedImage& target, std::span<const MaskedImage> candidates,
                                          const SelectionMask& selection, std::size_t window,
                                          DegeneratePolicy policy = DegeneratePolicy::BestConstant);

// intercept + slope * (anomaly of the selected date) at every pixel.
MaskedImage predict_anomaly(const LocalRegressionField& field, std::span<const MaskedImage> baseline_anomalies,
                            const SelectionMask& selection);

MaskedImage rebuild(const MaskedImage& pattern, const MaskedImage& anomaly);

// Baseline dates for `target`: the last `before` dates preceding it and the
// first `after` dates following it among dates present in both series.
std::vector<Date> select_baseline(const ImageSeries& coarse, const ImageSeries& aggregated_fine, Date target,
                                  const AbsisConfig& config);

struct BandDiagnostics {
  SelectionMask selection;
  LocalRegressionField field;
  MaskedImage coarse_pattern;      // P_C on the coarse grid
  MaskedImage aggregated_pattern;  // P on the aggregated-fine grid
};

struct StandardizedImage {
  Date target;
  std::vector<Date> baseline;
  std::vector<MaskedImage> bands;
  std::vector<BandDiagnostics> diagnostics;
};

// Full pipeline for one target date; bands are processed independently.
StandardizedImage absis_standardize(const ImageSeries& coarse, const ImageSeries& aggregated_fine, Date target,
                                    const AbsisConfig& config = {});

}  // namespace sitstd::absis
