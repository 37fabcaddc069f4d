#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sitstd/raster.hpp"

namespace sitstd::metrics {

// Sample Pearson correlation over jointly valid pixels. nullopt when fewer
// than three pixels overlap or either side has zero variance.
std::optional<double> try_pearson(const MaskedImage& a, const MaskedImage& b);
// Same, but throws UndefinedMetric for degenerate inputs.
double pearson(const MaskedImage& a, const MaskedImage& b);

// Root mean square difference over the N jointly valid pixels.
double rmse(const MaskedImage& pred, const MaskedImage& ref);

// Roberts cross magnitude over the forward 2x2 neighbourhood:
//   sqrt((v[r,c] - v[r+1,c+1])^2 + (v[r+1,c] - v[r,c+1])^2)
// Valid only where all four pixels are valid; last row and column invalid.
MaskedImage roberts_edge_feature(const MaskedImage& img);

// Per-pixel normalized feature difference (S_pred - S_ref) / (S_pred + S_ref)
// at pixels where both features are valid and the denominator is non-zero.
// Negative values mean the prediction carries less edge energy than the
// reference (over-smoothing), positive values more (over-sharpening).
MaskedImage edge_difference(const MaskedImage& ref, const MaskedImage& pred);

// Mean of edge_difference over pixels whose predicted feature exceeds the
// 90th percentile (nearest rank) of the predicted feature.
double edge_accuracy(const MaskedImage& ref, const MaskedImage& pred);

inline constexpr double kEdgePercentile = 90.0;

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (1-based).
double nearest_rank_percentile(std::vector<double> values, double percent);

struct BandSummary {
  double mean = 0.0;
  double mean_abs = 0.0;
};

BandSummary band_average(std::span<const double> values);

enum class Metric { Rho, Rmse, Edge };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view name);
double evaluate(Metric m, const MaskedImage& pred, const MaskedImage& ref);

struct MetricReport {
  Metric metric = Metric::Rho;
  std::string method;
  std::string date;
  std::vector<std::string> inputs;
  std::vector<std::pair<std::string, double>> per_band;

  BandSummary summary() const;
};

// One CSV line per band plus `mean` (and `mean_abs` for edge) summary rows:
//   date,method,band,metric,value
std::string to_csv(std::span<const MetricReport> reports);

// Date x method table of band averages with a closing Mean row, one block per
// metric; edge blocks close with Mean(|.|).
std::string to_table(std::span<const MetricReport> reports);

}  // namespace sitstd::metrics
