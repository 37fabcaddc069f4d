#include "sitstd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "sitstd/error.hpp"

namespace sitstd::metrics {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::optional<double> try_pearson(const MaskedImage& a, const MaskedImage& b) {
  require_same_grid(a.grid(), b.grid(), "pearson");
  double sa = 0.0, sb = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a.valid(i) || !b.valid(i)) continue;
    sa += a.value(i);
    sb += b.value(i);
    ++n;
  }
  if (n < 3) return std::nullopt;
  const double ma = sa / static_cast<double>(n);
  const double mb = sb / static_cast<double>(n);
  double cov = 0.0, va = 0.0, vb = 0.0, max_a = 0.0, max_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a.valid(i) || !b.valid(i)) continue;
    const double da = a.value(i) - ma;
    const double db = b.value(i) - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
    max_a = std::max(max_a, std::abs(a.value(i)));
    max_b = std::max(max_b, std::abs(b.value(i)));
  }
  // A constant input leaves rounding residue in the centered sums; treat a
  // spread below 1e-12 of the magnitude as zero variance.
  const double nd = static_cast<double>(n);
  if (!(std::sqrt(va / nd) > 1e-12 * max_a) || !(std::sqrt(vb / nd) > 1e-12 * max_b)) return std::nullopt;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

double pearson(const MaskedImage& a, const MaskedImage& b) {
  auto rho = try_pearson(a, b);
  if (!rho)
    throw Error(ErrorKind::UndefinedMetric, "pearson: fewer than 3 jointly valid pixels or zero variance");
  return *rho;
}

double rmse(const MaskedImage& pred, const MaskedImage& ref) {
  require_same_grid(pred.grid(), ref.grid(), "rmse");
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred.valid(i) || !ref.valid(i)) continue;
    const double d = pred.value(i) - ref.value(i);
    ss += d * d;
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::UndefinedMetric, "rmse: no jointly valid pixels");
  return std::sqrt(ss / static_cast<double>(n));
}

MaskedImage roberts_edge_feature(const MaskedImage& img) {
  if (img.rows() < 2 || img.cols() < 2)
    throw Error(ErrorKind::DimensionMismatch, "roberts edge needs at least 2x2 pixels, got " +
                                                  std::to_string(img.rows()) + "x" + std::to_string(img.cols()));
  MaskedImage out(img.grid(), 0.0, false);
  for (std::size_t r = 0; r + 1 < img.rows(); ++r) {
    for (std::size_t c = 0; c + 1 < img.cols(); ++c) {
      if (!img.valid(r, c) || !img.valid(r + 1, c + 1) || !img.valid(r + 1, c) || !img.valid(r, c + 1)) continue;
      const double d1 = img.value(r, c) - img.value(r + 1, c + 1);
      const double d2 = img.value(r + 1, c) - img.value(r, c + 1);
      out.set(r, c, std::sqrt(d1 * d1 + d2 * d2));
    }
  }
  return out;
}

MaskedImage edge_difference(const MaskedImage& ref, const MaskedImage& pred) {
  require_same_grid(ref.grid(), pred.grid(), "edge");
  const MaskedImage s_ref = roberts_edge_feature(ref);
  const MaskedImage s_pred = roberts_edge_feature(pred);
  MaskedImage out(ref.grid(), 0.0, false);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!s_ref.valid(i) || !s_pred.valid(i)) continue;
    const double den = s_pred.value(i) + s_ref.value(i);
    if (den == 0.0) continue;
    out.set(i, (s_pred.value(i) - s_ref.value(i)) / den);
  }
  return out;
}

double nearest_rank_percentile(std::vector<double> values, double percent) {
  if (values.empty()) throw Error(ErrorKind::UndefinedMetric, "percentile of an empty set");
  if (!(percent > 0.0) || percent > 100.0) throw Error(ErrorKind::InvalidArgument, "percentile must lie in (0, 100]");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(percent / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

double edge_accuracy(const MaskedImage& ref, const MaskedImage& pred) {
  require_same_grid(ref.grid(), pred.grid(), "edge");
  const MaskedImage s_ref = roberts_edge_feature(ref);
  const MaskedImage s_pred = roberts_edge_feature(pred);

  std::vector<double> support;
  for (std::size_t i = 0; i < s_pred.size(); ++i)
    if (s_pred.valid(i) && s_ref.valid(i)) support.push_back(s_pred.value(i));
  if (support.empty()) throw Error(ErrorKind::UndefinedMetric, "edge: no jointly valid feature pixels");
  const double threshold = nearest_rank_percentile(std::move(support), kEdgePercentile);

  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < s_pred.size(); ++i) {
    if (!s_pred.valid(i) || !s_ref.valid(i) || !(s_pred.value(i) > threshold)) continue;
    const double den = s_pred.value(i) + s_ref.value(i);
    if (den == 0.0) continue;
    sum += (s_pred.value(i) - s_ref.value(i)) / den;
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::UndefinedMetric, "edge: no pixels above the 90th percentile of the predicted feature");
  return sum / static_cast<double>(n);
}

BandSummary band_average(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "band average of zero bands");
  BandSummary s;
  for (double v : values) {
    s.mean += v;
    s.mean_abs += std::abs(v);
  }
  s.mean /= static_cast<double>(values.size());
  s.mean_abs /= static_cast<double>(values.size());
  return s;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Rho: return "rho";
    case Metric::Rmse: return "rmse";
    case Metric::Edge: return "edge";
  }
  return "rho";
}

Metric parse_metric(std::string_view name) {
  if (name == "rho") return Metric::Rho;
  if (name == "rmse") return Metric::Rmse;
  if (name == "edge") return Metric::Edge;
  throw Error(ErrorKind::InvalidArgument, "unknown metric '" + std::string(name) + "'");
}

double evaluate(Metric m, const MaskedImage& pred, const MaskedImage& ref) {
  switch (m) {
    case Metric::Rho: return pearson(pred, ref);
    case Metric::Rmse: return rmse(pred, ref);
    case Metric::Edge: return edge_accuracy(ref, pred);
  }
  return 0.0;
}

BandSummary MetricReport::summary() const {
  std::vector<double> v;
  for (const auto& [band, value] : per_band) v.push_back(value);
  return band_average(v);
}

std::string to_csv(std::span<const MetricReport> reports) {
  std::ostringstream os;
  os << "date,method,band,metric,value\n";
  for (const auto& r : reports) {
    const std::string prefix = r.date + "," + r.method + ",";
    const std::string metric(to_string(r.metric));
    for (const auto& [band, value] : r.per_band) os << prefix << band << "," << metric << "," << fmt(value) << "\n";
    if (r.per_band.empty()) continue;
    const BandSummary s = r.summary();
    os << prefix << "mean," << metric << "," << fmt(s.mean) << "\n";
    if (r.metric == Metric::Edge) os << prefix << "mean_abs," << metric << "," << fmt(s.mean_abs) << "\n";
  }
  return os.str();
}

std::string to_table(std::span<const MetricReport> reports) {
  std::ostringstream os;
  for (Metric metric : {Metric::Rho, Metric::Rmse, Metric::Edge}) {
    std::vector<std::string> methods;
    std::map<std::string, std::map<std::string, double>> cells;
    for (const auto& r : reports) {
      if (r.metric != metric || r.per_band.empty()) continue;
      if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
      cells[r.date][r.method] = r.summary().mean;
    }
    if (cells.empty()) continue;
    os << "[" << to_string(metric) << "]\n";
    os << "Date";
    for (const auto& m : methods) os << "\t" << m;
    os << "\n";
    std::map<std::string, std::vector<double>> columns;
    for (const auto& [date, row] : cells) {
      os << date;
      for (const auto& m : methods) {
        auto it = row.find(m);
        if (it == row.end()) {
          os << "\t-";
          continue;
        }
        os << "\t" << fmt4(it->second);
        columns[m].push_back(it->second);
      }
      os << "\n";
    }
    os << (metric == Metric::Edge ? "Mean(|.|)" : "Mean");
    for (const auto& m : methods) {
      const BandSummary s = band_average(columns[m]);
      os << "\t" << fmt4(metric == Metric::Edge ? s.mean_abs : s.mean);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace sitstd::metrics
