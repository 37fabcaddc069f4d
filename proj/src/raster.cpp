#include "sitstd/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>
#include <sstream>

#include "sitstd/error.hpp"

namespace sitstd {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::GridMismatch: return "grid-mismatch";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::EmptyKernel: return "empty-kernel";
    case ErrorKind::Extent: return "extent";
    case ErrorKind::UndefinedObjective: return "undefined-objective";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::SearchFailed: return "search-failed";
    case ErrorKind::BaselineUnavailable: return "baseline-unavailable";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Grid

std::optional<CellIndex> Grid::locate(Point p) const noexcept {
  const double fc = (p.x - origin_x) / pixel_size;
  const double fr = (p.y - origin_y) / pixel_size;
  if (!(fc >= 0.0) || !(fr >= 0.0)) return std::nullopt;
  const auto c = static_cast<std::size_t>(fc);
  const auto r = static_cast<std::size_t>(fr);
  if (c >= cols || r >= rows) return std::nullopt;
  return CellIndex{r, c};
}

void Grid::validate() const {
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size))
    throw Error(ErrorKind::InvalidArgument, "grid pixel size must be positive, got " + std::to_string(pixel_size));
  if (rows == 0 || cols == 0) throw Error(ErrorKind::InvalidArgument, "grid dimensions must be positive: " + describe(*this));
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y))
    throw Error(ErrorKind::InvalidArgument, "grid origin must be finite");
}

namespace {
bool close(double a, double b, double rel_tol, double scale) {
  return std::abs(a - b) <= rel_tol * std::max({std::abs(a), std::abs(b), scale});
}
}  // namespace

bool Grid::matches(const Grid& other, double rel_tol) const noexcept {
  if (rows != other.rows || cols != other.cols) return false;
  const double scale = std::max(pixel_size, other.pixel_size);
  return close(pixel_size, other.pixel_size, rel_tol, 0.0) && close(origin_x, other.origin_x, rel_tol, scale) &&
         close(origin_y, other.origin_y, rel_tol, scale);
}

std::string describe(const Grid& grid) {
  std::ostringstream os;
  os << grid.rows << "x" << grid.cols << " @ (" << grid.origin_x << ", " << grid.origin_y << ") size " << grid.pixel_size;
  return os.str();
}

std::vector<Point> pixel_centers(const Grid& grid) {
  std::vector<Point> out;
  out.reserve(grid.size());
  for (std::size_t r = 0; r < grid.rows; ++r)
    for (std::size_t c = 0; c < grid.cols; ++c) out.push_back(grid.center(r, c));
  return out;
}

// ---------------------------------------------------------------------------
// MaskedImage

MaskedImage::MaskedImage(Grid grid, double fill, bool valid)
    : grid_(grid), values_(grid.size(), fill), mask_(grid.size(), valid ? 1 : 0) {
  grid_.validate();
}

MaskedImage::MaskedImage(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)), mask_(values_.size(), 1) {
  grid_.validate();
  if (values_.size() != grid_.size())
    throw Error(ErrorKind::DimensionMismatch, "value count " + std::to_string(values_.size()) + " does not match grid " +
                                                  describe(grid_));
}

MaskedImage::MaskedImage(Grid grid, std::vector<double> values, std::vector<std::uint8_t> mask)
    : grid_(grid), values_(std::move(values)), mask_(std::move(mask)) {
  grid_.validate();
  if (values_.size() != grid_.size() || mask_.size() != grid_.size())
    throw Error(ErrorKind::DimensionMismatch, "value/mask counts " + std::to_string(values_.size()) + "/" +
                                                  std::to_string(mask_.size()) + " do not match grid " +
                                                  describe(grid_));
  for (auto& m : mask_) m = m ? 1 : 0;
}

std::size_t MaskedImage::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

bool identical(const MaskedImage& a, const MaskedImage& b) noexcept {
  if (!(a.grid() == b.grid())) return false;
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.valid(i) != b.valid(i)) return false;
    if (!a.valid(i)) continue;
    const double va = a.value(i);
    const double vb = b.value(i);
    if (std::memcmp(&va, &vb, sizeof(double)) != 0) return false;
  }
  return true;
}

void require_same_grid(const Grid& a, const Grid& b, std::string_view what) {
  if (!a.matches(b))
    throw Error(ErrorKind::GridMismatch, std::string(what) + ": grid " + describe(a) + " vs " + describe(b));
}

namespace {
template <class Op>
MaskedImage combine(const MaskedImage& a, const MaskedImage& b, Op op, std::string_view what) {
  require_same_grid(a.grid(), b.grid(), what);
  MaskedImage out(a.grid(), 0.0, false);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.valid(i) && b.valid(i)) out.set(i, op(a.value(i), b.value(i)));
  return out;
}
}  // namespace

MaskedImage add(const MaskedImage& a, const MaskedImage& b) {
  return combine(a, b, [](double x, double y) { return x + y; }, "add");
}

MaskedImage subtract(const MaskedImage& a, const MaskedImage& b) {
  return combine(a, b, [](double x, double y) { return x - y; }, "subtract");
}

MaskedImage scale(const MaskedImage& a, double factor) {
  MaskedImage out(a.grid(), 0.0, false);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.valid(i)) out.set(i, a.value(i) * factor);
  return out;
}

// ---------------------------------------------------------------------------
// Date, BandSet

Date::Date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "invalid calendar date %04d-%02u-%02u", year, month, day);
    throw Error(ErrorKind::InvalidArgument, buf);
  }
  days_ = std::chrono::sys_days{ymd};
}

Date Date::parse(std::string_view iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  const std::string s(iso);
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3)
    throw Error(ErrorKind::InvalidArgument, "not an ISO-8601 date: '" + s + "'");
  return Date(y, m, d);
}

std::string Date::iso() const {
  const std::chrono::year_month_day ymd{days_};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

BandSet::BandSet(std::vector<Band> bands) : bands_(std::move(bands)) {
  std::set<std::string> seen;
  for (const auto& b : bands_) {
    if (b.id.empty()) throw Error(ErrorKind::InvalidArgument, "band identifiers must be non-empty");
    if (!seen.insert(b.id).second) throw Error(ErrorKind::InvalidArgument, "duplicate band identifier '" + b.id + "'");
  }
}

BandSet BandSet::from_ids(const std::vector<std::string>& ids) {
  std::vector<Band> bands;
  for (const auto& id : ids) bands.push_back({id, std::nullopt});
  return BandSet(std::move(bands));
}

std::optional<std::size_t> BandSet::index_of(std::string_view id) const noexcept {
  for (std::size_t i = 0; i < bands_.size(); ++i)
    if (bands_[i].id == id) return i;
  return std::nullopt;
}

std::vector<std::string> BandSet::ids() const {
  std::vector<std::string> out;
  for (const auto& b : bands_) out.push_back(b.id);
  return out;
}

BandSet BandSet::select(const std::vector<std::size_t>& indices) const {
  std::vector<Band> out;
  for (auto i : indices) {
    if (i >= bands_.size()) throw Error(ErrorKind::InvalidArgument, "band index out of range");
    out.push_back(bands_[i]);
  }
  return BandSet(std::move(out));
}

bool BandSet::operator==(const BandSet& other) const noexcept {
  if (bands_.size() != other.bands_.size()) return false;
  for (std::size_t i = 0; i < bands_.size(); ++i)
    if (bands_[i].id != other.bands_[i].id || bands_[i].wavelength_nm != other.bands_[i].wavelength_nm) return false;
  return true;
}

// ---------------------------------------------------------------------------
// ImageSeries

ImageSeries::ImageSeries(Grid grid, BandSet bands) : grid_(grid), bands_(std::move(bands)) { grid_.validate(); }

std::vector<Date> ImageSeries::dates() const {
  std::vector<Date> out;
  for (const auto& e : entries_) out.push_back(e.date);
  return out;
}

std::optional<std::size_t> ImageSeries::find(Date date) const noexcept {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), date,
                             [](const SeriesEntry& e, Date d) { return e.date < d; });
  if (it == entries_.end() || it->date != date) return std::nullopt;
  return static_cast<std::size_t>(it - entries_.begin());
}

const SeriesEntry& ImageSeries::at(Date date) const {
  auto i = find(date);
  if (!i) throw Error(ErrorKind::NotFound, "date " + date.iso() + " not present in series");
  return entries_[*i];
}

void ImageSeries::check_entry(const std::vector<MaskedImage>& bands) const {
  if (bands.size() != bands_.size())
    throw Error(ErrorKind::DimensionMismatch, "entry has " + std::to_string(bands.size()) + " bands, series has " +
                                                  std::to_string(bands_.size()));
  for (const auto& img : bands) require_same_grid(img.grid(), grid_, "series entry");
}

void ImageSeries::append(Date date, std::vector<MaskedImage> bands) {
  check_entry(bands);
  if (!entries_.empty() && !(entries_.back().date < date))
    throw Error(ErrorKind::InvalidArgument, "series dates must be strictly increasing: " + date.iso() + " after " +
                                                entries_.back().date.iso());
  entries_.push_back({date, std::move(bands)});
}

void ImageSeries::insert(Date date, std::vector<MaskedImage> bands) {
  check_entry(bands);
  auto it = std::lower_bound(entries_.begin(), entries_.end(), date,
                             [](const SeriesEntry& e, Date d) { return e.date < d; });
  if (it != entries_.end() && it->date == date)
    throw Error(ErrorKind::InvalidArgument, "date " + date.iso() + " already present in series");
  entries_.insert(it, SeriesEntry{date, std::move(bands)});
}

SeriesEntry ImageSeries::remove(Date date) {
  auto i = find(date);
  if (!i) throw Error(ErrorKind::NotFound, "date " + date.iso() + " not present in series");
  SeriesEntry out = std::move(entries_[*i]);
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(*i));
  return out;
}

ImageSeries ImageSeries::subset(const std::vector<Date>& dates) const {
  ImageSeries out(grid_, bands_);
  std::vector<Date> sorted = dates;
  std::sort(sorted.begin(), sorted.end());
  for (auto d : sorted) {
    const auto& e = at(d);
    out.append(e.date, e.bands);
  }
  return out;
}

ImageSeries ImageSeries::select_bands(const std::vector<std::size_t>& indices) const {
  ImageSeries out(grid_, bands_.select(indices));
  for (const auto& e : entries_) {
    std::vector<MaskedImage> bands;
    for (auto i : indices) bands.push_back(e.bands[i]);
    out.append(e.date, std::move(bands));
  }
  return out;
}

bool identical(const ImageSeries& a, const ImageSeries& b) noexcept {
  if (!(a.grid() == b.grid()) || !(a.bands() == b.bands()) || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].date != b[i].date) return false;
    for (std::size_t k = 0; k < a[i].bands.size(); ++k)
      if (!identical(a[i].bands[k], b[i].bands[k])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Aggregation and reprojection

Grid aggregate_grid(const Grid& fine, std::size_t factor) {
  if (factor == 0) throw Error(ErrorKind::InvalidArgument, "aggregation factor must be positive");
  if (fine.rows % factor != 0 || fine.cols % factor != 0)
    throw Error(ErrorKind::DimensionMismatch, "image " + std::to_string(fine.rows) + "x" + std::to_string(fine.cols) +
                                                  " is not divisible by aggregation factor " + std::to_string(factor));
  return Grid{fine.origin_x, fine.origin_y, fine.pixel_size * static_cast<double>(factor), fine.rows / factor,
              fine.cols / factor};
}

MaskedImage aggregate_mean(const MaskedImage& fine, std::size_t factor) {
  const Grid coarse = aggregate_grid(fine.grid(), factor);
  MaskedImage out(coarse, 0.0, false);
  for (std::size_t R = 0; R < coarse.rows; ++R) {
    for (std::size_t C = 0; C < coarse.cols; ++C) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t r = R * factor; r < (R + 1) * factor; ++r) {
        for (std::size_t c = C * factor; c < (C + 1) * factor; ++c) {
          if (!fine.valid(r, c)) continue;
          sum += fine.value(r, c);
          ++n;
        }
      }
      if (n > 0) out.set(R, C, sum / static_cast<double>(n));
    }
  }
  return out;
}

ImageSeries aggregate_mean(const ImageSeries& fine, std::size_t factor) {
  ImageSeries out(aggregate_grid(fine.grid(), factor), fine.bands());
  for (const auto& e : fine.entries()) {
    std::vector<MaskedImage> bands;
    for (const auto& b : e.bands) bands.push_back(aggregate_mean(b, factor));
    out.append(e.date, std::move(bands));
  }
  return out;
}

namespace {

constexpr double kSnap = 1e-9;

// Fractional source index of a coordinate, snapped onto integers within kSnap.
double source_index(double coord, double origin, double pixel_size) {
  const double f = (coord - origin) / pixel_size - 0.5;
  const double nearest = std::round(f);
  return std::abs(f - nearest) < kSnap ? nearest : f;
}

struct Axis {
  std::size_t lo = 0;
  double t = 0.0;  // weight of lo + 1
  bool ok = false;
};

Axis bracket(double f, std::size_t n) {
  Axis a;
  if (f < 0.0 || f > static_cast<double>(n - 1)) return a;
  a.lo = static_cast<std::size_t>(std::floor(f));
  a.t = f - static_cast<double>(a.lo);
  if (a.lo == n - 1) a.t = 0.0;
  a.ok = true;
  return a;
}

}  // namespace

MaskedImage reproject_bilinear(const MaskedImage& src, const Grid& target) {
  if (src.empty()) throw Error(ErrorKind::EmptyInput, "reproject: empty source image");
  target.validate();
  const Grid& g = src.grid();
  MaskedImage out(target, 0.0, false);
  for (std::size_t r = 0; r < target.rows; ++r) {
    for (std::size_t c = 0; c < target.cols; ++c) {
      const Point p = target.center(r, c);
      const Axis ax = bracket(source_index(p.x, g.origin_x, g.pixel_size), g.cols);
      const Axis ay = bracket(source_index(p.y, g.origin_y, g.pixel_size), g.rows);
      if (!ax.ok || !ay.ok) continue;
      const double wx[2] = {1.0 - ax.t, ax.t};
      const double wy[2] = {1.0 - ay.t, ay.t};
      double acc = 0.0;
      bool ok = true;
      for (int dy = 0; dy < 2 && ok; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const double w = wy[dy] * wx[dx];
          if (w == 0.0) continue;
          const std::size_t sr = ay.lo + static_cast<std::size_t>(dy);
          const std::size_t sc = ax.lo + static_cast<std::size_t>(dx);
          if (!src.valid(sr, sc)) {
            ok = false;
            break;
          }
          acc += w * src.value(sr, sc);
        }
      }
      if (ok) out.set(r, c, acc);
    }
  }
  return out;
}

MaskedImage reproject_nearest(const MaskedImage& src, const Grid& target) {
  if (src.empty()) throw Error(ErrorKind::EmptyInput, "reproject: empty source image");
  target.validate();
  MaskedImage out(target, 0.0, false);
  for (std::size_t r = 0; r < target.rows; ++r) {
    for (std::size_t c = 0; c < target.cols; ++c) {
      const auto cell = src.grid().locate(target.center(r, c));
      if (cell && src.valid(cell->row, cell->col)) out.set(r, c, src.value(cell->row, cell->col));
    }
  }
  return out;
}

std::string_view to_string(Resampler r) {
  switch (r) {
    case Resampler::Bilinear: return "bilinear";
    case Resampler::Nearest: return "nearest";
  }
  return "bilinear";
}

Resampler parse_resampler(std::string_view name) {
  if (name == "bilinear") return Resampler::Bilinear;
  if (name == "nearest") return Resampler::Nearest;
  throw Error(ErrorKind::InvalidArgument, "unknown resampler '" + std::string(name) + "'");
}

MaskedImage reproject(const MaskedImage& src, const Grid& target, Resampler method) {
  return method == Resampler::Nearest ? reproject_nearest(src, target) : reproject_bilinear(src, target);
}

}  // namespace sitstd
