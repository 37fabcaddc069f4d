#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sitstd {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct CellIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const CellIndex&) const = default;
};

// Regular north-up grid in a planar CRS. Rows grow with y, so the center of
// cell (r, c) is origin + ((c + 0.5), (r + 0.5)) * pixel_size.
struct Grid {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_size = 1.0;
  std::size_t rows = 1;
  std::size_t cols = 1;

  std::size_t size() const noexcept { return rows * cols; }
  Point center(std::size_t row, std::size_t col) const noexcept {
    return {origin_x + (static_cast<double>(col) + 0.5) * pixel_size,
            origin_y + (static_cast<double>(row) + 0.5) * pixel_size};
  }
  // Cell containing (x, y), or nullopt outside the extent.
  std::optional<CellIndex> locate(Point p) const noexcept;

  // Throws InvalidArgument unless pixel_size > 0 and both dimensions >= 1.
  void validate() const;
  // Same geometry up to a relative tolerance on the real-valued fields.
  bool matches(const Grid& other, double rel_tol = 1e-9) const noexcept;
  bool operator==(const Grid&) const = default;
};

std::string describe(const Grid& grid);

// Row-major list of map-coordinate pixel centers.
std::vector<Point> pixel_centers(const Grid& grid);

// One band on a grid with a per-pixel validity mask. Values at invalid pixels
// carry no meaning and never enter any computation.
class MaskedImage {
 public:
  MaskedImage() = default;
  explicit MaskedImage(Grid grid, double fill = 0.0, bool valid = true);
  MaskedImage(Grid grid, std::vector<double> values);
  MaskedImage(Grid grid, std::vector<double> values, std::vector<std::uint8_t> mask);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t rows() const noexcept { return grid_.rows; }
  std::size_t cols() const noexcept { return grid_.cols; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double value(std::size_t row, std::size_t col) const noexcept { return values_[row * grid_.cols + col]; }
  bool valid(std::size_t row, std::size_t col) const noexcept { return mask_[row * grid_.cols + col] != 0; }
  double value(std::size_t index) const noexcept { return values_[index]; }
  bool valid(std::size_t index) const noexcept { return mask_[index] != 0; }

  void set(std::size_t row, std::size_t col, double v) noexcept {
    values_[row * grid_.cols + col] = v;
    mask_[row * grid_.cols + col] = 1;
  }
  void set(std::size_t index, double v) noexcept {
    values_[index] = v;
    mask_[index] = 1;
  }
  void invalidate(std::size_t row, std::size_t col) noexcept { mask_[row * grid_.cols + col] = 0; }
  void invalidate(std::size_t index) noexcept { mask_[index] = 0; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }
  std::size_t valid_count() const noexcept;

 private:
  Grid grid_{};
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

// Same grid, same mask, bit-identical values at valid pixels.
bool identical(const MaskedImage& a, const MaskedImage& b) noexcept;

// Throws GridMismatch naming `what` when the two grids differ.
void require_same_grid(const Grid& a, const Grid& b, std::string_view what);

// Elementwise helpers; the result is valid only where every input is valid.
MaskedImage add(const MaskedImage& a, const MaskedImage& b);
MaskedImage subtract(const MaskedImage& a, const MaskedImage& b);
MaskedImage scale(const MaskedImage& a, double factor);

// Calendar date, ISO-8601 (YYYY-MM-DD) on the wire.
class Date {
 public:
  Date() = default;
  Date(int year, unsigned month, unsigned day);
  explicit Date(std::chrono::sys_days days) : days_(days) {}

  static Date parse(std::string_view iso);
  std::string iso() const;
  std::chrono::sys_days days() const noexcept { return days_; }
  Date plus_days(int n) const { return Date(days_ + std::chrono::days(n)); }

  auto operator<=>(const Date&) const = default;

 private:
  std::chrono::sys_days days_{};
};

struct Band {
  std::string id;
  std::optional<double> wavelength_nm;
};

class BandSet {
 public:
  BandSet() = default;
  explicit BandSet(std::vector<Band> bands);
  static BandSet from_ids(const std::vector<std::string>& ids);

  std::size_t size() const noexcept { return bands_.size(); }
  const Band& operator[](std::size_t i) const noexcept { return bands_[i]; }
  std::optional<std::size_t> index_of(std::string_view id) const noexcept;
  std::vector<std::string> ids() const;
  const std::vector<Band>& bands() const noexcept { return bands_; }
  BandSet select(const std::vector<std::size_t>& indices) const;

  bool operator==(const BandSet& other) const noexcept;

 private:
  std::vector<Band> bands_;
};

struct SeriesEntry {
  Date date;
  std::vector<MaskedImage> bands;
};

// Date-ordered multiband images on one shared grid and band set.
class ImageSeries {
 public:
  ImageSeries() = default;
  ImageSeries(Grid grid, BandSet bands);

  const Grid& grid() const noexcept { return grid_; }
  const BandSet& bands() const noexcept { return bands_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<SeriesEntry>& entries() const noexcept { return entries_; }
  const SeriesEntry& operator[](std::size_t i) const noexcept { return entries_[i]; }
  std::vector<Date> dates() const;

  std::optional<std::size_t> find(Date date) const noexcept;
  const SeriesEntry& at(Date date) const;

  // append requires date > last date; insert places the entry in order and
  // rejects duplicates.
  void append(Date date, std::vector<MaskedImage> bands);
  void insert(Date date, std::vector<MaskedImage> bands);
  SeriesEntry remove(Date date);

  ImageSeries subset(const std::vector<Date>& dates) const;
  ImageSeries select_bands(const std::vector<std::size_t>& indices) const;

 private:
  void check_entry(const std::vector<MaskedImage>& bands) const;

  Grid grid_{};
  BandSet bands_;
  std::vector<SeriesEntry> entries_;
};

bool identical(const ImageSeries& a, const ImageSeries& b) noexcept;

// Block mean over valid pixels; an output pixel is invalid iff its
// factor x factor block has no valid input.
MaskedImage aggregate_mean(const MaskedImage& fine, std::size_t factor);
ImageSeries aggregate_mean(const ImageSeries& fine, std::size_t factor);
Grid aggregate_grid(const Grid& fine, std::size_t factor);

// Bilinear interpolation of src at each target pixel center. Neighbours that
// carry zero interpolation weight are not required, so sampling exactly on a
// source center (including the last row/column) reproduces that value.
MaskedImage reproject_bilinear(const MaskedImage& src, const Grid& target);
MaskedImage reproject_nearest(const MaskedImage& src, const Grid& target);

enum class Resampler { Bilinear, Nearest };

std::string_view to_string(Resampler r);
Resampler parse_resampler(std::string_view name);
MaskedImage reproject(const MaskedImage& src, const Grid& target, Resampler method);

}  // namespace sitstd
