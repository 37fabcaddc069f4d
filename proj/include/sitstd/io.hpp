#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sitstd/psf.hpp"
#include "sitstd/raster.hpp"
#include "sitstd/text_io.hpp"

namespace sitstd::io {

// Raster container layout:
//   bytes 0..7   magic "SITSRAST"
//   bytes 8..11  format version, u32 little-endian
//   bytes 12..15 header length H, u32 little-endian
//   next H bytes ASCII header, one `key=value` per line
//   payload      IEEE-754 binary64 little-endian, date-major, then band-major,
//                then row-major
// Required header keys: rows, cols, bands, dates, origin_x, origin_y,
// pixel_size, nodata, band_ids, date_list. Optional: wavelengths, config.*.
inline constexpr std::string_view kMagic = "SITSRAST";
inline constexpr std::uint32_t kVersion = 1;
inline constexpr double kDefaultNodata = -9999.0;

struct RasterHeader {
  Grid grid;
  BandSet bands;
  std::vector<Date> dates;
  double nodata = kDefaultNodata;  // NaN allowed
  KeyValueDoc config;              // stored under config.<key>
};

// Serializes a series; invalid pixels are written as `nodata`. Throws
// InvalidArgument when a valid pixel holds the nodata value.
std::string encode_series(const ImageSeries& series, double nodata = kDefaultNodata, const KeyValueDoc& config = {});
// Parses a container; pixels equal to the header's nodata become invalid.
// Format errors report the byte offset at which parsing failed.
ImageSeries decode_series(std::string_view bytes, RasterHeader* header = nullptr);

void write_series(const ImageSeries& series, const std::string& path, double nodata = kDefaultNodata,
                  const KeyValueDoc& config = {});
ImageSeries read_series(const std::string& path, RasterHeader* header = nullptr);

// Fitted parameters. Keys are `<band>.<field>` for generalized parameters and
// `<band>@<date>.<field>` for per-pair ones, field in shift_x, shift_y, sigma,
// objective.
struct ParamRecord {
  std::string band;
  std::optional<Date> date;
  psf::UpscaleParams params;
  std::optional<double> objective;
};

KeyValueDoc params_to_doc(std::span<const ParamRecord> records, const KeyValueDoc& config = {});
std::vector<ParamRecord> params_from_doc(const KeyValueDoc& doc);

struct LabeledTrace {
  std::string band;
  std::optional<Date> date;
  psf::SearchTrace trace;
};

// CSV: date,band,iteration,phase,x,y,sigma,rho,accepted (date empty for
// generalized traces).
std::string traces_to_csv(std::span<const LabeledTrace> traces);

// `# key = value` lines for embedding a config echo ahead of CSV content.
std::string config_comment(const KeyValueDoc& config);

// 8-bit binary PGM with a linear stretch over the valid range; invalid pixels
// are black. Debug aid only.
std::string to_pgm(const MaskedImage& img);

}  // namespace sitstd::io
