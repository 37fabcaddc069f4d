#include "sitstd/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "sitstd/error.hpp"

namespace sitstd::io {
namespace {

constexpr std::size_t kPreambleSize = 16;

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) out |= ((v >> (8 * i)) & 0xFF) << (8 * (sizeof(U) - 1 - i));
    return out;
  }
}

void put_u32(std::string& out, std::uint32_t v) {
  v = to_little(v);
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  std::memcpy(&v, bytes.data() + offset, 4);
  return to_little(v);
}

void put_f64(char* dst, double v) {
  const auto bits = to_little(std::bit_cast<std::uint64_t>(v));
  std::memcpy(dst, &bits, 8);
}

double get_f64(const char* src) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, src, 8);
  return std::bit_cast<double>(to_little(bits));
}

bool is_nodata(double v, double nodata) { return std::isnan(nodata) ? std::isnan(v) : v == nodata; }

[[noreturn]] void format_error(std::size_t offset, const std::string& message) {
  throw Error(ErrorKind::Format, "byte " + std::to_string(offset) + ": " + message);
}

void check_token(std::string_view token, std::string_view what) {
  if (token.empty() || token.find_first_of(",=\n\r") != std::string_view::npos || trim(token) != token)
    throw Error(ErrorKind::InvalidArgument,
                std::string(what) + " '" + std::string(token) + "' cannot be stored (empty, padded, or contains ',', '=' or a newline)");
}

std::string header_text(const ImageSeries& series, double nodata, const KeyValueDoc& config) {
  const Grid& g = series.grid();
  std::string h;
  auto line = [&h](std::string_view k, const std::string& v) {
    h += k;
    h += '=';
    h += v;
    h += '\n';
  };
  line("rows", std::to_string(g.rows));
  line("cols", std::to_string(g.cols));
  line("bands", std::to_string(series.bands().size()));
  line("dates", std::to_string(series.size()));
  line("origin_x", format_double(g.origin_x));
  line("origin_y", format_double(g.origin_y));
  line("pixel_size", format_double(g.pixel_size));
  line("nodata", format_double(nodata));
  std::vector<std::string> ids, waves, dates;
  bool any_wave = false;
  for (const auto& b : series.bands().bands()) {
    check_token(b.id, "band id");
    ids.push_back(b.id);
    waves.push_back(b.wavelength_nm ? format_double(*b.wavelength_nm) : "-");
    any_wave = any_wave || b.wavelength_nm.has_value();
  }
  for (Date d : series.dates()) dates.push_back(d.iso());
  line("band_ids", join(ids, ","));
  line("date_list", join(dates, ","));
  if (any_wave) line("wavelengths", join(waves, ","));
  for (const auto& [k, v] : config.entries()) {
    check_token(k, "config key");
    if (v.find_first_of("\n\r") != std::string::npos)
      throw Error(ErrorKind::InvalidArgument, "config value for '" + k + "' contains a newline");
    line("config." + k, v);
  }
  return h;
}

}  // namespace

std::string encode_series(const ImageSeries& series, double nodata, const KeyValueDoc& config) {
  const std::string header = header_text(series, nodata, config);
  const Grid& g = series.grid();
  const std::size_t n_values = g.size() * series.bands().size() * series.size();
  std::string out;
  out.reserve(kPreambleSize + header.size() + 8 * n_values);
  out.append(kMagic);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  std::size_t pos = out.size();
  out.resize(pos + 8 * n_values);
  for (const auto& e : series.entries()) {
    for (std::size_t b = 0; b < e.bands.size(); ++b) {
      const MaskedImage& img = e.bands[b];
      for (std::size_t i = 0; i < img.size(); ++i) {
        double v = nodata;
        if (img.valid(i)) {
          v = img.value(i);
          if (is_nodata(v, nodata))
            throw Error(ErrorKind::InvalidArgument, "valid pixel " + std::to_string(i) + " of band '" +
                                                        series.bands()[b].id + "' on " + e.date.iso() +
                                                        " equals the nodata value " + format_double(nodata));
        }
        put_f64(out.data() + pos, v);
        pos += 8;
      }
    }
  }
  return out;
}

ImageSeries decode_series(std::string_view bytes, RasterHeader* header_out) {
  if (bytes.size() < kPreambleSize)
    format_error(bytes.size(), "file too short for the preamble: expected " + std::to_string(kPreambleSize) +
                                   " bytes, got " + std::to_string(bytes.size()));
  if (bytes.substr(0, kMagic.size()) != kMagic) format_error(0, "bad magic, not a SITSRAST raster");
  const std::uint32_t version = get_u32(bytes, 8);
  if (version != kVersion)
    format_error(8, "unsupported version " + std::to_string(version) + " (expected " + std::to_string(kVersion) + ")");
  const std::uint32_t header_len = get_u32(bytes, 12);
  if (bytes.size() - kPreambleSize < header_len)
    format_error(12, "header length " + std::to_string(header_len) + " exceeds the " +
                         std::to_string(bytes.size() - kPreambleSize) + " bytes available");

  // Header lines; keep each line's offset so errors can point into the file.
  const std::string_view text = bytes.substr(kPreambleSize, header_len);
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<std::size_t> offsets;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    const std::size_t at = kPreambleSize + pos;
    if (!line.empty()) {
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos || eq == 0) format_error(at, "malformed header line '" + std::string(line) + "'");
      std::string key(line.substr(0, eq));
      for (const auto& f : fields)
        if (f.first == key) format_error(at, "duplicate header key '" + key + "'");
      fields.emplace_back(std::move(key), std::string(line.substr(eq + 1)));
      offsets.push_back(at);
    }
    pos = end + 1;
  }
  auto field = [&](std::string_view key) -> std::pair<std::string, std::size_t> {
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (fields[i].first == key) return {fields[i].second, offsets[i]};
    format_error(kPreambleSize, "header is missing key '" + std::string(key) + "'");
  };
  auto count = [&](std::string_view key) -> std::size_t {
    auto [v, at] = field(key);
    long long n = 0;
    try {
      n = parse_integer(v, key);
    } catch (const Error& e) {
      format_error(at, e.what());
    }
    if (n < 0) format_error(at, std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(n);
  };
  auto real = [&](std::string_view key) -> double {
    auto [v, at] = field(key);
    try {
      return parse_double(v, key);
    } catch (const Error& e) {
      format_error(at, e.what());
    }
  };

  RasterHeader h;
  h.grid.rows = count("rows");
  h.grid.cols = count("cols");
  const std::size_t n_bands = count("bands");
  const std::size_t n_dates = count("dates");
  h.grid.origin_x = real("origin_x");
  h.grid.origin_y = real("origin_y");
  h.grid.pixel_size = real("pixel_size");
  h.nodata = real("nodata");
  try {
    h.grid.validate();
  } catch (const Error& e) {
    format_error(kPreambleSize, e.what());
  }

  const auto [ids_text, ids_at] = field("band_ids");
  const std::vector<std::string> ids = split(ids_text, ',');
  if (ids.size() != n_bands)
    format_error(ids_at, "band_ids lists " + std::to_string(ids.size()) + " bands, header says " + std::to_string(n_bands));
  std::vector<std::optional<double>> waves(n_bands);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].first != "wavelengths") continue;
    const std::vector<std::string> w = split(fields[i].second, ',');
    if (w.size() != n_bands) format_error(offsets[i], "wavelengths count does not match bands");
    for (std::size_t b = 0; b < n_bands; ++b) {
      if (w[b] == "-") continue;
      try {
        waves[b] = parse_double(w[b], "wavelength");
      } catch (const Error& e) {
        format_error(offsets[i], e.what());
      }
    }
  }
  std::vector<Band> bands;
  for (std::size_t b = 0; b < n_bands; ++b) bands.push_back({ids[b], waves[b]});
  try {
    h.bands = BandSet(std::move(bands));
  } catch (const Error& e) {
    format_error(ids_at, e.what());
  }

  const auto [dates_text, dates_at] = field("date_list");
  const std::vector<std::string> date_strings = split(dates_text, ',');
  if (date_strings.size() != n_dates)
    format_error(dates_at, "date_list has " + std::to_string(date_strings.size()) + " dates, header says " +
                               std::to_string(n_dates));
  for (const auto& s : date_strings) {
    try {
      h.dates.push_back(Date::parse(s));
    } catch (const Error& e) {
      format_error(dates_at, e.what());
    }
    if (h.dates.size() > 1 && !(h.dates[h.dates.size() - 2] < h.dates.back()))
      format_error(dates_at, "dates are not strictly increasing at " + s);
  }
  for (const auto& [k, v] : fields)
    if (k.rfind("config.", 0) == 0) h.config.set(k.substr(7), v);

  const std::size_t payload_at = kPreambleSize + header_len;
  const std::size_t per_image = h.grid.size();
  if (n_bands != 0 && n_dates != 0 &&
      per_image > std::numeric_limits<std::size_t>::max() / 8 / n_bands / n_dates)
    format_error(kPreambleSize, "payload size overflows");
  const std::size_t expected = 8 * per_image * n_bands * n_dates;
  const std::size_t actual = bytes.size() - payload_at;
  if (actual != expected)
    format_error(payload_at, "payload length mismatch: expected " + std::to_string(expected) + " bytes, got " +
                                 std::to_string(actual));

  ImageSeries series(h.grid, h.bands);
  const char* p = bytes.data() + payload_at;
  for (Date d : h.dates) {
    std::vector<MaskedImage> images;
    for (std::size_t b = 0; b < n_bands; ++b) {
      std::vector<double> values(per_image);
      std::vector<std::uint8_t> mask(per_image);
      for (std::size_t i = 0; i < per_image; ++i, p += 8) {
        values[i] = get_f64(p);
        mask[i] = is_nodata(values[i], h.nodata) ? 0 : 1;
      }
      images.emplace_back(h.grid, std::move(values), std::move(mask));
    }
    series.append(d, std::move(images));
  }
  if (header_out) *header_out = std::move(h);
  return series;
}

void write_series(const ImageSeries& series, const std::string& path, double nodata, const KeyValueDoc& config) {
  write_file(path, encode_series(series, nodata, config));
}

ImageSeries read_series(const std::string& path, RasterHeader* header) {
  const std::string bytes = read_file(path);
  try {
    return decode_series(bytes, header);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Format) throw Error(ErrorKind::Format, path + ": " + e.what());
    throw;
  }
}

KeyValueDoc params_to_doc(std::span<const ParamRecord> records, const KeyValueDoc& config) {
  KeyValueDoc doc;
  for (const auto& [k, v] : config.entries()) doc.set("config." + k, v);
  for (const auto& r : records) {
    check_token(r.band, "band id");
    if (r.band.find_first_of("@.") != std::string::npos)
      throw Error(ErrorKind::InvalidArgument, "band id '" + r.band + "' cannot contain '@' or '.' in a params file");
    const std::string prefix = r.date ? r.band + "@" + r.date->iso() : r.band;
    if (doc.find(prefix + ".sigma"))
      throw Error(ErrorKind::InvalidArgument, "duplicate parameter record '" + prefix + "'");
    doc.set(prefix + ".shift_x", format_double(r.params.shift_x));
    doc.set(prefix + ".shift_y", format_double(r.params.shift_y));
    doc.set(prefix + ".sigma", format_double(r.params.sigma));
    if (r.objective) doc.set(prefix + ".objective", format_double(*r.objective));
  }
  return doc;
}

std::vector<ParamRecord> params_from_doc(const KeyValueDoc& doc) {
  std::vector<ParamRecord> out;
  std::vector<std::string> prefixes;
  for (const auto& [k, v] : doc.entries()) {
    if (k.rfind("config.", 0) == 0) continue;
    const std::size_t dot = k.rfind('.');
    if (dot == std::string::npos || dot == 0) throw Error(ErrorKind::Format, "unrecognized params key '" + k + "'");
    const std::string field = k.substr(dot + 1);
    if (field != "shift_x" && field != "shift_y" && field != "sigma" && field != "objective")
      throw Error(ErrorKind::Format, "unrecognized params field in '" + k + "'");
    const std::string prefix = k.substr(0, dot);
    if (std::find(prefixes.begin(), prefixes.end(), prefix) == prefixes.end()) prefixes.push_back(prefix);
  }
  for (const auto& prefix : prefixes) {
    ParamRecord r;
    const std::size_t at = prefix.find('@');
    r.band = prefix.substr(0, at);
    if (at != std::string::npos) {
      try {
        r.date = Date::parse(prefix.substr(at + 1));
      } catch (const Error& e) {
        throw Error(ErrorKind::Format, "params key '" + prefix + "': " + e.what());
      }
    }
    r.params.shift_x = parse_double(doc.require(prefix + ".shift_x"), prefix + ".shift_x");
    r.params.shift_y = parse_double(doc.require(prefix + ".shift_y"), prefix + ".shift_y");
    r.params.sigma = parse_double(doc.require(prefix + ".sigma"), prefix + ".sigma");
    if (auto o = doc.find(prefix + ".objective")) r.objective = parse_double(*o, prefix + ".objective");
    out.push_back(std::move(r));
  }
  return out;
}

std::string traces_to_csv(std::span<const LabeledTrace> traces) {
  std::string out = "date,band,iteration,phase,x,y,sigma,rho,accepted\n";
  for (const auto& t : traces) {
    const std::string prefix = (t.date ? t.date->iso() : std::string()) + "," + t.band + ",";
    const std::string body = psf::trace_to_csv(t.trace);
    // Re-emit each row of the single-trace CSV behind the label columns.
    std::size_t pos = body.find('\n') + 1;
    while (pos < body.size()) {
      const std::size_t end = body.find('\n', pos);
      out += prefix;
      out.append(body, pos, end - pos + 1);
      pos = end + 1;
    }
  }
  return out;
}

std::string config_comment(const KeyValueDoc& config) {
  std::string out;
  for (const auto& [k, v] : config.entries()) out += "# " + k + " = " + v + "\n";
  return out;
}

std::string to_pgm(const MaskedImage& img) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!img.valid(i) || !std::isfinite(img.value(i))) continue;
    lo = std::min(lo, img.value(i));
    hi = std::max(hi, img.value(i));
  }
  std::string out = "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n255\n";
  for (std::size_t i = 0; i < img.size(); ++i) {
    unsigned char px = 0;
    if (img.valid(i) && std::isfinite(img.value(i)))
      px = hi > lo ? static_cast<unsigned char>(1 + std::lround(254.0 * (img.value(i) - lo) / (hi - lo))) : 128;
    out.push_back(static_cast<char>(px));
  }
  return out;
}

}  // namespace sitstd::io
