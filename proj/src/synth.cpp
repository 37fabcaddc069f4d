#include "sitstd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "sitstd/error.hpp"
#include "sitstd/text_io.hpp"

namespace sitstd::synth {

namespace {

// mt19937_64 output is fully specified by the standard; the distributions are
// not, so uniform and normal draws are derived here to keep scenes
// byte-identical across toolchains.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(sub),
                      static_cast<std::uint32_t>(sub >> 32)};
    engine_.seed(seq);
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

enum Stream : std::uint64_t { kBase = 1, kTemporal = 2, kPatches = 3, kFineNoise = 4, kCoarseNoise = 5 };

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Per-pixel coverage of a shape by 4x4 supersampling.
template <class Inside>
double coverage(double x0, double y0, double size, Inside inside) {
  int hits = 0;
  for (int sy = 0; sy < 4; ++sy)
    for (int sx = 0; sx < 4; ++sx)
      hits += inside(x0 + (sx + 0.5) * size / 4.0, y0 + (sy + 0.5) * size / 4.0) ? 1 : 0;
  return hits / 16.0;
}

struct Wave {
  double kx, ky, phase, amplitude;
};

std::vector<Wave> random_waves(Rng& rng, std::size_t count, double min_wavelength, double max_wavelength) {
  std::vector<Wave> waves;
  for (std::size_t i = 0; i < count; ++i) {
    const double wavelength = std::exp(rng.uniform(std::log(min_wavelength), std::log(max_wavelength)));
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double k = 2.0 * std::numbers::pi / wavelength;
    waves.push_back({k * std::cos(angle), k * std::sin(angle), rng.uniform(0.0, 2.0 * std::numbers::pi),
                     rng.uniform(0.5, 1.0)});
  }
  return waves;
}

// Smooth field in roughly [level - 0.1, level + 0.1], coordinates in fine pixels.
std::vector<double> smooth_field(Rng& rng, std::size_t rows, std::size_t cols, double factor, double level) {
  const auto waves = random_waves(rng, 12, 2.5 * factor, 15.0 * factor);
  double norm = 0.0;
  for (const auto& w : waves) norm += w.amplitude;
  std::vector<double> v(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = static_cast<double>(c) + 0.5;
      const double y = static_cast<double>(r) + 0.5;
      double s = 0.0;
      for (const auto& w : waves) s += w.amplitude * std::sin(w.kx * x + w.ky * y + w.phase);
      v[r * cols + c] = level + 0.25 * s / norm;
    }
  }
  return v;
}

}  // namespace

std::string_view to_string(BaseField f) {
  switch (f) {
    case BaseField::Smooth: return "smooth";
    case BaseField::Shapes: return "shapes";
    case BaseField::Steps: return "steps";
    case BaseField::Circles: return "circles";
  }
  return "smooth";
}

BaseField parse_base_field(std::string_view name) {
  if (name == "smooth") return BaseField::Smooth;
  if (name == "shapes") return BaseField::Shapes;
  if (name == "steps") return BaseField::Steps;
  if (name == "circles") return BaseField::Circles;
  throw Error(ErrorKind::InvalidArgument, "unknown base field generator '" + std::string(name) + "'");
}

void SceneSpec::validate() const {
  if (fine_rows == 0 || fine_cols == 0) throw Error(ErrorKind::InvalidArgument, "scene dimensions must be positive");
  if (factor == 0 || fine_rows % factor || fine_cols % factor)
    throw Error(ErrorKind::DimensionMismatch, "scene " + std::to_string(fine_rows) + "x" + std::to_string(fine_cols) +
                                                  " is not divisible by factor " + std::to_string(factor));
  if (!(fine_pixel_size > 0.0)) throw Error(ErrorKind::InvalidArgument, "fine pixel size must be positive");
  if (band_ids.empty()) throw Error(ErrorKind::InvalidArgument, "scene needs at least one band");
  (void)BandSet::from_ids(band_ids);
  if (true_params.size() > band_ids.size())
    throw Error(ErrorKind::InvalidArgument, "more true parameter sets than bands");
  for (const auto& p : true_params) p.validate();
  kernel.validate();
  if (n_dates == 0) throw Error(ErrorKind::InvalidArgument, "scene needs at least one date");
  if (date_step_days <= 0) throw Error(ErrorKind::InvalidArgument, "date step must be positive");
  if (!gains.empty() && gains.size() != n_dates)
    throw Error(ErrorKind::InvalidArgument, "gains list length must equal n_dates");
  if (!offsets.empty() && offsets.size() != n_dates)
    throw Error(ErrorKind::InvalidArgument, "offsets list length must equal n_dates");
  for (double g : gains)
    if (!(g > 0.0)) throw Error(ErrorKind::InvalidArgument, "gains must be positive");
  if (!(gain_min > 0.0) || gain_max < gain_min) throw Error(ErrorKind::InvalidArgument, "invalid gain range");
  if (offset_max < offset_min) throw Error(ErrorKind::InvalidArgument, "invalid offset range");
  if (!(noise >= 0.0) || !(coarse_noise >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise must be non-negative");
  if (!(patch_radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "patch radius must be positive");
}

Grid SceneSpec::fine_grid() const { return Grid{origin_x, origin_y, fine_pixel_size, fine_rows, fine_cols}; }

Grid SceneSpec::coarse_grid() const { return aggregate_grid(fine_grid(), factor); }

psf::UpscaleParams SceneSpec::params_for(std::size_t band) const {
  return band < true_params.size() ? true_params[band] : psf::UpscaleParams{};
}

MaskedImage base_field(const SceneSpec& spec, std::size_t band) {
  spec.validate();
  const std::size_t rows = spec.fine_rows, cols = spec.fine_cols;
  const double f = static_cast<double>(spec.factor);
  Rng rng(spec.seed, kBase, band);
  const double level = 0.25 + 0.05 * static_cast<double>(band % 4);
  std::vector<double> v;

  switch (spec.generator) {
    case BaseField::Smooth:
      v = smooth_field(rng, rows, cols, f, level);
      break;

    case BaseField::Shapes: {
      v = smooth_field(rng, rows, cols, f, level);
      for (auto& x : v) x = level + 0.3 * (x - level);
      const std::size_t count = std::max<std::size_t>(4, rows * cols / static_cast<std::size_t>(16 * f * f));
      for (std::size_t s = 0; s < count; ++s) {
        const double cx = rng.uniform(0.0, static_cast<double>(cols));
        const double cy = rng.uniform(0.0, static_cast<double>(rows));
        const double size = rng.uniform(0.6, 2.5) * f;
        const double h = rng.uniform(-0.15, 0.15);
        const bool disc = rng.uniform() < 0.5;
        const double aspect = rng.uniform(0.5, 1.5);
        auto inside = [&](double x, double y) {
          if (disc) return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= size * size;
          return std::abs(x - cx) <= size && std::abs(y - cy) <= size * aspect;
        };
        const auto r0 = static_cast<long>(std::floor(cy - 2.0 * size)), r1 = static_cast<long>(std::ceil(cy + 2.0 * size));
        const auto c0 = static_cast<long>(std::floor(cx - 2.0 * size)), c1 = static_cast<long>(std::ceil(cx + 2.0 * size));
        for (long r = std::max(0L, r0); r < std::min<long>(static_cast<long>(rows), r1); ++r)
          for (long c = std::max(0L, c0); c < std::min<long>(static_cast<long>(cols), c1); ++c)
            v[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)] +=
                h * coverage(static_cast<double>(c), static_cast<double>(r), 1.0, inside);
      }
      break;
    }

    case BaseField::Steps: {
      v.assign(rows * cols, level);
      const std::size_t count = std::max<std::size_t>(3, rows * cols / static_cast<std::size_t>(9 * f * f));
      constexpr double kEdgeWidth = 0.5;  // fine pixels
      for (std::size_t s = 0; s < count; ++s) {
        const double x0 = rng.uniform(0.0, static_cast<double>(cols) * 0.8);
        const double y0 = rng.uniform(0.0, static_cast<double>(rows) * 0.8);
        const double x1 = x0 + rng.uniform(0.1, 0.5) * static_cast<double>(cols);
        const double y1 = y0 + rng.uniform(0.1, 0.5) * static_cast<double>(rows);
        const double h = rng.uniform(0.05, 0.2) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        for (std::size_t r = 0; r < rows; ++r) {
          const double y = static_cast<double>(r) + 0.5;
          const double wy = logistic((y - y0) / kEdgeWidth) * logistic((y1 - y) / kEdgeWidth);
          for (std::size_t c = 0; c < cols; ++c) {
            const double x = static_cast<double>(c) + 0.5;
            v[r * cols + c] += h * wy * logistic((x - x0) / kEdgeWidth) * logistic((x1 - x) / kEdgeWidth);
          }
        }
      }
      break;
    }

    case BaseField::Circles: {
      v.assign(rows * cols, level);
      const double spacing = 2.2 * f;
      const double radius = 0.8 * f;
      const double jitter = rng.uniform(0.0, spacing);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          auto inside = [&](double x, double y) {
            const double gx = std::fmod(x + jitter, spacing) - spacing / 2.0;
            const double gy = std::fmod(y + jitter, spacing) - spacing / 2.0;
            return gx * gx + gy * gy <= radius * radius;
          };
          v[r * cols + c] += 0.2 * coverage(static_cast<double>(c), static_cast<double>(r), 1.0, inside);
        }
      }
      break;
    }
  }
  return MaskedImage(spec.fine_grid(), std::move(v));
}

ImageSeries generate_fine_series(const SceneSpec& spec) {
  spec.validate();
  const Grid grid = spec.fine_grid();
  ImageSeries series(grid, BandSet::from_ids(spec.band_ids));

  Rng temporal(spec.seed, kTemporal);
  std::vector<double> gains = spec.gains, offsets = spec.offsets;
  if (gains.empty())
    for (std::size_t k = 0; k < spec.n_dates; ++k) gains.push_back(temporal.uniform(spec.gain_min, spec.gain_max));
  if (offsets.empty())
    for (std::size_t k = 0; k < spec.n_dates; ++k) offsets.push_back(temporal.uniform(spec.offset_min, spec.offset_max));

  std::vector<MaskedImage> bases;
  for (std::size_t b = 0; b < spec.band_ids.size(); ++b) bases.push_back(base_field(spec, b));

  const double f = static_cast<double>(spec.factor);
  for (std::size_t k = 0; k < spec.n_dates; ++k) {
    struct Patch {
      double cx, cy, radius, amplitude;
    };
    std::vector<Patch> patches;
    Rng patch_rng(spec.seed, kPatches, k);
    for (std::size_t p = 0; p < spec.patches_per_date; ++p) {
      const double cx = patch_rng.uniform(0.0, static_cast<double>(grid.cols));
      const double cy = patch_rng.uniform(0.0, static_cast<double>(grid.rows));
      const double sign = patch_rng.uniform() < 0.5 ? -1.0 : 1.0;
      patches.push_back({cx, cy, spec.patch_radius * f, sign * spec.patch_amplitude});
    }

    std::vector<MaskedImage> bands;
    for (std::size_t b = 0; b < spec.band_ids.size(); ++b) {
      Rng noise_rng(spec.seed, kFineNoise, (k << 16) | b);
      std::vector<double> v(grid.size());
      for (std::size_t r = 0; r < grid.rows; ++r) {
        for (std::size_t c = 0; c < grid.cols; ++c) {
          const std::size_t i = r * grid.cols + c;
          double x = gains[k] * bases[b].value(i) + offsets[k];
          for (const auto& p : patches) {
            const double dx = static_cast<double>(c) + 0.5 - p.cx;
            const double dy = static_cast<double>(r) + 0.5 - p.cy;
            const double d = std::sqrt(dx * dx + dy * dy) / p.radius;
            if (d < 1.0) x += p.amplitude * 0.5 * (1.0 + std::cos(std::numbers::pi * d));
          }
          if (spec.noise > 0.0) x += spec.noise * noise_rng.normal();
          v[i] = x;
        }
      }
      bands.emplace_back(grid, std::move(v));
    }
    series.append(spec.start_date.plus_days(static_cast<int>(k) * spec.date_step_days), std::move(bands));
  }
  return series;
}

ImageSeries degrade_to_coarse(const ImageSeries& fine, const SceneSpec& spec) {
  spec.validate();
  if (fine.bands().size() != spec.band_ids.size())
    throw Error(ErrorKind::DimensionMismatch, "series band count does not match the scene specification");
  const Grid coarse_grid = aggregate_grid(fine.grid(), spec.factor);
  ImageSeries out(coarse_grid, fine.bands());
  std::size_t k = 0;
  for (const auto& e : fine.entries()) {
    std::vector<MaskedImage> bands;
    for (std::size_t b = 0; b < e.bands.size(); ++b) {
      MaskedImage img = psf::upscale(e.bands[b], coarse_grid, spec.params_for(b), spec.kernel);
      if (spec.coarse_noise > 0.0) {
        Rng noise_rng(spec.seed, kCoarseNoise, (k << 16) | b);
        for (std::size_t i = 0; i < img.size(); ++i)
          if (img.valid(i)) img.set(i, img.value(i) + spec.coarse_noise * noise_rng.normal());
      }
      bands.push_back(std::move(img));
    }
    out.append(e.date, std::move(bands));
    ++k;
  }
  return out;
}

std::pair<ImageSeries, SeriesEntry> holdout(const ImageSeries& series, Date date) {
  ImageSeries reduced = series;
  SeriesEntry held = reduced.remove(date);
  return {std::move(reduced), std::move(held)};
}

double high_frequency_energy(const MaskedImage& img, double cutoff) {
  if (img.valid_count() != img.size())
    throw Error(ErrorKind::InvalidArgument, "high-frequency energy requires an all-valid image");
  if (!(cutoff > 0.0) || !(cutoff < 0.5)) throw Error(ErrorKind::InvalidArgument, "cutoff must lie in (0, 0.5)");
  const std::size_t rows = img.rows(), cols = img.cols();
  double mean = 0.0;
  for (double v : img.values()) mean += v;
  mean /= static_cast<double>(img.size());

  // Row DFTs, then column DFTs.
  std::vector<std::complex<double>> rowft(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t u = 0; u < cols; ++u) {
      std::complex<double> acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c)
        acc += (img.value(r, c) - mean) *
               std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(u * c % cols) / static_cast<double>(cols));
      rowft[r * cols + u] = acc;
    }
  double total = 0.0, high = 0.0;
  for (std::size_t v = 0; v < rows; ++v) {
    const double fy = std::abs(static_cast<double>(v <= rows / 2 ? v : rows - v) / static_cast<double>(rows));
    for (std::size_t u = 0; u < cols; ++u) {
      std::complex<double> acc = 0.0;
      for (std::size_t r = 0; r < rows; ++r)
        acc += rowft[r * cols + u] *
               std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(v * r % rows) / static_cast<double>(rows));
      const double fx = static_cast<double>(u <= cols / 2 ? u : cols - u) / static_cast<double>(cols);
      const double e = std::norm(acc);
      total += e;
      if (std::max(fx, fy) > cutoff) high += e;
    }
  }
  return total > 0.0 ? high / total : 0.0;
}

// ---------------------------------------------------------------------------
// Text form

namespace {

std::string join_doubles(const std::vector<double>& v) {
  std::vector<std::string> parts;
  for (double x : v) parts.push_back(format_double(x));
  return join(parts, ",");
}

std::vector<double> parse_doubles(const std::string& s, std::string_view what) {
  std::vector<double> out;
  for (const auto& p : split(s, ',')) out.push_back(parse_double(p, what));
  return out;
}

std::size_t parse_count(const std::string& s, std::string_view what) {
  const long long v = parse_integer(s, what);
  if (v < 0) throw Error(ErrorKind::Format, std::string(what) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string to_text(const SceneSpec& spec) {
  KeyValueDoc doc;
  doc.set("seed", std::to_string(spec.seed));
  doc.set("fine_rows", std::to_string(spec.fine_rows));
  doc.set("fine_cols", std::to_string(spec.fine_cols));
  doc.set("fine_pixel_size", format_double(spec.fine_pixel_size));
  doc.set("origin_x", format_double(spec.origin_x));
  doc.set("origin_y", format_double(spec.origin_y));
  doc.set("factor", std::to_string(spec.factor));
  doc.set("bands", join(spec.band_ids, ","));
  doc.set("generator", std::string(to_string(spec.generator)));
  doc.set("truncation_radius", format_double(spec.kernel.truncation_radius));
  doc.set("min_valid_fraction", format_double(spec.kernel.min_valid_fraction));
  doc.set("n_dates", std::to_string(spec.n_dates));
  doc.set("start_date", spec.start_date.iso());
  doc.set("date_step_days", std::to_string(spec.date_step_days));
  if (!spec.gains.empty()) doc.set("gains", join_doubles(spec.gains));
  if (!spec.offsets.empty()) doc.set("offsets", join_doubles(spec.offsets));
  doc.set("gain_min", format_double(spec.gain_min));
  doc.set("gain_max", format_double(spec.gain_max));
  doc.set("offset_min", format_double(spec.offset_min));
  doc.set("offset_max", format_double(spec.offset_max));
  doc.set("patches_per_date", std::to_string(spec.patches_per_date));
  doc.set("patch_amplitude", format_double(spec.patch_amplitude));
  doc.set("patch_radius", format_double(spec.patch_radius));
  doc.set("noise", format_double(spec.noise));
  doc.set("coarse_noise", format_double(spec.coarse_noise));
  for (std::size_t b = 0; b < spec.true_params.size(); ++b) {
    const auto& p = spec.true_params[b];
    doc.set("params." + spec.band_ids[b],
            format_double(p.shift_x) + " " + format_double(p.shift_y) + " " + format_double(p.sigma));
  }
  return "# synthetic scene specification\n" + doc.str();
}

SceneSpec parse_scene_spec(std::string_view text) {
  const KeyValueDoc doc = KeyValueDoc::parse(text);
  SceneSpec spec;
  std::vector<std::pair<std::string, std::string>> params;
  for (const auto& [key, value] : doc.entries()) {
    if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(parse_integer(value, key));
    } else if (key == "fine_rows") {
      spec.fine_rows = parse_count(value, key);
    } else if (key == "fine_cols") {
      spec.fine_cols = parse_count(value, key);
    } else if (key == "fine_pixel_size") {
      spec.fine_pixel_size = parse_double(value, key);
    } else if (key == "origin_x") {
      spec.origin_x = parse_double(value, key);
    } else if (key == "origin_y") {
      spec.origin_y = parse_double(value, key);
    } else if (key == "factor") {
      spec.factor = parse_count(value, key);
    } else if (key == "bands") {
      spec.band_ids = split(value, ',');
    } else if (key == "generator") {
      spec.generator = parse_base_field(value);
    } else if (key == "truncation_radius") {
      spec.kernel.truncation_radius = parse_double(value, key);
    } else if (key == "min_valid_fraction") {
      spec.kernel.min_valid_fraction = parse_double(value, key);
    } else if (key == "n_dates") {
      spec.n_dates = parse_count(value, key);
    } else if (key == "start_date") {
      spec.start_date = Date::parse(value);
    } else if (key == "date_step_days") {
      spec.date_step_days = static_cast<int>(parse_integer(value, key));
    } else if (key == "gains") {
      spec.gains = parse_doubles(value, key);
    } else if (key == "offsets") {
      spec.offsets = parse_doubles(value, key);
    } else if (key == "gain_min") {
      spec.gain_min = parse_double(value, key);
    } else if (key == "gain_max") {
      spec.gain_max = parse_double(value, key);
    } else if (key == "offset_min") {
      spec.offset_min = parse_double(value, key);
    } else if (key == "offset_max") {
      spec.offset_max = parse_double(value, key);
    } else if (key == "patches_per_date") {
      spec.patches_per_date = parse_count(value, key);
    } else if (key == "patch_amplitude") {
      spec.patch_amplitude = parse_double(value, key);
    } else if (key == "patch_radius") {
      spec.patch_radius = parse_double(value, key);
    } else if (key == "noise") {
      spec.noise = parse_double(value, key);
    } else if (key == "coarse_noise") {
      spec.coarse_noise = parse_double(value, key);
    } else if (key.rfind("params.", 0) == 0) {
      params.emplace_back(key.substr(7), value);
    } else {
      throw Error(ErrorKind::Format, "unknown scene key '" + key + "'");
    }
  }
  for (const auto& [band, value] : params) {
    auto it = std::find(spec.band_ids.begin(), spec.band_ids.end(), band);
    if (it == spec.band_ids.end()) throw Error(ErrorKind::Format, "params for unknown band '" + band + "'");
    const auto idx = static_cast<std::size_t>(it - spec.band_ids.begin());
    auto fields = split(value, ' ');
    fields.erase(std::remove(fields.begin(), fields.end(), std::string()), fields.end());
    if (fields.size() != 3) throw Error(ErrorKind::Format, "params." + band + " needs 'shift_x shift_y sigma'");
    if (spec.true_params.size() <= idx) spec.true_params.resize(idx + 1);
    spec.true_params[idx] = {parse_double(fields[0], "shift_x"), parse_double(fields[1], "shift_y"),
                             parse_double(fields[2], "sigma")};
  }
  spec.validate();
  return spec;
}

}  // namespace sitstd::synth
