#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sitstd/psf.hpp"
#include "sitstd/raster.hpp"

namespace sitstd::synth {

enum class BaseField {
  Smooth,   // sum of random-frequency sinusoids
  Shapes,   // anti-aliased discs and rectangles over a smooth background
  Steps,    // rectangles with soft (logistic) step edges
  Circles,  // regular lattice of discs near the coarse Nyquist spacing
};

std::string_view to_string(BaseField f);
BaseField parse_base_field(std::string_view name);

// Synthetic two-sensor scene. The seed determines every random draw.
struct SceneSpec {
  std::uint64_t seed = 1;
  std::size_t fine_rows = 300;
  std::size_t fine_cols = 300;
  double fine_pixel_size = 20.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::size_t factor = 15;
  std::vector<std::string> band_ids{"b1"};
  BaseField generator = BaseField::Smooth;
  // Ground-truth coarse-sensor PSF per band; missing bands use (0, 0, 1).
  std::vector<psf::UpscaleParams> true_params;
  psf::KernelOptions kernel;

  std::size_t n_dates = 7;
  Date start_date{2022, 9, 25};
  int date_step_days = 10;
  // Per-date global affine model; empty lists are drawn uniformly from the
  // ranges below.
  std::vector<double> gains;
  std::vector<double> offsets;
  double gain_min = 0.8;
  double gain_max = 1.2;
  double offset_min = -0.05;
  double offset_max = 0.05;
  // Localized change: discs with a raised-cosine profile, random sign.
  std::size_t patches_per_date = 0;
  double patch_amplitude = 0.05;
  double patch_radius = 2.0;  // coarse pixels

  double noise = 0.0;         // fine-level additive noise SD (reflectance)
  double coarse_noise = 0.0;  // coarse-level additive noise SD (reflectance)

  void validate() const;
  Grid fine_grid() const;
  Grid coarse_grid() const;
  psf::UpscaleParams params_for(std::size_t band) const;
};

// Human-editable `key = value` text, one key per line, `#` comments.
SceneSpec parse_scene_spec(std::string_view text);
std::string to_text(const SceneSpec& spec);

// Time-invariant base field of one band.
MaskedImage base_field(const SceneSpec& spec, std::size_t band);

// Date k: gain_k * base + offset_k + patches_k + noise.
ImageSeries generate_fine_series(const SceneSpec& spec);

// Forward sensor model: PSF upscale with the true parameters, then coarse noise.
ImageSeries degrade_to_coarse(const ImageSeries& fine, const SceneSpec& spec);

// Splits one date off a series.
std::pair<ImageSeries, SeriesEntry> holdout(const ImageSeries& series, Date date);

// Fraction of (mean-removed) DFT energy at frequencies whose larger axis
// component exceeds `cutoff` cycles per pixel (0 < cutoff < 0.5). Requires an
// all-valid image.
double high_frequency_energy(const MaskedImage& img, double cutoff = 0.25);

}  // namespace sitstd::synth
