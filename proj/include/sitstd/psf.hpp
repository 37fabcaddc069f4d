#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sitstd/raster.hpp"

namespace sitstd::psf {

// Upscaling operator parameters, all in coarse-pixel units. A positive shift_x
// moves the sampling center east (+x), a positive shift_y moves it toward
// increasing rows (+y). Consequently, translating the fine image content by
// +k coarse pixels along an axis raises the recovered shift on that axis by k.
struct UpscaleParams {
  double shift_x = 0.0;
  double shift_y = 0.0;
  double sigma = 1.0;

  void validate() const;
  bool operator==(const UpscaleParams&) const = default;
};

std::string describe(const UpscaleParams& p);

struct KernelOptions {
  // Fine pixels farther than truncation_radius * sigma from the kernel center
  // are dropped.
  double truncation_radius = 3.0;
  // A coarse pixel is valid when its valid fine weight is at least this
  // fraction of the weight the truncated kernel would have on a complete,
  // unbounded fine lattice.
  double min_valid_fraction = 0.5;

  void validate() const;
};

// Isotropic Gaussian density 1 / (2 pi sigma^2) * exp(-d^2 / (2 sigma^2)).
double gaussian_density(double distance, double sigma);

struct WeightEntry {
  std::size_t index = 0;  // row-major fine pixel index
  double weight = 0.0;
};

struct WeightMap {
  std::vector<WeightEntry> entries;  // normalized, sum to 1
  double valid_fraction = 0.0;       // valid weight / unbounded-lattice weight
};

// Kernel weights of one coarse pixel over the fine grid. `mask` may be empty,
// meaning every fine pixel is valid. Throws EmptyKernel when no valid fine
// pixel falls inside the truncation radius.
WeightMap gaussian_weights(const UpscaleParams& params, Point coarse_center, double coarse_pixel_size,
                           const Grid& fine_grid, std::span<const std::uint8_t> mask, double truncation_radius);

// Gaussian PSF simulation of `fine` sampled at every center of `coarse_grid`.
MaskedImage upscale(const MaskedImage& fine, const Grid& coarse_grid, const UpscaleParams& params,
                    const KernelOptions& options = {});

// Pearson correlation between upscale(fine) and coarse over jointly valid
// coarse pixels; nullopt when undefined.
std::optional<double> try_objective(const MaskedImage& fine, const MaskedImage& coarse, const UpscaleParams& params,
                                    const KernelOptions& options = {});
// Throws UndefinedObjective when undefined.
double pairwise_objective(const MaskedImage& fine, const MaskedImage& coarse, const UpscaleParams& params,
                          const KernelOptions& options = {});

// ---------------------------------------------------------------------------
// Searches

enum class Phase { PixelLevel, SubPixel };

std::string_view to_string(Phase p);

struct TraceEntry {
  int iteration = 0;
  Phase phase = Phase::PixelLevel;
  UpscaleParams params;
  std::optional<double> rho;
  bool accepted = false;
};

struct SearchTrace {
  std::vector<TraceEntry> entries;
  std::vector<std::string> warnings;
  // Pair indices whose objective was undefined at some evaluated candidate
  // (generalized searches only).
  std::vector<std::size_t> excluded_pairs;

  // True when the objective strictly increases along accepted entries.
  bool accepted_strictly_increasing() const;
  std::size_t accepted_count() const;
  void append(const SearchTrace& other);
};

// CSV with header iteration,phase,x,y,sigma,rho,accepted.
std::string trace_to_csv(const SearchTrace& trace);

struct SearchResult {
  UpscaleParams params;
  double rho = 0.0;
  SearchTrace trace;
};

struct SearchOptions {
  KernelOptions kernel;
  UpscaleParams start{0.0, 0.0, 1.0};
  double shift_step = 1.0;
  double sigma_step = 0.1;
  double subpixel_step = 0.1;
  // Moves that would take sigma below this floor are skipped.
  double sigma_floor = 0.1;
  // sigma grid search bounds (inclusive) and step.
  double sigma_grid_min = 0.4;
  double sigma_grid_max = 2.0;
  double sigma_grid_step = 0.1;
  // Integer shift search: initial half-window and hard cap, in coarse pixels.
  int shift_window = 2;
  int shift_cap = 8;
  std::size_t max_iterations = 100000;

  void validate() const;
};

using Objective = std::function<std::optional<double>(const UpscaleParams&)>;

// Exhaustive sigma scan with zero shifts; ties resolve to the smaller sigma.
SearchResult grid_search_sigma(const MaskedImage& fine, const MaskedImage& coarse, const SearchOptions& options = {});

// Integer shift scan at fixed sigma over a window that grows by one pixel per
// side while the best shift sits on its border, up to shift_cap.
SearchResult grid_search_shift(const MaskedImage& fine, const MaskedImage& coarse, const UpscaleParams& params,
                               const SearchOptions& options = {});

// Greedy walk over the six pixel-level moves (+-1 shift, +-0.1 sigma) from
// options.start; the single best strictly improving move wins each round.
SearchResult greedy_joint_search(const MaskedImage& fine, const MaskedImage& coarse, const SearchOptions& options = {});

// Greedy walk over +-0.1 shift moves at fixed sigma.
SearchResult subpixel_refine(const MaskedImage& fine, const MaskedImage& coarse, const UpscaleParams& params,
                             const SearchOptions& options = {});

// greedy_joint_search followed by subpixel_refine, one combined trace.
SearchResult fit_pair(const MaskedImage& fine, const MaskedImage& coarse, const SearchOptions& options = {});

// Objective-agnostic building blocks used by the searches above.
SearchResult greedy_pixel_level(const Objective& objective, const SearchOptions& options);
SearchResult greedy_subpixel(const Objective& objective, const UpscaleParams& start, std::optional<double> start_rho,
                             const SearchOptions& options);

struct ImagePair {
  std::reference_wrapper<const MaskedImage> fine;
  std::reference_wrapper<const MaskedImage> coarse;
};

// Same policy as fit_pair, maximizing the mean objective across pairs. Pairs
// whose objective is undefined at a candidate drop out of that candidate's
// mean and are listed in trace.excluded_pairs.
SearchResult generalized_search(std::span<const ImagePair> pairs, const SearchOptions& options = {});

struct FoldResult {
  UpscaleParams params;
  std::optional<double> held_out_rho;
  std::string error;
};

// Leave-one-out: fold i fits generalized parameters on every pair except i and
// scores pair i with them.
std::vector<FoldResult> loo_evaluate_generalized(std::span<const ImagePair> pairs, const SearchOptions& options = {});

}  // namespace sitstd::psf
