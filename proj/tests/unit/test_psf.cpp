#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../oracles.hpp"
#include "sitstd/error.hpp"
#include "sitstd/psf.hpp"
#include "sitstd/synth.hpp"

using namespace sitstd;
using namespace sitstd::psf;

namespace {

synth::SceneSpec small_scene(std::uint64_t seed, UpscaleParams truth) {
  synth::SceneSpec s;
  s.seed = seed;
  s.fine_rows = s.fine_cols = 150;
  s.factor = 10;
  s.n_dates = 1;
  s.true_params = {truth};
  return s;
}

// Concave test objective with its maximum at `peak`.
Objective bowl(UpscaleParams peak) {
  return [peak](const UpscaleParams& p) -> std::optional<double> {
    const double dx = p.shift_x - peak.shift_x, dy = p.shift_y - peak.shift_y, ds = p.sigma - peak.sigma;
    return 1.0 - 0.01 * dx * dx - 0.02 * dy * dy - 0.5 * ds * ds;
  };
}

}  // namespace

TEST_SUITE("psf") {

TEST_CASE("gaussian density") {
  CHECK(gaussian_density(0.0, 1.0) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)));
  CHECK(gaussian_density(2.0, 1.0) == doctest::Approx(std::exp(-2.0) / (2.0 * std::numbers::pi)));
}

TEST_CASE("kernel weights are normalized and report coverage") {
  Grid fine{0, 0, 20, 120, 120};
  const double cps = 300.0;
  const UpscaleParams p{0.0, 0.0, 0.8};
  const WeightMap interior = gaussian_weights(p, {1200, 1200}, cps, fine, {}, 3.0);
  double sum = 0.0;
  for (const auto& e : interior.entries) sum += e.weight;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(interior.valid_fraction == doctest::Approx(1.0));
  const WeightMap corner = gaussian_weights(p, {0, 0}, cps, fine, {}, 3.0);
  CHECK(corner.valid_fraction == doctest::Approx(0.25).epsilon(0.02));
  CHECK_THROWS_AS(gaussian_weights(p, {-5000, -5000}, cps, fine, {}, 3.0), Error);
}

TEST_CASE("upscale matches the direct oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> shift(-1.5, 1.5), sig(0.3, 1.6);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t f = 3 + rng() % 4;
    Grid fine{0, 0, 10, f * (4 + rng() % 4), f * (4 + rng() % 4)};
    const Grid coarse = aggregate_grid(fine, f);
    const MaskedImage img = oracle::random_image(rng, fine, trial % 3 == 0 ? 0.2 : 0.0);
    const UpscaleParams p{shift(rng), shift(rng), sig(rng)};
    const MaskedImage a = upscale(img, coarse, p);
    const MaskedImage o = oracle::upscale(img, coarse, p);
    CHECK(oracle::same_mask(a, o));
    CHECK(oracle::max_abs_diff(a, o) < 1e-10);
  }
}

TEST_CASE("upscale agrees with the explicit weight map") {
  std::mt19937_64 rng(2);
  Grid fine{0, 0, 20, 40, 40};
  const Grid coarse = aggregate_grid(fine, 8);
  const MaskedImage img = oracle::random_image(rng, fine, 0.1);
  const UpscaleParams p{0.3, -0.6, 0.9};
  const MaskedImage up = upscale(img, coarse, p);
  for (std::size_t r = 0; r < coarse.rows; ++r)
    for (std::size_t c = 0; c < coarse.cols; ++c) {
      const WeightMap w = gaussian_weights(p, coarse.center(r, c), coarse.pixel_size, fine, img.mask(), 3.0);
      REQUIRE(up.valid(r, c) == (w.valid_fraction >= 0.5));
      if (!up.valid(r, c)) continue;
      double v = 0.0;
      for (const auto& e : w.entries) v += e.weight * img.value(e.index);
      CHECK(std::abs(v - up.value(r, c)) < 1e-12);
    }
}

TEST_CASE("upscale preserves constants and rejects disjoint grids") {
  MaskedImage img(Grid{0, 0, 20, 60, 60}, 0.25);
  const MaskedImage up = upscale(img, aggregate_grid(img.grid(), 15), {0.4, 0.2, 1.3});
  CHECK(up.valid_count() > 0);
  for (std::size_t i = 0; i < up.size(); ++i)
    if (up.valid(i)) CHECK(up.value(i) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK_THROWS_AS(upscale(img, Grid{1e6, 0, 300, 4, 4}, {}), Error);
  try {
    upscale(img, Grid{1e6, 0, 300, 4, 4}, {});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Extent);
  }
}

TEST_CASE("shift sign: translating content by k coarse pixels moves the fitted shift by k") {
  std::mt19937_64 rng(9);
  const std::size_t f = 5;
  Grid fine{0, 0, 10, 60, 60};
  const MaskedImage img = oracle::random_image(rng, fine);
  // moved(r, c) = img(r - f, c - 2f): content shifted +2 coarse px east, +1 south.
  MaskedImage moved(fine, 0.0, false);
  for (std::size_t r = f; r < fine.rows; ++r)
    for (std::size_t c = 2 * f; c < fine.cols; ++c) moved.set(r, c, img.value(r - f, c - 2 * f));
  const Grid coarse = aggregate_grid(fine, f);
  const MaskedImage a = upscale(img, coarse, {0.0, 0.0, 0.7});
  const MaskedImage b = upscale(moved, coarse, {2.0, 1.0, 0.7});
  std::size_t compared = 0;
  for (std::size_t r = 3; r + 3 < coarse.rows; ++r)
    for (std::size_t c = 3; c + 4 < coarse.cols; ++c) {
      if (!a.valid(r, c) || !b.valid(r, c)) continue;
      CHECK(std::abs(a.value(r, c) - b.value(r, c)) < 1e-12);
      ++compared;
    }
  CHECK(compared > 20);
}

TEST_CASE("greedy pixel-level search climbs to the lattice optimum") {
  SearchOptions o;
  const SearchResult r = greedy_pixel_level(bowl({3.0, -2.0, 1.4}), o);
  CHECK(r.params == UpscaleParams{3.0, -2.0, 1.4});
  CHECK(r.trace.accepted_strictly_increasing());
  REQUIRE_FALSE(r.trace.entries.empty());
  CHECK(r.trace.entries.front().iteration == 0);
  CHECK(r.trace.entries.front().accepted);
  CHECK(r.trace.accepted_count() == 1 + 3 + 2 + 4);
}

TEST_CASE("greedy ties go to the earliest move") {
  const Objective symmetric = [](const UpscaleParams& p) -> std::optional<double> {
    return -std::abs(std::abs(p.shift_x) - 1.0) - std::abs(p.sigma - 1.0);
  };
  const SearchResult r = greedy_pixel_level(symmetric, SearchOptions{});
  CHECK(r.params.shift_x == 1.0);
}

TEST_CASE("greedy respects the sigma floor and skips undefined candidates") {
  const Objective narrow = [](const UpscaleParams& p) -> std::optional<double> {
    if (p.shift_x != 0.0) return std::nullopt;
    return -p.sigma;
  };
  const SearchResult r = greedy_pixel_level(narrow, SearchOptions{});
  CHECK(r.params.sigma == doctest::Approx(0.1).epsilon(1e-12));
  for (const auto& e : r.trace.entries) CHECK(e.params.sigma >= 0.1 - 1e-12);
  const Objective never = [](const UpscaleParams&) -> std::optional<double> { return std::nullopt; };
  CHECK_THROWS_AS(greedy_pixel_level(never, SearchOptions{}), Error);
}

TEST_CASE("sub-pixel refinement lands on the 0.1 lattice without drift") {
  const SearchResult r = greedy_subpixel(bowl({1.3, -0.7, 1.0}), {1.0, -1.0, 1.0}, std::nullopt, SearchOptions{});
  CHECK(r.params.shift_x == 1.3);
  CHECK(r.params.shift_y == -0.7);
  CHECK(r.params.sigma == 1.0);
  CHECK(r.trace.accepted_strictly_increasing());
}

TEST_CASE("fit_pair recovers a known operator on a synthetic pair") {
  const UpscaleParams truth{1.0, -0.6, 1.2};
  const auto spec = small_scene(5, truth);
  const ImageSeries fine = synth::generate_fine_series(spec);
  const ImageSeries coarse = synth::degrade_to_coarse(fine, spec);
  const SearchResult r = fit_pair(fine[0].bands[0], coarse[0].bands[0]);
  CHECK(r.params.shift_x == doctest::Approx(truth.shift_x).epsilon(1e-9));
  CHECK(r.params.shift_y == doctest::Approx(truth.shift_y).epsilon(1e-9));
  CHECK(r.params.sigma == doctest::Approx(truth.sigma).epsilon(1e-9));
  CHECK(r.rho == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.trace.accepted_strictly_increasing());
  // Exactly one start entry, at the head of the trace.
  std::size_t starts = 0;
  for (const auto& e : r.trace.entries) starts += e.iteration == 0 ? 1 : 0;
  CHECK(starts == 1);
  const std::string csv = trace_to_csv(r.trace);
  CHECK(csv.rfind("iteration,phase,x,y,sigma,rho,accepted\n0,pixel,0,0,1,", 0) == 0);
  CHECK(csv.find(",subpixel,") != std::string::npos);
}

TEST_CASE("grid searches") {
  const UpscaleParams truth{0.0, 0.0, 0.7};
  const auto spec = small_scene(6, truth);
  const ImageSeries fine = synth::generate_fine_series(spec);
  const ImageSeries coarse = synth::degrade_to_coarse(fine, spec);
  const SearchResult s = grid_search_sigma(fine[0].bands[0], coarse[0].bands[0]);
  CHECK(s.params.sigma == doctest::Approx(0.7));
  CHECK(s.trace.entries.size() == 17);
  CHECK(s.trace.accepted_strictly_increasing());

  const auto shifted_spec = small_scene(6, {3.0, -1.0, 0.7});
  const ImageSeries c2 = synth::degrade_to_coarse(fine, shifted_spec);
  SearchOptions o;
  o.shift_window = 1;
  const SearchResult sh = grid_search_shift(fine[0].bands[0], c2[0].bands[0], {0, 0, 0.7}, o);
  CHECK(sh.params.shift_x == 3.0);
  CHECK(sh.params.shift_y == -1.0);
  CHECK(sh.trace.warnings.empty());
  o.shift_cap = 2;
  const SearchResult capped = grid_search_shift(fine[0].bands[0], c2[0].bands[0], {0, 0, 0.7}, o);
  CHECK(capped.params.shift_x == 2.0);
  CHECK(capped.trace.warnings.size() == 1);
}

TEST_CASE("generalized search and leave-one-out") {
  const UpscaleParams truth{-1.0, 1.0, 1.1};
  auto spec = small_scene(7, truth);
  spec.n_dates = 3;
  const ImageSeries fine = synth::generate_fine_series(spec);
  const ImageSeries coarse = synth::degrade_to_coarse(fine, spec);
  std::vector<ImagePair> pairs;
  for (std::size_t i = 0; i < 3; ++i) pairs.push_back({fine[i].bands[0], coarse[i].bands[0]});
  const SearchResult g = generalized_search(pairs);
  CHECK(g.params.shift_x == doctest::Approx(-1.0));
  CHECK(g.params.shift_y == doctest::Approx(1.0));
  CHECK(g.params.sigma == doctest::Approx(1.1));
  CHECK(g.trace.excluded_pairs.empty());
  CHECK(g.trace.accepted_strictly_increasing());

  const std::vector<FoldResult> folds = loo_evaluate_generalized(pairs);
  REQUIRE(folds.size() == 3);
  for (const auto& f : folds) {
    CHECK(f.error.empty());
    REQUIRE(f.held_out_rho);
    CHECK(*f.held_out_rho == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(loo_evaluate_generalized(std::span(pairs).first(2)), Error);
  CHECK_THROWS_AS(generalized_search({}), Error);

  // A pair with a flat coarse image has no defined objective and drops out.
  const MaskedImage flat(coarse.grid(), 0.3);
  pairs.push_back({fine[0].bands[0], flat});
  const SearchResult with_flat = generalized_search(pairs);
  INFO("excluded: ", with_flat.trace.excluded_pairs.size());
  CHECK(with_flat.trace.excluded_pairs == std::vector<std::size_t>{3});
  CHECK(with_flat.params.sigma == doctest::Approx(1.1));
}

}  // TEST_SUITE
