#include <doctest.h>

#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "sitstd/error.hpp"
#include "sitstd/raster.hpp"

using namespace sitstd;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_SUITE("raster") {

TEST_CASE("grid centers and locate") {
  Grid g{100.0, 200.0, 10.0, 3, 4};
  CHECK(g.center(0, 0).x == 105.0);
  CHECK(g.center(0, 0).y == 205.0);
  CHECK(g.center(2, 3).x == 135.0);
  CHECK(g.center(2, 3).y == 225.0);
  auto cell = g.locate({139.9, 229.9});
  REQUIRE(cell);
  CHECK(*cell == CellIndex{2, 3});
  CHECK_FALSE(g.locate({140.0, 205.0}));
  CHECK_FALSE(g.locate({99.9, 205.0}));
  CHECK(pixel_centers(g).size() == 12);
  CHECK(kind_of([] { Grid{0, 0, 0.0, 1, 1}.validate(); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { Grid{0, 0, 1.0, 0, 1}.validate(); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("masked image arithmetic respects masks") {
  Grid g{0, 0, 1, 2, 2};
  MaskedImage a(g, {1, 2, 3, 4}, {1, 1, 0, 1});
  MaskedImage b(g, {10, 20, 30, 40}, {1, 0, 1, 1});
  MaskedImage s = add(a, b);
  CHECK(s.valid_count() == 2);
  CHECK(s.value(0) == 11);
  CHECK(s.value(3) == 44);
  CHECK_FALSE(s.valid(1));
  CHECK_FALSE(s.valid(2));
  CHECK(subtract(b, a).value(3) == 36);
  CHECK(scale(a, 2).value(1) == 4);
  CHECK(kind_of([&] { add(a, MaskedImage(Grid{0, 0, 2, 2, 2})); }) == ErrorKind::GridMismatch);
  CHECK(kind_of([&] { MaskedImage(g, std::vector<double>{1, 2}); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("identical compares only valid pixels") {
  Grid g{0, 0, 1, 1, 2};
  MaskedImage a(g, {1, 5}, {1, 0});
  MaskedImage b(g, {1, 7}, {1, 0});
  CHECK(identical(a, b));
  b.set(1, 5);
  CHECK_FALSE(identical(a, b));
}

TEST_CASE("dates parse, print and order") {
  const Date d = Date::parse("2022-09-25");
  CHECK(d.iso() == "2022-09-25");
  CHECK(d.plus_days(10).iso() == "2022-10-05");
  CHECK(d < d.plus_days(1));
  CHECK(kind_of([] { Date::parse("2022-02-30"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { Date::parse("2022-9-25"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { Date::parse("2022-09-25x"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("band sets reject duplicates") {
  CHECK(kind_of([] { BandSet::from_ids({"red", "red"}); }) == ErrorKind::InvalidArgument);
  BandSet s = BandSet::from_ids({"blue", "red", "nir"});
  CHECK(s.index_of("nir") == 2u);
  CHECK_FALSE(s.index_of("swir"));
  CHECK(s.select({2, 0}).ids() == std::vector<std::string>{"nir", "blue"});
}

TEST_CASE("series keeps strict date order") {
  Grid g{0, 0, 1, 2, 2};
  ImageSeries s(g, BandSet::from_ids({"b"}));
  const Date d0 = Date::parse("2021-01-01");
  s.append(d0.plus_days(5), {MaskedImage(g, 1.0)});
  CHECK(kind_of([&] { s.append(d0, {MaskedImage(g, 2.0)}); }) == ErrorKind::InvalidArgument);
  s.insert(d0, {MaskedImage(g, 2.0)});
  CHECK(s.dates() == std::vector<Date>{d0, d0.plus_days(5)});
  CHECK(kind_of([&] { s.insert(d0, {MaskedImage(g, 3.0)}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { s.append(d0.plus_days(9), {MaskedImage(Grid{0, 0, 1, 3, 3})}); }) == ErrorKind::GridMismatch);
  CHECK(kind_of([&] { s.append(d0.plus_days(9), {}); }) == ErrorKind::DimensionMismatch);
  CHECK(s.at(d0).bands[0].value(0) == 2.0);
  CHECK(kind_of([&] { (void)s.at(d0.plus_days(1)); }) == ErrorKind::NotFound);
  const SeriesEntry removed = s.remove(d0);
  CHECK(removed.date == d0);
  CHECK(s.size() == 1);
}

TEST_CASE("aggregation matches brute force and rejects indivisible sizes") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t f = 1 + rng() % 4;
    Grid g{0, 0, 10, f * (1 + rng() % 5), f * (1 + rng() % 5)};
    const MaskedImage img = oracle::random_image(rng, g, 0.3);
    const MaskedImage a = aggregate_mean(img, f);
    const MaskedImage o = oracle::aggregate(img, f);
    CHECK(oracle::same_mask(a, o));
    CHECK(oracle::max_abs_diff(a, o) < 1e-12);
  }
  MaskedImage odd(Grid{0, 0, 1, 301, 300});
  try {
    aggregate_mean(odd, 15);
    FAIL("expected dimension mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
    CHECK(std::string(e.what()).find("301x300") != std::string::npos);
    CHECK(std::string(e.what()).find("15") != std::string::npos);
  }
}

TEST_CASE("aggregating a constant gives the constant") {
  MaskedImage img(Grid{0, 0, 20, 30, 45}, 0.42);
  const MaskedImage a = aggregate_mean(img, 15);
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.value(i) == doctest::Approx(0.42).epsilon(1e-15));
}

TEST_CASE("bilinear identity is exact including the last row and column") {
  std::mt19937_64 rng(3);
  const Grid g = oracle::random_grid(rng, 2, 9);
  const MaskedImage img = oracle::random_image(rng, g);
  const MaskedImage out = reproject_bilinear(img, g);
  CHECK(identical(out, img));
}

TEST_CASE("bilinear matches the tent-weight oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    Grid src{0, 0, 10, 4 + rng() % 6, 4 + rng() % 6};
    std::uniform_real_distribution<double> off(-15, 15);
    Grid tgt{off(rng), off(rng), 3.7 + (rng() % 5), 6 + rng() % 6, 6 + rng() % 6};
    const MaskedImage img = oracle::random_image(rng, src, trial % 2 ? 0.15 : 0.0);
    const MaskedImage a = reproject_bilinear(img, tgt);
    const MaskedImage o = oracle::bilinear(img, tgt);
    CHECK(oracle::same_mask(a, o));
    CHECK(oracle::max_abs_diff(a, o) < 1e-12);
  }
}

TEST_CASE("bilinear interpolates a plane exactly") {
  Grid src{0, 0, 10, 6, 6};
  MaskedImage plane(src, 0.0, false);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 6; ++c) plane.set(r, c, 2.0 + 0.5 * static_cast<double>(r) - 0.25 * static_cast<double>(c));
  Grid tgt{7, 7, 4, 10, 10};
  const MaskedImage out = reproject_bilinear(plane, tgt);
  CHECK(out.valid_count() > 0);
  for (std::size_t r = 0; r < tgt.rows; ++r)
    for (std::size_t c = 0; c < tgt.cols; ++c) {
      if (!out.valid(r, c)) continue;
      const auto p = tgt.center(r, c);
      const double fr = (p.y - 5.0) / 10.0, fc = (p.x - 5.0) / 10.0;
      CHECK(out.value(r, c) == doctest::Approx(2.0 + 0.5 * fr - 0.25 * fc).epsilon(1e-12));
    }
}

TEST_CASE("nearest neighbour picks the containing cell") {
  Grid src{0, 0, 10, 3, 3};
  MaskedImage img(src, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Grid tgt{0, 0, 5, 6, 6};
  const MaskedImage out = reproject_nearest(img, tgt);
  CHECK(out.value(0, 0) == 1);
  CHECK(out.value(5, 5) == 9);
  CHECK(out.value(2, 3) == 5);
  CHECK(reproject(img, tgt, parse_resampler("nearest")).value(4, 1) == 7);
  CHECK(kind_of([] { parse_resampler("cubic"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { reproject_bilinear(MaskedImage{}, Grid{}); }) == ErrorKind::EmptyInput);
}

}  // TEST_SUITE
