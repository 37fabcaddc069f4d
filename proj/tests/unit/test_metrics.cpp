#include <doctest.h>

#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "sitstd/error.hpp"
#include "sitstd/metrics.hpp"

using namespace sitstd;
using namespace sitstd::metrics;

TEST_SUITE("metrics") {

TEST_CASE("pearson and rmse agree with the oracle on masked random images") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Grid g = oracle::random_grid(rng, 3, 20);
    const MaskedImage a = oracle::random_image(rng, g, 0.2);
    MaskedImage b = oracle::random_image(rng, g, 0.2);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (b.valid(i) && a.valid(i)) b.set(i, 0.5 * a.value(i) + b.value(i));
    const auto p = try_pearson(a, b);
    const auto o = oracle::pearson(a, b);
    REQUIRE(p.has_value() == o.has_value());
    if (p) CHECK(std::abs(*p - *o) < 1e-12);
    CHECK(std::abs(rmse(a, b) - oracle::rmse(a, b)) < 1e-12);
  }
}

TEST_CASE("pearson edge cases") {
  Grid g{0, 0, 1, 1, 4};
  MaskedImage a(g, {1, 2, 3, 4});
  CHECK(pearson(a, a) == doctest::Approx(1.0));
  CHECK(pearson(a, scale(a, -3)) == doctest::Approx(-1.0));
  MaskedImage flat(g, 5.0);
  CHECK_FALSE(try_pearson(a, flat));
  MaskedImage sparse(g, {1, 2, 3, 4}, {1, 1, 0, 0});
  CHECK_FALSE(try_pearson(a, sparse));
  CHECK_THROWS_AS(pearson(a, flat), Error);
  CHECK_THROWS_AS(rmse(a, MaskedImage(g, 0.0, false)), Error);
  CHECK(rmse(a, a) == 0.0);
}

TEST_CASE("roberts feature matches the oracle and leaves the border invalid") {
  std::mt19937_64 rng(4);
  const Grid g = oracle::random_grid(rng, 2, 15);
  const MaskedImage img = oracle::random_image(rng, g, 0.1);
  const MaskedImage s = roberts_edge_feature(img);
  const MaskedImage o = oracle::roberts(img);
  CHECK(oracle::same_mask(s, o));
  CHECK(oracle::max_abs_diff(s, o) < 1e-15);
  for (std::size_t c = 0; c < g.cols; ++c) CHECK_FALSE(s.valid(g.rows - 1, c));
  CHECK_THROWS_AS(roberts_edge_feature(MaskedImage(Grid{0, 0, 1, 1, 5})), Error);
}

TEST_CASE("nearest-rank percentile") {
  CHECK(nearest_rank_percentile({5, 1, 4, 2, 3}, 90) == 5);
  CHECK(nearest_rank_percentile({5, 1, 4, 2, 3}, 40) == 2);
  CHECK(nearest_rank_percentile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 90) == 9);
  CHECK(nearest_rank_percentile({7}, 90) == 7);
}

TEST_CASE("edge accuracy matches the oracle and has the documented sign") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Grid g = oracle::random_grid(rng, 8, 25);
    const MaskedImage ref = oracle::random_image(rng, g, 0.05);
    const MaskedImage pred = oracle::random_image(rng, g, 0.05);
    CHECK(std::abs(edge_accuracy(ref, pred) - oracle::edge(ref, pred)) < 1e-12);
    CHECK(std::abs(edge_accuracy(ref, ref)) < 1e-12);
  }
  // Scaling the prediction's contrast about any level scales its features.
  const Grid g{0, 0, 1, 20, 20};
  const MaskedImage ref = oracle::random_image(rng, g);
  CHECK(edge_accuracy(ref, scale(ref, 2.0)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(edge_accuracy(ref, scale(ref, 0.5)) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(edge_accuracy(MaskedImage(g, 1.0), MaskedImage(g, 1.0)), Error);
}

TEST_CASE("metric names and band averages") {
  CHECK(parse_metric("rho") == Metric::Rho);
  CHECK(to_string(Metric::Edge) == "edge");
  CHECK_THROWS_AS(parse_metric("ssim"), Error);
  const double v[] = {-0.5, 0.25};
  const BandSummary s = band_average(v);
  CHECK(s.mean == -0.125);
  CHECK(s.mean_abs == 0.375);
}

TEST_CASE("report CSV and table layout") {
  MetricReport r;
  r.metric = Metric::Edge;
  r.method = "absis";
  r.date = "2022-10-05";
  r.per_band = {{"b1", -0.5}, {"b2", 0.25}};
  MetricReport raw = r;
  raw.method = "raw";
  raw.per_band = {{"b1", 0.1}, {"b2", 0.3}};
  const std::vector<MetricReport> reports{r, raw};
  const std::string csv = to_csv(reports);
  CHECK(csv.rfind("date,method,band,metric,value\n", 0) == 0);
  CHECK(csv.find("2022-10-05,absis,b1,edge,-0.5\n") != std::string::npos);
  CHECK(csv.find("2022-10-05,absis,mean,edge,-0.125\n") != std::string::npos);
  CHECK(csv.find("2022-10-05,absis,mean_abs,edge,0.375\n") != std::string::npos);
  const std::string table = to_table(reports);
  CHECK(table.find("absis") != std::string::npos);
  CHECK(table.find("Mean(|.|)") != std::string::npos);
}

}  // TEST_SUITE
