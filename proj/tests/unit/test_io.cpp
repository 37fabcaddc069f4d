#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <random>

#include "../oracles.hpp"
#include "sitstd/error.hpp"
#include "sitstd/io.hpp"

using namespace sitstd;
using namespace sitstd::io;

namespace {

void put_le32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_le64(std::string& s, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

// Hand-assembled 1-date, 1-band, 2x2 container.
std::string handmade(const std::string& header, const std::vector<double>& payload) {
  std::string s = "SITSRAST";
  put_le32(s, 1);
  put_le32(s, static_cast<std::uint32_t>(header.size()));
  s += header;
  for (double v : payload) put_le64(s, v);
  return s;
}

const std::string kHeader =
    "rows=2\ncols=2\nbands=1\ndates=1\norigin_x=100\norigin_y=-50\npixel_size=30\nnodata=-9999\n"
    "band_ids=red\ndate_list=2022-09-25\n";

Error error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  return Error(ErrorKind::Io, "no error");
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("hand-built file decodes with the nodata pixel masked") {
  const std::string bytes = handmade(kHeader, {0.1, -9999.0, 0.3, 0.4});
  RasterHeader h;
  const ImageSeries s = decode_series(bytes, &h);
  CHECK(h.grid == Grid{100, -50, 30, 2, 2});
  CHECK(h.nodata == -9999.0);
  REQUIRE(s.size() == 1);
  CHECK(s[0].date.iso() == "2022-09-25");
  const MaskedImage& img = s[0].bands[0];
  CHECK(img.valid(0, 0));
  CHECK_FALSE(img.valid(0, 1));
  CHECK(img.value(1, 0) == 0.3);
  CHECK(s.bands()[0].id == "red");
  // Re-encoding reproduces the handmade bytes.
  CHECK(encode_series(s) == bytes);
}

TEST_CASE("format errors carry offsets and byte counts") {
  const std::string good = handmade(kHeader, {0.1, 0.2, 0.3, 0.4});
  const Error truncated = error_of([&] { decode_series(std::string_view(good).substr(0, good.size() - 3)); });
  CHECK(truncated.kind() == ErrorKind::Format);
  const std::string msg = truncated.what();
  CHECK(msg.find("expected 32 bytes, got 29") != std::string::npos);
  CHECK(msg.find("byte " + std::to_string(16 + kHeader.size())) != std::string::npos);

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(error_of([&] { decode_series(bad_magic); }).kind() == ErrorKind::Format);
  CHECK(std::string(error_of([&] { decode_series(bad_magic); }).what()).rfind("byte 0:", 0) == 0);

  std::string bad_version = good;
  bad_version[8] = 2;
  CHECK(std::string(error_of([&] { decode_series(bad_version); }).what()).rfind("byte 8:", 0) == 0);

  std::string bad_header = kHeader;
  bad_header.replace(bad_header.find("date_list=2022-09-25"), 20, "date_list=2022-13-25");
  CHECK(error_of([&] { decode_series(handmade(bad_header, {1, 2, 3, 4})); }).kind() == ErrorKind::Format);
  bad_header = kHeader;
  bad_header.replace(bad_header.find("rows=2"), 6, "rows=x");
  CHECK(std::string(error_of([&] { decode_series(handmade(bad_header, {1, 2, 3, 4})); }).what()).rfind("byte 16:", 0) == 0);
  CHECK(error_of([&] { decode_series("SITS"); }).kind() == ErrorKind::Format);
}

TEST_CASE("dates must be strictly increasing on read") {
  std::string h = kHeader;
  h.replace(h.find("dates=1"), 7, "dates=2");
  h.replace(h.find("date_list=2022-09-25"), 20, "date_list=2022-09-25,2022-09-25");
  CHECK(error_of([&] { decode_series(handmade(h, std::vector<double>(8, 0.5))); }).kind() == ErrorKind::Format);
}

TEST_CASE("round trip is bit-identical, including NaN nodata") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const Grid g = oracle::random_grid(rng, 1, 12);
    std::vector<Band> bands{{"b1", 490.0}, {"b2", std::nullopt}};
    ImageSeries s(g, BandSet(bands));
    Date d = Date::parse("2019-02-27");
    for (int k = 0; k < 3; ++k, d = d.plus_days(7))
      s.append(d, {oracle::random_image(rng, g, 0.2), oracle::random_image(rng, g, 0.2)});
    KeyValueDoc cfg;
    cfg.set("window", "5");
    const double nodata = trial % 2 ? std::nan("") : kDefaultNodata;
    RasterHeader h;
    const ImageSeries back = decode_series(encode_series(s, nodata, cfg), &h);
    CHECK(identical(back, s));
    CHECK(h.config.require("window") == "5");
    CHECK(std::isnan(h.nodata) == std::isnan(nodata));
  }
}

TEST_CASE("a valid pixel equal to nodata cannot be written") {
  ImageSeries s(Grid{0, 0, 1, 1, 2}, BandSet::from_ids({"b"}));
  s.append(Date::parse("2020-01-01"), {MaskedImage(Grid{0, 0, 1, 1, 2}, {1.0, -9999.0})});
  CHECK(error_of([&] { encode_series(s); }).kind() == ErrorKind::InvalidArgument);
  CHECK_NOTHROW(encode_series(s, std::nan("")));
}

TEST_CASE("band ids that would break the header are rejected") {
  ImageSeries s(Grid{}, BandSet::from_ids({"a,b"}));
  CHECK(error_of([&] { encode_series(s); }).kind() == ErrorKind::InvalidArgument);
}

TEST_CASE("params documents round trip") {
  std::vector<ParamRecord> recs{{"b1", Date::parse("2022-09-25"), {0.1, -1.2, 1.3}, 0.987654321},
                                {"b1", std::nullopt, {1.0, 0.0, 0.7}, std::nullopt}};
  KeyValueDoc cfg;
  cfg.set("strategy", "greedy");
  const KeyValueDoc doc = params_to_doc(recs, cfg);
  const std::string text = doc.str();
  CHECK(text.find("config.strategy = greedy\n") != std::string::npos);
  CHECK(text.find("b1@2022-09-25.shift_y = -1.2\n") != std::string::npos);
  const auto back = params_from_doc(KeyValueDoc::parse(text));
  REQUIRE(back.size() == 2);
  CHECK(back[0].params == recs[0].params);
  CHECK(back[0].date == recs[0].date);
  CHECK(back[0].objective == recs[0].objective);
  CHECK_FALSE(back[1].date);
  CHECK_FALSE(back[1].objective);
  CHECK_THROWS_AS(params_from_doc(KeyValueDoc::parse("b1.shift_x = 1\n")), Error);
  CHECK_THROWS_AS(params_from_doc(KeyValueDoc::parse("b1.tilt = 1\n")), Error);
}

TEST_CASE("key-value documents") {
  const KeyValueDoc d = KeyValueDoc::parse("# comment\n a = 1 \n\nb=two words\n");
  CHECK(d.require("a") == "1");
  CHECK(d.require("b") == "two words");
  CHECK_FALSE(d.find("c"));
  CHECK_THROWS_AS(KeyValueDoc::parse("a = 1\na = 2\n"), Error);
  CHECK_THROWS_AS(KeyValueDoc::parse("novalue\n"), Error);
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(parse_double(format_double(0.1), "x") == 0.1);
  CHECK_THROWS_AS(parse_double("1.0x", "x"), Error);
}

TEST_CASE("labeled traces and config comments") {
  psf::SearchTrace t;
  t.entries.push_back({0, psf::Phase::PixelLevel, {0, 0, 1}, 0.5, true});
  t.entries.push_back({1, psf::Phase::PixelLevel, {1, 0, 1}, std::nullopt, false});
  const std::vector<LabeledTrace> traces{{"b1", Date::parse("2022-09-25"), t}, {"b2", std::nullopt, t}};
  const std::string csv = traces_to_csv(traces);
  CHECK(csv ==
        "date,band,iteration,phase,x,y,sigma,rho,accepted\n"
        "2022-09-25,b1,0,pixel,0,0,1,0.5,1\n"
        "2022-09-25,b1,1,pixel,1,0,1,nan,0\n"
        ",b2,0,pixel,0,0,1,0.5,1\n"
        ",b2,1,pixel,1,0,1,nan,0\n");
  KeyValueDoc cfg;
  cfg.set("k", "v");
  CHECK(config_comment(cfg) == "# k = v\n");
}

TEST_CASE("pgm dump") {
  const std::string pgm = to_pgm(MaskedImage(Grid{0, 0, 1, 2, 3}, {0, 1, 2, 3, 4, 5}, {1, 1, 1, 1, 1, 0}));
  CHECK(pgm.rfind("P5\n3 2\n255\n", 0) == 0);
  CHECK(pgm.size() == 11 + 6);
  CHECK(static_cast<unsigned char>(pgm.back()) == 0);
}

}  // TEST_SUITE
