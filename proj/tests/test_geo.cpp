#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <limits>
#include <numbers>

#include "covpred/error.hpp"
#include "covpred/geo.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace covpred;
using testsupport::Gen;

TEST_SUITE("geo") {

TEST_CASE("wrap stays in (-180, 180] and ignores whole turns") {
  CHECK(geo::wrap_degrees(180.0) == 180.0);
  CHECK(geo::wrap_degrees(-180.0) == 180.0);
  CHECK(geo::wrap_degrees(540.0) == 180.0);
  CHECK(geo::wrap_degrees(-190.0) == 170.0);
  CHECK(geo::wrap_degrees(0.0) == 0.0);
  Gen g(11);
  for (int i = 0; i < 5000; ++i) {
    const double x = g.uniform(-2000.0, 2000.0);
    const double w = geo::wrap_degrees(x);
    REQUIRE(w > -180.0);
    REQUIRE(w <= 180.0);
    const int k = g.integer(-5, 5);
    CHECK(geo::wrap_degrees(x + 360.0 * k) == doctest::Approx(w).epsilon(1e-12));
    CHECK(std::abs(std::remainder(w - x, 360.0)) < 1e-9);
  }
}

TEST_CASE("enu offset matches a spherical distance within 0.1% over 5 km") {
  Gen g(12);
  for (int i = 0; i < 2000; ++i) {
    BsRecord b = g.station("B");
    b.location.latitude = g.uniform(-60.0, 60.0);
    const SamplePoint p = g.point_near(b, 3500.0);
    const EnuOffset d = geo::enu_offset(b.location, p);
    const double flat = std::hypot(d.east, d.north);
    const double sphere = oracle::haversine(b.location.longitude, b.location.latitude, p.longitude, p.latitude);
    CHECK(std::abs(flat - sphere) <= 1e-3 * sphere);
  }
}

TEST_CASE("enu offset basics") {
  const BsLocation bs{115.0, 0.0, 30.0};
  const EnuOffset d = geo::enu_offset(bs, {115.0 + 1.0 / 111320.0 * 100.0, 0.0, 130.0});
  CHECK(d.east == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(d.north == 0.0);
  CHECK(d.up == 100.0);
  const EnuOffset z = geo::enu_offset(bs, {115.0, 0.0, 30.0});
  CHECK((z.east == 0.0 && z.north == 0.0 && z.up == 0.0));
  const EnuOffset one = geo::enu_offset({0.0, 0.0, 40.0}, {1.0, 0.0, 40.0});
  CHECK(one.east == doctest::Approx(111320.0).epsilon(1e-12));
  CHECK(one.north == 0.0);
  CHECK(one.up == 0.0);
  CHECK_THROWS_AS(geo::enu_offset(bs, {std::nan(""), 0.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(geo::enu_offset({0.0, std::numeric_limits<double>::infinity(), 1.0}, {0, 0, 0}),
                  InvalidInput);
}

TEST_CASE("offset_point inverts enu_offset") {
  Gen g(13);
  for (int i = 0; i < 500; ++i) {
    const BsRecord b = g.station("B");
    const EnuOffset d{g.uniform(-4000, 4000), g.uniform(-4000, 4000), g.uniform(-50, 500)};
    const EnuOffset back = geo::enu_offset(b.location, geo::offset_point(b.location, d));
    CHECK(back.east == doctest::Approx(d.east).epsilon(1e-9));
    CHECK(back.north == doctest::Approx(d.north).epsilon(1e-9));
    CHECK(back.up == doctest::Approx(d.up).epsilon(1e-12));
  }
}

TEST_CASE("bearing angles on the axes") {
  auto b = geo::bearing_angles({0.0, 1.0, 0.0});
  CHECK(b.theta_h == 0.0);
  CHECK(b.theta_v == 0.0);
  CHECK(geo::bearing_angles({1.0, 0.0, 0.0}).theta_h == doctest::Approx(90.0));
  CHECK(geo::bearing_angles({-1.0, 0.0, 0.0}).theta_h == doctest::Approx(-90.0));
  CHECK(geo::bearing_angles({0.0, -1.0, 0.0}).theta_h == 180.0);
  CHECK(geo::bearing_angles({0.0, 100.0, 100.0}).theta_v == doctest::Approx(45.0));
  b = geo::bearing_angles({100.0, 0.0, 100.0});
  CHECK(b.theta_h == doctest::Approx(90.0));
  CHECK(b.theta_v == doctest::Approx(45.0));
  CHECK_THROWS_AS(geo::bearing_angles({0.0, 0.0, 10.0}), DegenerateGeometry);
}

TEST_CASE("relative angles") {
  BeamOrientation o{90.0, 0.0, 0.0, 0.0};
  CHECK(geo::relative_angles({90.0, 0.0}, o).delta_theta_h == 0.0);
  o = {20.0, 0.0, 0.0, 0.0};
  CHECK(geo::relative_angles({-170.0, 0.0}, o).delta_theta_h == doctest::Approx(170.0));
  o = {0.0, 0.0, 9.72, 0.0};
  CHECK(geo::relative_angles({0.0, 0.0}, o).delta_theta_v == doctest::Approx(-9.72));
  // Total tilt is the sum of both tilts and is not wrapped.
  o = {0.0, 0.0, 100.0, 120.0};
  CHECK(geo::relative_angles({0.0, 10.0}, o).delta_theta_v == doctest::Approx(-210.0));
  o = {359.0, 3.0, 0.0, 0.0};
  CHECK(geo::relative_angles({1.0, 0.0}, o).delta_theta_h == doctest::Approx(-1.0));
}

TEST_CASE("slant distance") {
  CHECK(geo::slant_distance({3.0, 4.0, 12.0}) == doctest::Approx(13.0));
  CHECK(geo::slant_distance({100.0, 0.0, 0.0}) == 100.0);
  CHECK_THROWS_AS(geo::slant_distance({0.0, 0.0, 0.0}), DegenerateGeometry);
  Gen g(14);
  for (int i = 0; i < 1000; ++i) {
    const EnuOffset d{g.uniform(-1e4, 1e4), g.uniform(-1e4, 1e4), g.uniform(-1e3, 1e3)};
    const double r = geo::slant_distance(d);
    CHECK(r >= std::max({std::abs(d.east), std::abs(d.north), std::abs(d.up)}));
    const double a = g.uniform(-3.14, 3.14);
    const EnuOffset rot{d.east * std::cos(a) - d.north * std::sin(a),
                        d.east * std::sin(a) + d.north * std::cos(a), d.up};
    CHECK(std::abs(geo::slant_distance(rot) - r) <= 1e-9 * r);
  }
}

TEST_CASE("polar decomposition reconstructs the offset") {
  Gen g(15);
  constexpr double rad = std::numbers::pi / 180.0;
  for (int i = 0; i < 1000; ++i) {
    const EnuOffset d{g.uniform(-5000, 5000), g.uniform(-5000, 5000), g.uniform(-500, 500)};
    const geo::Bearing b = geo::bearing_angles(d);
    const double r = geo::slant_distance(d);
    const double h = r * std::cos(b.theta_v * rad);
    const double east = h * std::sin(b.theta_h * rad), north = h * std::cos(b.theta_h * rad);
    const double up = r * std::sin(b.theta_v * rad);
    const double err = std::sqrt(std::pow(east - d.east, 2) + std::pow(north - d.north, 2) +
                                 std::pow(up - d.up, 2));
    CHECK(err <= 1e-6 * r);
  }
}

TEST_CASE("ssb transmit power") {
  CHECK(geo::ssb_tx_power({40.0, 1.0, 1.0}) == 40.0);
  CHECK(geo::ssb_tx_power({40.0, 10.0, 1.0}) == doctest::Approx(30.0));
  CHECK(std::abs(geo::ssb_tx_power({40.0, 10.0, 0.5}) - 33.0103) < 5e-5);
  CHECK_THROWS_AS(geo::ssb_tx_power({46.0, 0.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(geo::ssb_tx_power({46.0, 1.0, 0.0}), InvalidInput);
  CHECK_THROWS_AS(geo::ssb_tx_power({46.0, 1.0, 1.5}), InvalidInput);
  Gen g(16);
  for (int i = 0; i < 500; ++i) {
    const double p = g.uniform(20, 60), bw = g.uniform(1, 1000), s = g.uniform(0.01, 0.99);
    CHECK(geo::ssb_tx_power({p, bw * 1.01, s}) < geo::ssb_tx_power({p, bw, s}));
    CHECK(geo::ssb_tx_power({p, bw, std::min(1.0, s * 1.01)}) < geo::ssb_tx_power({p, bw, s}));
  }
}

TEST_CASE("compress agrees with the vector-algebra oracle") {
  Gen g(17);
  for (int i = 0; i < 1000; ++i) {
    const BsRecord b = g.station("B");
    const SamplePoint p = g.point_near(b);
    const CompressedFeatures cf = geo::compress(b, p);
    const oracle::Geometry o = oracle::geometry(b, p);
    // Compare angles modulo 360 so a value on the seam cannot flip sides.
    CHECK(std::abs(std::remainder(cf.delta_theta_h - o.dth, 360.0)) <= 1e-9);
    CHECK(std::abs(cf.delta_theta_v - o.dtv) <= 1e-9);
    CHECK(std::abs(cf.distance - o.distance) <= 1e-6 * o.distance);
    CHECK(cf.carrier_frequency == b.beam_static.carrier_frequency);
    CHECK(cf.beam_static.aau_type == b.beam_static.aau_type);
  }
}

TEST_CASE("compress at boresight and tilt match gives zero angles") {
  BsRecord b;
  b.location = {116.0, 28.0, 30.0};
  b.beam_static = {"A", 32, "S", 3500.0};
  b.orientation = {30.0, 15.0, 5.0, 0.0};
  b.power = {46.0, 1.0, 1.0};
  // Direction 45 degrees east of north, 5 degrees up.
  const double h = 1000.0, up = h * std::tan(5.0 * std::numbers::pi / 180.0);
  const double az = 45.0 * std::numbers::pi / 180.0;
  const SamplePoint p = geo::offset_point(b.location, {h * std::sin(az), h * std::cos(az), up});
  const CompressedFeatures cf = geo::compress(b, p);
  CHECK(cf.delta_theta_h == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
  CHECK(cf.delta_theta_v == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
  CHECK(cf.distance == doctest::Approx(std::hypot(h, up)).epsilon(1e-9));
}

TEST_CASE("compress ignores whole turns of either azimuth") {
  Gen g(18);
  for (int i = 0; i < 300; ++i) {
    BsRecord b = g.station("B");
    const SamplePoint p = g.point_near(b);
    const CompressedFeatures a = geo::compress(b, p);
    b.orientation.horizontal_azimuth += 360.0 * g.integer(-3, 3);
    b.orientation.beam_azimuth -= 360.0 * g.integer(-3, 3);
    const CompressedFeatures c = geo::compress(b, p);
    CHECK(std::abs(std::remainder(a.delta_theta_h - c.delta_theta_h, 360.0)) < 1e-9);
    CHECK(a.delta_theta_v == c.delta_theta_v);
    CHECK(a.distance == c.distance);
  }
}

TEST_CASE("compress rejects a point straight above the antenna") {
  BsRecord b;
  b.location = {116.0, 28.0, 30.0};
  b.beam_static.carrier_frequency = 3500.0;
  CHECK_THROWS_AS(geo::compress(b, {116.0, 28.0, 200.0}), DegenerateGeometry);
}

TEST_CASE("target transform and inverse") {
  const std::vector<double> p{-80.0, -85.0};
  CHECK(geo::target_transform(p, 30.0, 2) == std::vector<double>{-110.0, -115.0});
  CHECK(geo::target_transform(p, 0.0, 2) == p);
  CHECK_THROWS_AS(geo::target_transform(p, 0.0, 3), ShapeError);
  Gen g(19);
  for (int i = 0; i < 200; ++i) {
    const auto v = g.vec(9, -130.0, -50.0);
    const double pt = g.uniform(-10, 60);
    const auto back = geo::target_inverse(geo::target_transform(v, pt, 9), pt);
    for (std::size_t j = 0; j < v.size(); ++j) CHECK(std::abs(back[j] - v[j]) <= 1e-12);
  }
}

TEST_CASE("location validation") {
  CHECK_NOTHROW(geo::validate(BsLocation{0.0, 0.0, 1.0}));
  CHECK_THROWS_AS(geo::validate(BsLocation{0.0, 91.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(geo::validate(BsLocation{181.0, 0.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(geo::validate(BsLocation{0.0, 0.0, 0.0}), InvalidInput);
  CHECK_THROWS_AS(geo::validate(SamplePoint{0.0, 0.0, -1.0}), InvalidInput);
}

}
