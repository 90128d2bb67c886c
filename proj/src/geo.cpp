#include "covpred/geo.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "covpred/error.hpp"

namespace covpred::geo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidInput(std::string("non-finite ") + what);
}

}  // namespace

double wrap_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r <= -180.0) r += 360.0;
  if (r > 180.0) r -= 360.0;
  return r;
}

void validate(const BsLocation& bs) {
  require_finite(bs.longitude, "longitude");
  require_finite(bs.latitude, "latitude");
  require_finite(bs.antenna_height, "antenna height");
  if (bs.longitude < -180.0 || bs.longitude > 180.0) throw InvalidInput("longitude out of [-180, 180]");
  if (bs.latitude < -90.0 || bs.latitude > 90.0) throw InvalidInput("latitude out of [-90, 90]");
  if (bs.antenna_height <= 0.0) throw InvalidInput("antenna height must be positive");
}

void validate(const SamplePoint& pt) {
  require_finite(pt.longitude, "longitude");
  require_finite(pt.latitude, "latitude");
  require_finite(pt.altitude, "altitude");
  if (pt.altitude < 0.0) throw InvalidInput("altitude must be nonnegative");
}

EnuOffset enu_offset(const BsLocation& bs, const SamplePoint& pt) {
  require_finite(bs.longitude, "BS longitude");
  require_finite(bs.latitude, "BS latitude");
  require_finite(bs.antenna_height, "BS antenna height");
  require_finite(pt.longitude, "point longitude");
  require_finite(pt.latitude, "point latitude");
  require_finite(pt.altitude, "point altitude");
  const double cos_lat = std::cos(bs.latitude * kDegToRad);
  return {(pt.longitude - bs.longitude) * cos_lat * kMetersPerDegree,
          (pt.latitude - bs.latitude) * kMetersPerDegree,
          pt.altitude - bs.antenna_height};
}

SamplePoint offset_point(const BsLocation& bs, const EnuOffset& d) {
  const double cos_lat = std::cos(bs.latitude * kDegToRad);
  return {bs.longitude + d.east / (cos_lat * kMetersPerDegree),
          bs.latitude + d.north / kMetersPerDegree, bs.antenna_height + d.up};
}

Bearing bearing_angles(const EnuOffset& d) {
  const double horizontal = std::hypot(d.east, d.north);
  if (horizontal == 0.0) throw DegenerateGeometry("zero horizontal offset has no bearing");
  // atan2 yields [-180, 180]; -180 is folded onto +180.
  return {wrap_degrees(std::atan2(d.east, d.north) * kRadToDeg),
          std::atan(d.up / horizontal) * kRadToDeg};
}

RelativeAngles relative_angles(const Bearing& b, const BeamOrientation& o) {
  return {wrap_degrees(b.theta_h - o.horizontal_azimuth - o.beam_azimuth),
          b.theta_v - o.mechanical_down_tilt - o.digital_down_tilt};
}

double slant_distance(const EnuOffset& d) {
  const double r = std::hypot(d.east, d.north, d.up);
  if (r == 0.0) throw DegenerateGeometry("zero offset has no distance");
  return r;
}

double ssb_tx_power(const AdditivePower& a) {
  if (!(a.bandwidth > 0.0)) throw InvalidInput("bandwidth must be positive");
  if (!(a.ssb_utilization_sigma > 0.0) || a.ssb_utilization_sigma > 1.0)
    throw InvalidInput("sigma must lie in (0, 1]");
  require_finite(a.total_tx_power, "total tx power");
  return a.total_tx_power - 10.0 * std::log10(a.bandwidth) -
         10.0 * std::log10(a.ssb_utilization_sigma);
}

CompressedFeatures compress(const BsRecord& bs, const SamplePoint& pt) {
  const EnuOffset d = enu_offset(bs.location, pt);
  const Bearing b = bearing_angles(d);
  const RelativeAngles rel = relative_angles(b, bs.orientation);
  CompressedFeatures cf;
  cf.delta_theta_h = rel.delta_theta_h;
  cf.delta_theta_v = rel.delta_theta_v;
  cf.distance = slant_distance(d);
  cf.carrier_frequency = bs.beam_static.carrier_frequency;
  cf.beam_static = bs.beam_static;
  return cf;
}

std::vector<double> target_transform(std::span<const double> rsrp, double p_t,
                                     std::size_t expected_len) {
  if (rsrp.size() != expected_len)
    throw ShapeError("rsrp vector has " + std::to_string(rsrp.size()) + " entries, expected " +
                     std::to_string(expected_len));
  std::vector<double> y(rsrp.begin(), rsrp.end());
  for (double& v : y) v -= p_t;
  return y;
}

std::vector<double> target_inverse(std::span<const double> y, double p_t) {
  std::vector<double> p(y.begin(), y.end());
  for (double& v : p) v += p_t;
  return p;
}

}  // namespace covpred::geo
