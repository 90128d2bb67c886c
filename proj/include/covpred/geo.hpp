#pragma once

#include <span>
#include <vector>

#include "covpred/types.hpp"

namespace covpred::geo {

/// Meters per degree for the local equirectangular projection. Longitude
/// differences are additionally scaled by cos(latitude of the BS).
inline constexpr double kMetersPerDegree = 111320.0;

struct Bearing {
  double theta_h = 0.0;  // degrees from north, clockwise, (-180, 180]
  double theta_v = 0.0;  // elevation, degrees
};

struct RelativeAngles {
  double delta_theta_h = 0.0;
  double delta_theta_v = 0.0;
};

/// Wraps an angle in degrees into (-180, 180].
double wrap_degrees(double deg);

void validate(const BsLocation& bs);
void validate(const SamplePoint& pt);

EnuOffset enu_offset(const BsLocation& bs, const SamplePoint& pt);

/// Throws DegenerateGeometry when the horizontal offset is zero.
Bearing bearing_angles(const EnuOffset& d);

RelativeAngles relative_angles(const Bearing& b, const BeamOrientation& o);

/// Throws DegenerateGeometry for the zero vector.
double slant_distance(const EnuOffset& d);

/// SSB transmit power in dBm from the total power, the bandwidth divisor and
/// the utilization factor sigma.
double ssb_tx_power(const AdditivePower& a);

CompressedFeatures compress(const BsRecord& bs, const SamplePoint& pt);

/// y = p - p_t, elementwise.
std::vector<double> target_transform(std::span<const double> rsrp, double p_t,
                                     std::size_t expected_len);
std::vector<double> target_inverse(std::span<const double> y, double p_t);

/// Inverse of the local projection: the lon/lat/alt that lies at offset `d`
/// from the antenna top of `bs`.
SamplePoint offset_point(const BsLocation& bs, const EnuOffset& d);

}  // namespace covpred::geo
