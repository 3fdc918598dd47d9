#include "signmap/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace signmap {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " is not finite");
  }
}

void require_away_from_pole(double lat_deg) {
  if (std::abs(lat_deg) >= kMaxAbsLatitudeDeg) {
    throw std::invalid_argument("camera latitude " + std::to_string(lat_deg) +
                                " too close to a pole for the offset transform");
  }
}

}  // namespace

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

double normalize_heading(double deg) {
  double h = std::fmod(deg, 360.0);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h = 0.0;
  return h;
}

void validate(const GeoPoint& p) {
  require_finite(p.lat_deg, "latitude");
  require_finite(p.lon_deg, "longitude");
  if (p.lat_deg < -90.0 || p.lat_deg > 90.0) {
    throw std::invalid_argument("latitude " + std::to_string(p.lat_deg) + " outside [-90, 90]");
  }
  if (p.lon_deg < -180.0 || p.lon_deg > 180.0) {
    throw std::invalid_argument("longitude " + std::to_string(p.lon_deg) +
                                " outside [-180, 180]");
  }
}

void validate(const CameraPose& c) {
  validate(c.position);
  require_finite(c.heading_deg, "heading");
  if (c.heading_deg < 0.0 || c.heading_deg >= 360.0) {
    throw std::invalid_argument("heading " + std::to_string(c.heading_deg) +
                                " outside [0, 360)");
  }
}

void validate(const LocalOffset& o, double bound_m) {
  require_finite(o.x_m, "offset x");
  require_finite(o.y_m, "offset y");
  if (std::abs(o.x_m) > bound_m || std::abs(o.y_m) > bound_m) {
    throw std::invalid_argument("offset exceeds sanity bound of " + std::to_string(bound_m) +
                                " m");
  }
}

NorthEast rotate_offset(const LocalOffset& offset, double heading_deg) {
  const double theta = deg_to_rad(heading_deg);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {offset.x_m * c + offset.y_m * s, offset.x_m * s - offset.y_m * c};
}

LocalOffset unrotate_offset(const NorthEast& ne, double heading_deg) {
  // Same matrix: it squares to the identity.
  const double theta = deg_to_rad(heading_deg);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {ne.north_m * c + ne.east_m * s, ne.north_m * s - ne.east_m * c};
}

GeoPoint displace(const GeoPoint& origin, const NorthEast& ne) {
  const double o_lat = ne.north_m / kSemiMajorAxisM;
  const double o_lon =
      ne.east_m / (kSemiMajorAxisM * std::cos(std::numbers::pi * origin.lat_deg / 180.0));
  return {origin.lat_deg + o_lat * 180.0 / std::numbers::pi,
          origin.lon_deg + o_lon * 180.0 / std::numbers::pi};
}

NorthEast displacement(const GeoPoint& origin, const GeoPoint& target) {
  const double o_lat = (target.lat_deg - origin.lat_deg) * std::numbers::pi / 180.0;
  const double o_lon = (target.lon_deg - origin.lon_deg) * std::numbers::pi / 180.0;
  return {o_lat * kSemiMajorAxisM,
          o_lon * kSemiMajorAxisM * std::cos(std::numbers::pi * origin.lat_deg / 180.0)};
}

GeoPoint offset_to_gps(const CameraPose& camera, const LocalOffset& offset) {
  validate(camera);
  validate(offset);
  require_away_from_pole(camera.position.lat_deg);
  return displace(camera.position, rotate_offset(offset, camera.heading_deg));
}

LocalOffset gps_to_offset(const CameraPose& camera, const GeoPoint& target) {
  validate(camera);
  validate(target);
  require_away_from_pole(camera.position.lat_deg);
  return unrotate_offset(displacement(camera.position, target), camera.heading_deg);
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  validate(a);
  validate(b);
  const double psi1 = deg_to_rad(a.lat_deg);
  const double psi2 = deg_to_rad(b.lat_deg);
  const double dpsi = psi2 - psi1;
  const double dlambda = deg_to_rad(b.lon_deg - a.lon_deg);
  const double sp = std::sin(dpsi / 2.0);
  const double sl = std::sin(dlambda / 2.0);
  double h = sp * sp + std::cos(psi1) * std::cos(psi2) * sl * sl;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kMeanEarthRadiusM * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
}

double bearing_deg(const GeoPoint& from, const GeoPoint& to) {
  if (haversine_m(from, to) < 0.01) {
    throw std::invalid_argument("bearing undefined for coincident points");
  }
  const double psi1 = deg_to_rad(from.lat_deg);
  const double psi2 = deg_to_rad(to.lat_deg);
  const double dlambda = deg_to_rad(to.lon_deg - from.lon_deg);
  const double y = std::sin(dlambda) * std::cos(psi2);
  const double x =
      std::cos(psi1) * std::sin(psi2) - std::sin(psi1) * std::cos(psi2) * std::cos(dlambda);
  return normalize_heading(rad_to_deg(std::atan2(y, x)));
}

}  // namespace signmap
