#pragma once

// Camera-relative offset <-> WGS-84 conversions and great-circle helpers.
//
// Headings are compass degrees (0 = north, clockwise). The offset transform
// uses the 6378137 m semi-major axis; haversine uses the 6371 km mean radius.

namespace signmap {

inline constexpr double kSemiMajorAxisM = 6378137.0;
inline constexpr double kMeanEarthRadiusM = 6371000.0;
inline constexpr double kMaxAbsLatitudeDeg = 89.9;
inline constexpr double kDefaultOffsetBoundM = 10000.0;

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;

  bool operator==(const GeoPoint&) const = default;
};

struct CameraPose {
  GeoPoint position;
  double heading_deg = 0.0;

  bool operator==(const CameraPose&) const = default;
};

// Offset of a target in the image frame, meters. x is the horizontal offset,
// y the vertical (forward) one.
struct LocalOffset {
  double x_m = 0.0;
  double y_m = 0.0;
};

// North/east displacement on the equirectangular tangent plane used by the
// offset transform.
struct NorthEast {
  double north_m = 0.0;
  double east_m = 0.0;
};

/// Throws std::invalid_argument if the point is non-finite or out of range.
void validate(const GeoPoint& p);
void validate(const CameraPose& c);
void validate(const LocalOffset& o, double bound_m = kDefaultOffsetBoundM);

/// Maps an image-frame offset into north/east meters. The matrix is
/// [[cos, sin], [sin, -cos]], a reflection, so it is its own inverse.
NorthEast rotate_offset(const LocalOffset& offset, double heading_deg);
LocalOffset unrotate_offset(const NorthEast& ne, double heading_deg);

/// Equirectangular displacement about `origin` with the semi-major axis.
GeoPoint displace(const GeoPoint& origin, const NorthEast& ne);
NorthEast displacement(const GeoPoint& origin, const GeoPoint& target);

GeoPoint offset_to_gps(const CameraPose& camera, const LocalOffset& offset);
LocalOffset gps_to_offset(const CameraPose& camera, const GeoPoint& target);

double haversine_m(const GeoPoint& a, const GeoPoint& b);

/// Initial great-circle bearing in [0, 360). Throws for points closer than
/// 0.01 m.
double bearing_deg(const GeoPoint& from, const GeoPoint& to);

double deg_to_rad(double deg);
double rad_to_deg(double rad);
/// Wraps into [0, 360).
double normalize_heading(double deg);

}  // namespace signmap
