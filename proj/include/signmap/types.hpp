#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "signmap/geodesy.hpp"

namespace signmap {

using ClassId = int;
using SignId = std::int64_t;

struct ImageSize {
  int width = 1920;
  int height = 1080;

  bool operator==(const ImageSize&) const = default;
};

struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }

  bool operator==(const BoundingBox&) const = default;
};

/// Throws std::invalid_argument unless min < max on both axes and the box
/// lies inside the image.
void validate(const BoundingBox& b, const ImageSize& image);

/// Clamps into the image and widens degenerate boxes to at least 1 px.
BoundingBox clip_box(const BoundingBox& b, const ImageSize& image);

enum class Side { left, right };

struct Detection {
  int frame_index = 0;
  BoundingBox bbox;
  ClassId class_id = 0;
  double confidence = 1.0;
  GeoPoint predicted_gps;
  CameraPose camera;

  bool operator==(const Detection&) const = default;
};

struct Annotation {
  int frame_index = 0;
  BoundingBox bbox;
  ClassId class_id = 0;
  GeoPoint gps;
  SignId sign_id = 0;
  Side side = Side::right;
  bool assembly = false;
  CameraPose camera;

  bool operator==(const Annotation&) const = default;
};

struct Tracklet {
  std::int64_t id = 0;
  std::vector<Detection> detections;
};

enum class CondenseMethod { foi, weighted_average, triangulate, triangulate_fallback, mrf };

const char* to_string(CondenseMethod m);
std::optional<CondenseMethod> parse_condense_method(const std::string& s);

struct SignPrediction {
  GeoPoint gps;
  ClassId class_id = 0;
  int support = 1;
  CondenseMethod method = CondenseMethod::weighted_average;
};

struct GroundTruthSign {
  SignId sign_id = 0;
  GeoPoint gps;
  ClassId class_id = 0;
};

struct AnnotatedFrame {
  int index = 0;
  CameraPose camera;
  std::vector<Annotation> annotations;
};

struct DetectionFrame {
  int index = 0;
  CameraPose camera;
  std::vector<Detection> detections;
};

// Ground-truth road segment: camera trajectory plus per-frame annotations.
struct RoadSegment {
  std::string id;
  ImageSize image;
  std::vector<AnnotatedFrame> frames;
};

// Detector output over the same trajectory.
struct DetectionSegment {
  std::string id;
  ImageSize image;
  std::vector<DetectionFrame> frames;
};

/// Unique physical signs of a segment, ordered by sign id.
std::vector<GroundTruthSign> ground_truth_signs(const RoadSegment& seg);

/// Annotations re-expressed as perfect detections (confidence 1).
Detection as_detection(const Annotation& a);

}  // namespace signmap
