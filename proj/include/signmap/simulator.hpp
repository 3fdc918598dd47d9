#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "signmap/exec.hpp"
#include "signmap/types.hpp"

namespace signmap {

// Synthetic camera model. There are no real intrinsics: the horizontal
// position is linear in relative bearing across the field of view and the
// box side follows focal * size / distance.
struct ProjectionModel {
  ImageSize image;
  double fov_half_deg = 45.0;
  double focal_px = 1700.0;
  double sign_size_m = 0.75;
  double visibility_radius_m = 100.0;
  double min_side_px = 8.0;
  double max_side_px = 400.0;
  double vertical_center = 0.4;  // fraction of image height
};

struct SimNoise {
  double gps_sigma_m = 0.0;  // per axis
  double class_confusion = 0.0;
  double bbox_jitter_px = 0.0;
  double miss_rate = 0.0;
  double fp_rate_per_frame = 0.0;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::string segment_id = "seg-0000";
  GeoPoint start{44.0, -73.0};
  double path_length_m = 1500.0;
  double frame_spacing_m = 8.0;
  double spacing_jitter = 0.25;        // +/- fraction of the spacing
  double turn_sigma_deg = 1.0;         // heading random walk per frame
  double sign_density_per_km = 12.0;   // sign posts
  int class_count = 50;
  double class_exponent = 1.5;
  bool unique_classes = false;
  double min_sign_spacing_m = 0.0;     // between posts
  double assembly_probability = 0.1;   // a post carries 2-4 signs
  double lateral_min_m = 4.0;
  double lateral_max_m = 10.0;
  ProjectionModel projection;
  SimNoise noise;

  /// Throws std::invalid_argument on a degenerate config.
  void validate() const;
};

/// Noise-free, distinct classes, posts at least 35 m apart, no assemblies.
SimConfig zero_noise_preset(std::uint64_t seed);
/// GPS sigma 2 m, 5% class confusion, 10% misses, 0.2 false positives per
/// frame, 2 px box jitter.
SimConfig benchmark_preset(std::uint64_t seed);

/// Relative bearing wrapped into (-180, 180].
double relative_bearing_deg(const CameraPose& camera, const GeoPoint& target);

/// Horizontal pixel for a relative bearing (may fall outside the image).
double horizontal_pixel(double relative_bearing_deg, const ProjectionModel& proj);

/// nullopt when the sign is behind the field of view or out of range.
/// `stack_index` shifts assembly members down the post by whole box heights.
std::optional<BoundingBox> project_sign_to_bbox(const CameraPose& camera, const GeoPoint& sign,
                                                const ProjectionModel& proj = {},
                                                int stack_index = 0);

RoadSegment generate_segment(const SimConfig& cfg);

/// `count` segments with seeds cfg.seed + i and ids "seg-0000", ...
std::vector<RoadSegment> generate_segments(const SimConfig& cfg, int count,
                                           Exec exec = Exec::parallel);

DetectionSegment degrade_to_detections(const RoadSegment& seg, const SimNoise& noise, int class_count,
                                       Rng& rng, const ProjectionModel& proj = {});

/// Mixed into a simulation seed to derive the degradation seed, keeping the
/// two seed streams apart.
inline constexpr std::uint64_t kDegradeSeedSalt = 0xd1b54a32d192ed03ULL;

/// Seeds each segment's degradation with seed + i.
std::vector<DetectionSegment> degrade_segments(const std::vector<RoadSegment>& segs,
                                               const SimNoise& noise, int class_count,
                                               std::uint64_t seed, Exec exec = Exec::parallel,
                                               const ProjectionModel& proj = {});

/// Beta(a, b) draw from two gamma variates.
double sample_beta(Rng& rng, double a, double b);

}  // namespace signmap
