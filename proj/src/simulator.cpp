#include "signmap/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <stdexcept>

#include "signmap/geodesy.hpp"

namespace signmap {

namespace {

void require_rate(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
  }
}

struct SignPost {
  GeoPoint gps;
  Side side;
  std::vector<std::pair<SignId, ClassId>> signs;  // top to bottom
};

std::string segment_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seg-%04d", i);
  return buf;
}

}  // namespace

void SimConfig::validate() const {
  signmap::validate(start);
  if (!(path_length_m > 0.0)) throw std::invalid_argument("path length must be positive");
  if (!(frame_spacing_m > 0.0)) throw std::invalid_argument("frame spacing must be positive");
  if (!(spacing_jitter >= 0.0 && spacing_jitter < 1.0)) {
    throw std::invalid_argument("spacing jitter must lie in [0, 1)");
  }
  if (!(turn_sigma_deg >= 0.0)) throw std::invalid_argument("turn sigma must be >= 0");
  if (!(sign_density_per_km >= 0.0)) throw std::invalid_argument("sign density must be >= 0");
  if (class_count < 1) throw std::invalid_argument("class count must be >= 1");
  if (!(class_exponent >= 0.0)) throw std::invalid_argument("class exponent must be >= 0");
  if (!(min_sign_spacing_m >= 0.0)) throw std::invalid_argument("sign spacing must be >= 0");
  require_rate(assembly_probability, "assembly probability");
  if (!(lateral_min_m >= 0.0 && lateral_max_m >= lateral_min_m)) {
    throw std::invalid_argument("lateral offsets must satisfy 0 <= min <= max");
  }
  if (!(projection.visibility_radius_m > 0.0) || !(projection.fov_half_deg > 0.0) ||
      projection.image.width <= 0 || projection.image.height <= 0) {
    throw std::invalid_argument("projection model must have positive range, FOV and image size");
  }
  if (!(noise.gps_sigma_m >= 0.0) || !(noise.bbox_jitter_px >= 0.0)) {
    throw std::invalid_argument("noise sigmas must be >= 0");
  }
  require_rate(noise.class_confusion, "class confusion");
  require_rate(noise.miss_rate, "miss rate");
  if (!(noise.fp_rate_per_frame >= 0.0)) throw std::invalid_argument("FP rate must be >= 0");
}

SimConfig zero_noise_preset(std::uint64_t seed) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.unique_classes = true;
  cfg.min_sign_spacing_m = 35.0;
  cfg.assembly_probability = 0.0;
  cfg.noise = {};
  return cfg;
}

SimConfig benchmark_preset(std::uint64_t seed) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.noise = {2.0, 0.05, 2.0, 0.10, 0.2};
  return cfg;
}

double relative_bearing_deg(const CameraPose& camera, const GeoPoint& target) {
  double rb = bearing_deg(camera.position, target) - camera.heading_deg;
  while (rb > 180.0) rb -= 360.0;
  while (rb <= -180.0) rb += 360.0;
  return rb;
}

double horizontal_pixel(double relative_bearing_deg, const ProjectionModel& proj) {
  const double half = 0.5 * proj.image.width;
  return half + relative_bearing_deg / proj.fov_half_deg * half;
}

std::optional<BoundingBox> project_sign_to_bbox(const CameraPose& camera, const GeoPoint& sign,
                                                const ProjectionModel& proj, int stack_index) {
  const double d = haversine_m(camera.position, sign);
  if (d > proj.visibility_radius_m || d < 0.01) return std::nullopt;
  const double rb = relative_bearing_deg(camera, sign);
  if (std::abs(rb) > proj.fov_half_deg) return std::nullopt;

  const double side = std::clamp(proj.focal_px * proj.sign_size_m / d, proj.min_side_px, proj.max_side_px);
  const double cx = horizontal_pixel(rb, proj);
  const double cy = proj.vertical_center * proj.image.height + stack_index * side;
  const BoundingBox raw{cx - 0.5 * side, cy - 0.5 * side, cx + 0.5 * side, cy + 0.5 * side};
  if (raw.x_max <= 0.0 || raw.x_min >= proj.image.width || raw.y_max <= 0.0 ||
      raw.y_min >= proj.image.height) {
    return std::nullopt;
  }
  return clip_box(raw, proj.image);
}

RoadSegment generate_segment(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Camera trajectory: heading random walk, jittered spacing.
  std::vector<CameraPose> cameras;
  std::vector<double> arc;  // arc length at each camera
  double heading = 360.0 * unit(rng);
  GeoPoint pos = cfg.start;
  double s = 0.0;
  while (true) {
    cameras.push_back({pos, normalize_heading(heading)});
    arc.push_back(s);
    if (s >= cfg.path_length_m) break;
    const double step =
        cfg.frame_spacing_m * (1.0 + cfg.spacing_jitter * (2.0 * unit(rng) - 1.0));
    const double h = deg_to_rad(heading);
    pos = displace(pos, {step * std::cos(h), step * std::sin(h)});
    s += step;
    heading += cfg.turn_sigma_deg * normal(rng);
  }

  // Sign posts along the path.
  const int n_posts = static_cast<int>(std::lround(cfg.sign_density_per_km * cfg.path_length_m / 1000.0));
  std::vector<double> class_weights(cfg.class_count);
  for (int k = 0; k < cfg.class_count; ++k) class_weights[k] = std::pow(k + 1.0, -cfg.class_exponent);
  std::discrete_distribution<int> class_draw(class_weights.begin(), class_weights.end());

  std::vector<SignPost> posts;
  SignId next_sign = 0;
  ClassId next_unique_class = 0;
  for (int p = 0; p < n_posts; ++p) {
    std::optional<SignPost> placed;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const double at = cfg.path_length_m * unit(rng);
      const auto it = std::upper_bound(arc.begin(), arc.end(), at);
      const std::size_t k = it == arc.begin() ? 0 : static_cast<std::size_t>(it - arc.begin()) - 1;
      const CameraPose& c = cameras[k];
      const double h = deg_to_rad(c.heading_deg);
      const double along = at - arc[k];
      const Side side = unit(rng) < 0.5 ? Side::left : Side::right;
      const double lateral = cfg.lateral_min_m + (cfg.lateral_max_m - cfg.lateral_min_m) * unit(rng);
      const double perp = side == Side::right ? h + std::numbers::pi / 2 : h - std::numbers::pi / 2;
      const GeoPoint gps =
          displace(c.position, {along * std::cos(h) + lateral * std::cos(perp),
                                along * std::sin(h) + lateral * std::sin(perp)});
      const bool clear = std::all_of(posts.begin(), posts.end(), [&](const SignPost& q) {
        return haversine_m(q.gps, gps) >= cfg.min_sign_spacing_m;
      });
      if (clear) placed = SignPost{gps, side, {}};
    }
    if (!placed) continue;

    int members = 1;
    if (unit(rng) < cfg.assembly_probability) {
      members = 2 + static_cast<int>(unit(rng) * 3.0);
      members = std::min(members, 4);
    }
    for (int m = 0; m < members; ++m) {
      ClassId cls = 0;
      if (cfg.unique_classes) {
        if (next_unique_class >= cfg.class_count) {
          throw std::invalid_argument("not enough classes for unique_classes");
        }
        cls = next_unique_class++;
      } else {
        cls = class_draw(rng);
      }
      placed->signs.emplace_back(next_sign++, cls);
    }
    posts.push_back(std::move(*placed));
  }

  RoadSegment seg;
  seg.id = cfg.segment_id;
  seg.image = cfg.projection.image;
  for (std::size_t f = 0; f < cameras.size(); ++f) {
    AnnotatedFrame frame{static_cast<int>(f), cameras[f], {}};
    for (const auto& post : posts) {
      for (std::size_t m = 0; m < post.signs.size(); ++m) {
        const auto box =
            project_sign_to_bbox(cameras[f], post.gps, cfg.projection, static_cast<int>(m));
        if (!box) continue;
        frame.annotations.push_back({frame.index, *box, post.signs[m].second, post.gps,
                                     post.signs[m].first, post.side, post.signs.size() > 1,
                                     cameras[f]});
      }
    }
    std::sort(frame.annotations.begin(), frame.annotations.end(),
              [](const Annotation& a, const Annotation& b) { return a.sign_id < b.sign_id; });
    seg.frames.push_back(std::move(frame));
  }
  return seg;
}

std::vector<RoadSegment> generate_segments(const SimConfig& cfg, int count, Exec exec) {
  if (count < 0) throw std::invalid_argument("segment count must be >= 0");
  cfg.validate();
  std::vector<RoadSegment> out(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (int i = 0; i < count; ++i) {
    SimConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(i);
    c.segment_id = segment_name(i);
    out[i] = generate_segment(c);
  }
  return out;
}

double sample_beta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

DetectionSegment degrade_to_detections(const RoadSegment& seg, const SimNoise& noise, int class_count,
                                       Rng& rng, const ProjectionModel& proj) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::poisson_distribution<int> fp_count(noise.fp_rate_per_frame > 0.0 ? noise.fp_rate_per_frame : 1.0);
  std::uniform_int_distribution<int> any_class(0, std::max(0, class_count - 1));

  DetectionSegment out;
  out.id = seg.id;
  out.image = seg.image;
  for (const auto& frame : seg.frames) {
    DetectionFrame df{frame.index, frame.camera, {}};
    for (const auto& a : frame.annotations) {
      if (unit(rng) < noise.miss_rate) continue;
      Detection d = as_detection(a);
      if (noise.gps_sigma_m > 0.0) {
        LocalOffset o = gps_to_offset(a.camera, a.gps);
        o.x_m += noise.gps_sigma_m * normal(rng);
        o.y_m += noise.gps_sigma_m * normal(rng);
        d.predicted_gps = offset_to_gps(a.camera, o);
      }
      if (class_count > 1 && unit(rng) < noise.class_confusion) {
        std::uniform_int_distribution<int> other(0, class_count - 2);
        const int c = other(rng);
        d.class_id = c >= a.class_id ? c + 1 : c;
      }
      if (noise.bbox_jitter_px > 0.0) {
        d.bbox = clip_box({a.bbox.x_min + noise.bbox_jitter_px * normal(rng),
                           a.bbox.y_min + noise.bbox_jitter_px * normal(rng),
                           a.bbox.x_max + noise.bbox_jitter_px * normal(rng),
                           a.bbox.y_max + noise.bbox_jitter_px * normal(rng)},
                          seg.image);
      }
      d.confidence = sample_beta(rng, 8.0, 2.0);
      df.detections.push_back(d);
    }

    const int n_fp = noise.fp_rate_per_frame > 0.0 ? fp_count(rng) : 0;
    for (int k = 0; k < n_fp; ++k) {
      const double dist = 10.0 + (proj.visibility_radius_m - 10.0) * unit(rng);
      const double rb = proj.fov_half_deg * (2.0 * unit(rng) - 1.0);
      const double h = deg_to_rad(frame.camera.heading_deg + rb);
      Detection d;
      d.frame_index = frame.index;
      d.camera = frame.camera;
      d.predicted_gps = displace(frame.camera.position, {dist * std::cos(h), dist * std::sin(h)});
      d.class_id = any_class(rng);
      const double side = proj.min_side_px + (200.0 - proj.min_side_px) * unit(rng);
      const double cx = seg.image.width * unit(rng);
      const double cy = seg.image.height * (0.2 + 0.5 * unit(rng));
      d.bbox = clip_box({cx - side / 2, cy - side / 2, cx + side / 2, cy + side / 2}, seg.image);
      d.confidence = sample_beta(rng, 2.0, 8.0);
      df.detections.push_back(d);
    }
    out.frames.push_back(std::move(df));
  }
  return out;
}

std::vector<DetectionSegment> degrade_segments(const std::vector<RoadSegment>& segs,
                                               const SimNoise& noise, int class_count,
                                               std::uint64_t seed, Exec exec,
                                               const ProjectionModel& proj) {
  std::vector<DetectionSegment> out(segs.size());
  const long n = static_cast<long>(segs.size());
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (long i = 0; i < n; ++i) {
    Rng rng(seed + static_cast<std::uint64_t>(i));
    out[i] = degrade_to_detections(segs[i], noise, class_count, rng, proj);
  }
  return out;
}

}  // namespace signmap
