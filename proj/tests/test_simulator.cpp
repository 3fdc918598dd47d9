#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "signmap/geodesy.hpp"
#include "signmap/simulator.hpp"

using namespace signmap;

namespace {

bool same_segments(const RoadSegment& a, const RoadSegment& b) {
  if (a.id != b.id || !(a.image == b.image) || a.frames.size() != b.frames.size()) return false;
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    if (a.frames[i].index != b.frames[i].index || !(a.frames[i].camera == b.frames[i].camera) ||
        a.frames[i].annotations != b.frames[i].annotations) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST(Simulator, SameSeedSameSegment) {
  EXPECT_TRUE(same_segments(generate_segment(benchmark_preset(7)), generate_segment(benchmark_preset(7))));
  EXPECT_FALSE(same_segments(generate_segment(benchmark_preset(7)), generate_segment(benchmark_preset(8))));
}

TEST(Simulator, ZeroDensityHasNoAnnotations) {
  SimConfig cfg = benchmark_preset(1);
  cfg.sign_density_per_km = 0.0;
  const RoadSegment s = generate_segment(cfg);
  EXPECT_FALSE(s.frames.empty());
  for (const auto& f : s.frames) EXPECT_TRUE(f.annotations.empty());
}

TEST(Simulator, AnnotationsWithinVisibility) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RoadSegment s = generate_segment(benchmark_preset(seed));
    for (const auto& f : s.frames) {
      for (const auto& a : f.annotations) {
        EXPECT_LE(haversine_m(f.camera.position, a.gps), 100.0);
        EXPECT_EQ(a.camera, f.camera);
        EXPECT_EQ(a.frame_index, f.index);
        EXPECT_NO_THROW(validate(a.bbox, s.image));
      }
    }
  }
}

TEST(Simulator, FrameSpacingAroundEightMeters) {
  const RoadSegment s = generate_segment(benchmark_preset(3));
  double total = 0.0;
  for (std::size_t i = 1; i < s.frames.size(); ++i) {
    total += haversine_m(s.frames[i - 1].camera.position, s.frames[i].camera.position);
  }
  const double mean = total / (s.frames.size() - 1);
  EXPECT_GE(mean, 6.0);
  EXPECT_LE(mean, 10.0);
}

TEST(Simulator, SignIdsAreConsistent) {
  const RoadSegment s = generate_segment(benchmark_preset(2));
  std::map<SignId, std::pair<GeoPoint, ClassId>> seen;
  for (const auto& f : s.frames) {
    for (const auto& a : f.annotations) {
      auto [it, fresh] = seen.try_emplace(a.sign_id, a.gps, a.class_id);
      EXPECT_EQ(it->second.first, a.gps);
      EXPECT_EQ(it->second.second, a.class_id);
    }
  }
  EXPECT_FALSE(seen.empty());
  EXPECT_EQ(ground_truth_signs(s).size(), seen.size());
}

TEST(Simulator, ZeroNoisePresetInvariants) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RoadSegment s = generate_segment(zero_noise_preset(seed));
    const auto signs = ground_truth_signs(s);
    std::set<ClassId> classes;
    for (std::size_t i = 0; i < signs.size(); ++i) {
      classes.insert(signs[i].class_id);
      for (std::size_t j = i + 1; j < signs.size(); ++j) {
        EXPECT_GT(haversine_m(signs[i].gps, signs[j].gps), 30.0);
      }
    }
    EXPECT_EQ(classes.size(), signs.size());
  }
}

TEST(Projection, DeadAheadIsCentered) {
  const CameraPose cam{{44.0, -73.0}, 30.0};
  const GeoPoint ahead = displace(cam.position, {20 * std::cos(deg_to_rad(30)), 20 * std::sin(deg_to_rad(30))});
  const auto b = project_sign_to_bbox(cam, ahead);
  ASSERT_TRUE(b);
  EXPECT_NEAR(b->center_x(), 960.0, 0.05);
}

TEST(Projection, InverseDistanceLaw) {
  const CameraPose cam{{44.0, -73.0}, 0.0};
  const auto near = project_sign_to_bbox(cam, displace(cam.position, {20, 0}));
  const auto far = project_sign_to_bbox(cam, displace(cam.position, {40, 0}));
  ASSERT_TRUE(near && far);
  EXPECT_NEAR(near->width(), 2.0 * far->width(), 0.01);
}

TEST(Projection, FortyFiveDegreesIsRightEdge) {
  ProjectionModel p;
  EXPECT_DOUBLE_EQ(horizontal_pixel(45.0, p), 1920.0);
  EXPECT_DOUBLE_EQ(horizontal_pixel(-45.0, p), 0.0);
  EXPECT_DOUBLE_EQ(horizontal_pixel(0.0, p), 960.0);
}

TEST(Projection, OutOfViewIsNullopt) {
  const CameraPose cam{{44.0, -73.0}, 0.0};
  EXPECT_FALSE(project_sign_to_bbox(cam, displace(cam.position, {-20, 0})));   // behind
  EXPECT_FALSE(project_sign_to_bbox(cam, displace(cam.position, {150, 0})));   // too far
  EXPECT_FALSE(project_sign_to_bbox(cam, displace(cam.position, {10, 20})));   // outside FOV
}

TEST(Degrade, ZeroNoiseKeepsAnnotations) {
  const SimConfig cfg = zero_noise_preset(4);
  const RoadSegment s = generate_segment(cfg);
  Rng rng(1);
  const DetectionSegment d = degrade_to_detections(s, cfg.noise, cfg.class_count, rng);
  ASSERT_EQ(d.frames.size(), s.frames.size());
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    ASSERT_EQ(d.frames[f].detections.size(), s.frames[f].annotations.size());
    for (std::size_t k = 0; k < s.frames[f].annotations.size(); ++k) {
      const Annotation& a = s.frames[f].annotations[k];
      const Detection& x = d.frames[f].detections[k];
      EXPECT_EQ(x.predicted_gps, a.gps);
      EXPECT_EQ(x.bbox, a.bbox);
      EXPECT_EQ(x.class_id, a.class_id);
      EXPECT_GT(x.confidence, 0.0);
      EXPECT_LT(x.confidence, 1.0);
    }
  }
  Rng again(1);
  const DetectionSegment d2 = degrade_to_detections(s, cfg.noise, cfg.class_count, again);
  for (std::size_t f = 0; f < d.frames.size(); ++f) EXPECT_EQ(d.frames[f].detections, d2.frames[f].detections);
}

TEST(Degrade, FullMissRateLeavesOnlyFalsePositives) {
  const SimConfig cfg = benchmark_preset(4);
  const RoadSegment s = generate_segment(cfg);
  SimNoise noise = cfg.noise;
  noise.miss_rate = 1.0;
  noise.fp_rate_per_frame = 0.5;
  Rng rng(2);
  const DetectionSegment d = degrade_to_detections(s, noise, cfg.class_count, rng);
  std::size_t n = 0;
  for (const auto& f : d.frames) {
    for (const auto& x : f.detections) {
      ++n;
      EXPECT_LT(x.confidence, 1.0);
      EXPECT_NO_THROW(validate(x.bbox, s.image));
    }
  }
  const double expected = 0.5 * d.frames.size();
  EXPECT_NEAR(n, expected, 5 * std::sqrt(expected));
}

TEST(Degrade, GpsSigmaGivesExpectedRms) {
  SimConfig cfg = benchmark_preset(11);
  SimNoise noise;
  noise.gps_sigma_m = 2.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (const auto& s : generate_segments(cfg, 48, Exec::serial)) {
    Rng rng(n + 1);
    const DetectionSegment d = degrade_to_detections(s, noise, cfg.class_count, rng);
    for (std::size_t f = 0; f < s.frames.size(); ++f) {
      for (std::size_t k = 0; k < s.frames[f].annotations.size(); ++k) {
        const double e = haversine_m(s.frames[f].annotations[k].gps, d.frames[f].detections[k].predicted_gps);
        sum_sq += e * e;
        ++n;
      }
    }
  }
  ASSERT_GE(n, 10000u);
  EXPECT_NEAR(std::sqrt(sum_sq / n), 2.0 * std::sqrt(2.0), 0.05 * 2.0 * std::sqrt(2.0));
}

TEST(Degrade, BetaConfidence) {
  Rng rng(3);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) sum += sample_beta(rng, 8.0, 2.0);
  EXPECT_NEAR(sum / 20000, 0.8, 0.01);
}

TEST(Simulator, ParallelMatchesSerial) {
  const SimConfig cfg = benchmark_preset(5);
  const auto a = generate_segments(cfg, 6, Exec::serial);
  const auto b = generate_segments(cfg, 6, Exec::parallel);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(same_segments(a[i], b[i]));
  EXPECT_EQ(a[3].id, "seg-0003");
  const auto da = degrade_segments(a, cfg.noise, cfg.class_count, 9, Exec::serial);
  const auto db = degrade_segments(a, cfg.noise, cfg.class_count, 9, Exec::parallel);
  for (std::size_t i = 0; i < da.size(); ++i) {
    for (std::size_t f = 0; f < da[i].frames.size(); ++f) {
      EXPECT_EQ(da[i].frames[f].detections, db[i].frames[f].detections);
    }
  }
}

TEST(Simulator, ConfigValidation) {
  SimConfig cfg = benchmark_preset(1);
  cfg.frame_spacing_m = 0.0;
  EXPECT_THROW(generate_segment(cfg), std::invalid_argument);
  cfg = benchmark_preset(1);
  cfg.noise.miss_rate = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = zero_noise_preset(1);
  cfg.class_count = 2;
  EXPECT_THROW(generate_segment(cfg), std::invalid_argument);
}
