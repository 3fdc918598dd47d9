#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "signmap/evaluation.hpp"
#include "signmap/geodesy.hpp"
#include "signmap/similarity.hpp"
#include "signmap/simulator.hpp"

using namespace signmap;
namespace fl = signmap::feature_layout;

namespace {

const ImageSize kImage{1920, 1080};

Detection det(BoundingBox b, ClassId c, double conf, GeoPoint gps = {44.0001, -73.0},
              CameraPose cam = {{44.0, -73.0}, 0.0}) {
  Detection d;
  d.bbox = b;
  d.class_id = c;
  d.confidence = conf;
  d.predicted_gps = gps;
  d.camera = cam;
  return d;
}

Annotation ann(int frame, BoundingBox b, ClassId c, SignId id, GeoPoint gps = {44.0001, -73.0}) {
  Annotation a;
  a.frame_index = frame;
  a.bbox = b;
  a.class_id = c;
  a.sign_id = id;
  a.gps = gps;
  a.camera = {{44.0, -73.0}, 0.0};
  return a;
}

RoadSegment segment_of(std::vector<std::vector<Annotation>> frames) {
  RoadSegment s{"s", kImage, {}};
  for (std::size_t i = 0; i < frames.size(); ++i) {
    s.frames.push_back({static_cast<int>(i), {{44.0, -73.0}, 0.0}, frames[i]});
  }
  return s;
}

DetectionSegment detections_of(std::vector<std::vector<Detection>> frames) {
  DetectionSegment s{"s", kImage, {}};
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (auto& d : frames[i]) d.frame_index = static_cast<int>(i);
    s.frames.push_back({static_cast<int>(i), {{44.0, -73.0}, 0.0}, frames[i]});
  }
  return s;
}

NoiseModel zero_model() { return NoiseModel{{NoiseSample{}}}; }

}  // namespace

TEST(Snapshot, EmptyFrameIsAllZero) {
  const SnapshotGrid g = build_detection_snapshot({}, kImage);
  EXPECT_EQ(g, SnapshotGrid{});
  EXPECT_EQ(g.occupied_count(), 0);
  for (double v : g.summary()) EXPECT_EQ(v, 0.0);
}

TEST(Snapshot, CellOfCenter) {
  EXPECT_EQ(snapshot_cell_of({950, 530, 970, 550}, kImage), (std::pair<int, int>{5, 5}));
  EXPECT_EQ(snapshot_cell_of({1910, 1070, 1920, 1080}, kImage), (std::pair<int, int>{9, 9}));
  EXPECT_EQ(snapshot_cell_of({0, 0, 2, 2}, kImage), (std::pair<int, int>{0, 0}));
}

TEST(Snapshot, CollisionKeepsHigherConfidence) {
  const auto g = build_detection_snapshot(
      {det({950, 530, 970, 550}, 3, 0.4), det({955, 535, 965, 545}, 8, 0.9),
       det({952, 532, 968, 548}, 9, 0.5)},
      kImage);
  EXPECT_EQ(g.occupied_count(), 1);
  EXPECT_EQ(g.cell(5, 5).class_value, 8.0);
  EXPECT_EQ(g.cell(5, 5).confidence, 0.9);
}

TEST(Snapshot, RejectsBadImage) {
  EXPECT_THROW(build_detection_snapshot({}, {0, 10}), std::invalid_argument);
}

TEST(PairFeatures, SelfPairHasZeroDifference) {
  const auto e = ClassEmbedding::seeded(10, 1);
  const Detection a = det({100, 100, 140, 140}, 2, 0.8);
  const SnapshotGrid g = build_detection_snapshot({a}, kImage);
  const PairFeatures f = build_pair_features(a, a, g, g, kImage, e);
  for (std::size_t k = 0; k < fl::kDifferenceSize; ++k) EXPECT_EQ(f.values[fl::kDifference + k], 0.0);
}

TEST(PairFeatures, FixedLengthAndFinite) {
  const auto e = ClassEmbedding::seeded(10, 1);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> off(-200, 200);
  EXPECT_EQ(fl::kTotal, 6283u);
  for (int i = 0; i < 50; ++i) {
    const Detection a = det({10, 10, 50, 50}, i % 10, 0.3, displace({44, -73}, {off(rng), off(rng)}));
    const Detection b = det({500, 200, 600, 300}, (i + 3) % 10, 0.7,
                            displace({44, -73}, {off(rng), off(rng)}),
                            {displace({44, -73}, {off(rng), 0}), 90.0});
    const SnapshotGrid ga = build_detection_snapshot({a}, kImage);
    const SnapshotGrid gb = build_detection_snapshot({a, b}, kImage);
    const PairFeatures f = build_pair_features(a, b, ga, gb, kImage, e);
    ASSERT_EQ(f.values.size(), fl::kTotal);
    for (double v : f.values) ASSERT_TRUE(std::isfinite(v));
    for (std::size_t k = fl::kPatchA; k < fl::kTotal; ++k) ASSERT_EQ(f.values[k], 0.0);
  }
}

TEST(PairFeatures, SwapSwapsBlocks) {
  const auto e = ClassEmbedding::seeded(10, 1);
  const Detection a = det({10, 10, 50, 50}, 1, 0.3, {44.0003, -73.0002}, {{44.0, -73.0}, 10.0});
  const Detection b = det({500, 200, 600, 300}, 4, 0.7, {44.0001, -72.9998}, {{44.0001, -73.0}, 20.0});
  const SnapshotGrid ga = build_detection_snapshot({a}, kImage);
  const SnapshotGrid gb = build_detection_snapshot({b}, kImage);
  const PairFeatures ab = build_pair_features(a, b, ga, gb, kImage, e);
  const PairFeatures ba = build_pair_features(b, a, gb, ga, kImage, e);
  for (std::size_t k = 0; k < fl::kDetectionBlock; ++k) {
    EXPECT_EQ(ab.values[fl::kBlockA + k], ba.values[fl::kBlockB + k]);
    EXPECT_EQ(ab.values[fl::kBlockB + k], ba.values[fl::kBlockA + k]);
  }
  for (std::size_t k = 0; k < fl::kDifferenceSize; ++k) {
    EXPECT_EQ(ab.values[fl::kDifference + k], ba.values[fl::kDifference + k]);
  }
  for (std::size_t k = 0; k < kSnapshotSummary; ++k) {
    EXPECT_EQ(ab.values[fl::kSnapshotA + k], ba.values[fl::kSnapshotB + k]);
  }
  EXPECT_EQ(ab.class_a, 1);
  EXPECT_EQ(ab.class_b, 4);
}

TEST(PairFeatures, EmbeddingRowsAreUnitVectors) {
  const auto e = ClassEmbedding::seeded(5, 9);
  for (int c = 0; c < 5; ++c) {
    double n = 0.0;
    for (double v : e.row(c)) n += v * v;
    EXPECT_NEAR(n, 1.0, 1e-12);
  }
  EXPECT_EQ(e, ClassEmbedding::seeded(5, 9));
  EXPECT_THROW(e.row(5), std::out_of_range);
  const Detection a = det({10, 10, 50, 50}, 7, 0.3);
  EXPECT_ANY_THROW(build_pair_features(a, a, {}, {}, kImage, e));
}

TEST(Baseline, Examples) {
  const Detection a = det({0, 0, 10, 10}, 1, 0.5, {44, -73});
  EXPECT_EQ(baseline_score(a, a), 0.0);
  const double gap = 10.0 * std::log(2.0);
  const Detection b = det({0, 0, 10, 10}, 1, 0.5, displace({44, -73}, {gap, 0}));
  const double d = haversine_m(a.predicted_gps, b.predicted_gps);
  EXPECT_NEAR(baseline_score(a, b), 1.0 - std::exp(-d / 10.0), 1e-15);
  EXPECT_NEAR(baseline_score(a, b), 0.5, 2e-3);
  Detection c = a;
  c.class_id = 2;
  EXPECT_NEAR(baseline_score(a, c), 1.0 - std::exp(-1.0), 1e-15);
}

TEST(Baseline, Polarity) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> far(51, 500), ang(0, 6.28);
  for (int i = 0; i < 1000; ++i) {
    const Detection a = det({0, 0, 10, 10}, 1, 0.5, {44, -73});
    const double r = far(rng), t = ang(rng);
    const Detection b = det({0, 0, 10, 10}, 2, 0.5, displace({44, -73}, {r * std::cos(t), r * std::sin(t)}));
    EXPECT_LE(baseline_score(a, a), baseline_score(a, b));
  }
}

TEST(Harvest, IdenticalDetectionGivesZeroSample) {
  const BoundingBox b{100, 100, 200, 200};
  const auto m = harvest_noise_model(segment_of({{ann(0, b, 3, 1)}}),
                                     detections_of({{det(b, 3, 0.9)}}));
  ASSERT_EQ(m.samples.size(), 1u);
  EXPECT_EQ(m.samples[0], NoiseSample{});
}

TEST(Harvest, AmbiguousDoubleMatchContributesNothing) {
  const BoundingBox b{100, 100, 200, 200};
  const auto m = harvest_noise_model(segment_of({{ann(0, b, 3, 1)}}),
                                     detections_of({{det(b, 3, 0.9), det({101, 100, 200, 200}, 3, 0.5)}}));
  EXPECT_TRUE(m.samples.empty());
}

TEST(Harvest, LowIouContributesNothing) {
  const BoundingBox a{0, 0, 100, 100};
  const BoundingBox half{0, 0, 100, 50};
  EXPECT_DOUBLE_EQ(iou(a, half), 0.5);
  EXPECT_TRUE(harvest_noise_model(segment_of({{ann(0, a, 3, 1)}}), detections_of({{det(half, 3, 0.9)}}))
                  .samples.empty());
}

TEST(Harvest, RecordsDiscrepancy) {
  const BoundingBox a{100, 100, 200, 200};
  const BoundingBox d{101, 99, 202, 200};
  const auto m = harvest_noise_model(segment_of({{ann(0, a, 3, 1, {44.0, -73.0})}}),
                                     detections_of({{det(d, 4, 0.9, {44.00001, -73.00002})}}));
  ASSERT_EQ(m.samples.size(), 1u);
  EXPECT_NEAR(m.samples[0].dlat_deg, 0.00001, 1e-12);
  EXPECT_NEAR(m.samples[0].dlon_deg, -0.00002, 1e-12);
  EXPECT_FALSE(m.samples[0].class_match);
  EXPECT_EQ(m.samples[0].dbbox, (std::array<double, 4>{1, -1, 2, 0}));
}

TEST(Harvest, ZeroNoiseSimulationGivesAllZeroModel) {
  const SimConfig cfg = zero_noise_preset(3);
  const auto segs = generate_segments(cfg, 2, Exec::serial);
  const auto dets = degrade_segments(segs, cfg.noise, cfg.class_count, 5, Exec::serial);
  const NoiseModel m = harvest_noise_model(segs, dets);
  std::size_t anns = 0;
  for (const auto& s : segs) {
    for (const auto& f : s.frames) anns += f.annotations.size();
  }
  EXPECT_GT(m.samples.size(), 0u);
  EXPECT_LE(m.samples.size(), anns);
  for (const auto& s : m.samples) EXPECT_EQ(s, NoiseSample{});
  EXPECT_EQ(harvest_noise_model(segs, dets, Exec::serial).samples, m.samples);
}

TEST(SampleNoise, Contract) {
  Rng rng(1);
  EXPECT_THROW(sample_noise(NoiseModel{}, rng), std::logic_error);
  NoiseSample only;
  only.dlat_deg = 3e-5;
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_noise(NoiseModel{{only}}, rng), only);

  NoiseModel m;
  for (int i = 0; i < 10; ++i) m.samples.push_back({i * 1e-6, 0, true, {}});
  Rng r1(77), r2(77);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_noise(m, r1), sample_noise(m, r2));
}

TEST(SampleNoise, BootstrapMean) {
  NoiseModel m;
  for (int i = 0; i < 10; ++i) m.samples.push_back({static_cast<double>(i), 0, true, {}});
  const double mu = 4.5;
  const double sigma = std::sqrt(8.25);  // population variance of 0..9
  Rng rng(3);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += sample_noise(m, rng).dlat_deg;
  EXPECT_NEAR(sum / n, mu, 3.0 * sigma / std::sqrt(n));
}

TEST(TrainingPairs, SameSignGivesLabelZero) {
  const BoundingBox b{100, 100, 140, 140};
  Rng rng(1);
  const EmpiricalNoise noise(zero_model());
  const auto pairs = consecutive_frame_pairs(segment_of({{ann(0, b, 2, 7)}, {ann(1, b, 2, 7)}}), noise, 10, rng);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].label, 0);
}

TEST(TrainingPairs, DistinctSignsGiveLabelOne) {
  const BoundingBox b{100, 100, 140, 140};
  Rng rng(1);
  const EmpiricalNoise noise(zero_model());
  const auto pairs = consecutive_frame_pairs(segment_of({{ann(0, b, 2, 7)}, {ann(1, b, 2, 8)}}), noise, 10, rng);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].label, 1);
}

TEST(TrainingPairs, ZeroNoiseKeepsGps) {
  const SimConfig cfg = zero_noise_preset(2);
  const RoadSegment seg = generate_segment(cfg);
  Rng rng(1);
  const EmpiricalNoise noise(zero_model());
  const auto pairs = consecutive_frame_pairs(seg, noise, cfg.class_count, rng);
  ASSERT_FALSE(pairs.empty());
  std::vector<GeoPoint> truth;
  for (const auto& f : seg.frames) {
    for (const auto& a : f.annotations) truth.push_back(a.gps);
  }
  auto known = [&](const GeoPoint& g) { return std::find(truth.begin(), truth.end(), g) != truth.end(); };
  for (const auto& p : pairs) {
    EXPECT_TRUE(known(p.a.predicted_gps));
    EXPECT_TRUE(known(p.b.predicted_gps));
  }
}

TEST(TrainingPairs, BalancedAndSkipping) {
  SimConfig cfg = benchmark_preset(8);
  auto segs = generate_segments(cfg, 3, Exec::serial);
  RoadSegment lonely{"lonely", kImage, {}};
  lonely.frames.push_back({0, {{44, -73}, 0}, {ann(0, {0, 0, 10, 10}, 1, 1)}});
  lonely.frames.push_back({1, {{44, -73}, 0}, {ann(1, {0, 0, 10, 10}, 1, 2)}});
  segs.push_back(lonely);
  Rng rng(4);
  const ParametricNoise noise(2.0, 0.05, 2.0);
  const TrainingPairs tp = generate_training_pairs(segs, noise, cfg.class_count, rng);
  EXPECT_EQ(tp.skipped_segments, (std::vector<std::string>{"lonely"}));
  std::size_t same = 0;
  for (const auto& p : tp.pairs) same += p.label == 0;
  EXPECT_GT(same, 100u);
  EXPECT_EQ(2 * same, tp.pairs.size());

  Rng again(4);
  const TrainingPairs tp2 = generate_training_pairs(segs, noise, cfg.class_count, again);
  ASSERT_EQ(tp.pairs.size(), tp2.pairs.size());
  for (std::size_t i = 0; i < tp.pairs.size(); ++i) {
    EXPECT_EQ(tp.pairs[i].a, tp2.pairs[i].a);
    EXPECT_EQ(tp.pairs[i].b, tp2.pairs[i].b);
  }
}

TEST(TrainingPairs, SplitIsEightyTenTen) {
  SimConfig cfg = benchmark_preset(8);
  const auto segs = generate_segments(cfg, 2, Exec::serial);
  Rng rng(4);
  const ParametricNoise noise(2.0, 0.05, 2.0);
  auto pairs = generate_training_pairs(segs, noise, cfg.class_count, rng).pairs;
  const std::size_t n = pairs.size();
  const PairSplit s = split_pairs(std::move(pairs), rng);
  EXPECT_EQ(s.train.size() + s.validation.size() + s.test.size(), n);
  EXPECT_NEAR(static_cast<double>(s.train.size()) / n, 0.8, 0.01);
  EXPECT_NEAR(static_cast<double>(s.validation.size()) / n, 0.1, 0.01);
}

TEST(Perturb, ClassConfusionPicksOtherClass) {
  Rng rng(1);
  NoiseSample s;
  s.class_match = false;
  for (int i = 0; i < 200; ++i) {
    const Detection d = perturb_annotation(ann(0, {0, 0, 10, 10}, 3, 1), s, 5, kImage, rng);
    EXPECT_NE(d.class_id, 3);
    EXPECT_GE(d.class_id, 0);
    EXPECT_LT(d.class_id, 5);
  }
  s.dbbox = {-50, -50, 0, 0};
  const Detection clipped = perturb_annotation(ann(0, {0, 0, 10, 10}, 3, 1), s, 5, kImage, rng);
  EXPECT_NO_THROW(validate(clipped.bbox, kImage));
}
