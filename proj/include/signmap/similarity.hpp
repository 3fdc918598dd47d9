#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "signmap/exec.hpp"
#include "signmap/types.hpp"

namespace signmap {

inline constexpr int kGridSize = 10;
inline constexpr int kEmbeddingDim = 50;
inline constexpr int kPatchSide = 32;
inline constexpr int kPatchValues = kPatchSide * kPatchSide * 3;
inline constexpr int kSnapshotSummary = 8;
inline constexpr double kHarvestIou = 0.9;

// ---------------------------------------------------------------------------
// Snapshot of all detections in one frame, binned on a 10x10 image grid.

struct SnapshotCell {
  bool occupied = false;
  double class_value = 0.0;
  double north_m = 0.0;  // predicted sign position relative to the frame camera
  double east_m = 0.0;
  double confidence = 0.0;

  bool operator==(const SnapshotCell&) const = default;
};

class SnapshotGrid {
 public:
  SnapshotCell& cell(int ix, int iy) { return cells_[iy * kGridSize + ix]; }
  const SnapshotCell& cell(int ix, int iy) const { return cells_[iy * kGridSize + ix]; }
  const std::array<SnapshotCell, kGridSize * kGridSize>& cells() const { return cells_; }

  int occupied_count() const;

  /// Mean then max over all 100 cells of (class, north, east, confidence),
  /// scaled for the metric model.
  std::array<double, kSnapshotSummary> summary() const;

  bool operator==(const SnapshotGrid&) const = default;

 private:
  std::array<SnapshotCell, kGridSize * kGridSize> cells_{};
};

/// Grid cell of a bbox center, clamped to [0, 9].
std::pair<int, int> snapshot_cell_of(const BoundingBox& b, const ImageSize& image);

/// Bins detections by bbox center; a collision keeps the higher confidence.
SnapshotGrid build_detection_snapshot(const std::vector<Detection>& frame_detections,
                                      const ImageSize& image);

// ---------------------------------------------------------------------------
// Class embedding: one 50-dim row per class, seeded unit vectors at start.

class ClassEmbedding {
 public:
  ClassEmbedding() = default;
  ClassEmbedding(int num_classes, std::vector<double> table);

  static ClassEmbedding seeded(int num_classes, std::uint64_t seed);

  int num_classes() const { return num_classes_; }
  bool contains(ClassId c) const { return c >= 0 && c < num_classes_; }

  /// Throws std::out_of_range for an unknown class.
  std::span<const double> row(ClassId c) const;
  std::span<double> row(ClassId c);

  const std::vector<double>& table() const { return table_; }
  std::vector<double>& table() { return table_; }

  bool operator==(const ClassEmbedding&) const = default;

 private:
  int num_classes_ = 0;
  std::vector<double> table_;
};

// ---------------------------------------------------------------------------
// Pair feature vector. Fixed layout:
//   [0, 60)        detection a block
//   [60, 120)      detection b block
//   [120, 123)     GPS difference block: |d north|, |d east|, distance
//   [123, 131)     snapshot summary of a's frame
//   [131, 139)     snapshot summary of b's frame
//   [139, 3211)    32x32x3 pixel patch of a (zero-filled)
//   [3211, 6283)   32x32x3 pixel patch of b (zero-filled)
// A detection block holds camera north, camera east, sin heading,
// cos heading, sign north, sign east, bbox (4 values normalized by image
// size) and the 50-dim class embedding. Positions are meters from the
// midpoint of the two cameras.

namespace feature_layout {
inline constexpr std::size_t kDetectionBlock = 10 + kEmbeddingDim;
inline constexpr std::size_t kEmbeddingOffset = 10;
inline constexpr std::size_t kBlockA = 0;
inline constexpr std::size_t kBlockB = kDetectionBlock;
inline constexpr std::size_t kDifference = 2 * kDetectionBlock;
inline constexpr std::size_t kDifferenceSize = 3;
inline constexpr std::size_t kSnapshotA = kDifference + kDifferenceSize;
inline constexpr std::size_t kSnapshotB = kSnapshotA + kSnapshotSummary;
inline constexpr std::size_t kPatchA = kSnapshotB + kSnapshotSummary;
inline constexpr std::size_t kPatchB = kPatchA + kPatchValues;
inline constexpr std::size_t kTotal = kPatchB + kPatchValues;

inline constexpr double kPositionScale = 0.01;    // per meter
inline constexpr double kDifferenceScale = 0.1;   // per meter
}  // namespace feature_layout

struct PairFeatures {
  std::vector<double> values;
  ClassId class_a = 0;
  ClassId class_b = 0;
};

PairFeatures build_pair_features(const Detection& a, const Detection& b,
                                 const SnapshotGrid& grid_a, const SnapshotGrid& grid_b,
                                 const ImageSize& image, const ClassEmbedding& embedding);

// ---------------------------------------------------------------------------
// Scorers. 0 means same sign, 1 means different.

inline constexpr double kBaselineDistanceScaleM = 10.0;
inline constexpr double kBaselineClassPenalty = 1.0;

double baseline_score(const Detection& a, const Detection& b);

class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual double score(const Detection& a, const SnapshotGrid& grid_a, const Detection& b,
                       const SnapshotGrid& grid_b, const ImageSize& image) const = 0;
};

class BaselineScorer final : public PairScorer {
 public:
  double score(const Detection& a, const SnapshotGrid&, const Detection& b, const SnapshotGrid&,
               const ImageSize&) const override {
    return baseline_score(a, b);
  }
};

// ---------------------------------------------------------------------------
// Detector noise model.

struct NoiseSample {
  double dlat_deg = 0.0;
  double dlon_deg = 0.0;
  bool class_match = true;
  std::array<double, 4> dbbox{};  // x_min, y_min, x_max, y_max deltas in pixels

  bool operator==(const NoiseSample&) const = default;
};

struct NoiseModel {
  std::vector<NoiseSample> samples;
};

/// Records the discrepancy of every annotation that overlaps exactly one
/// same-frame detection at IoU > 0.9. Frames pair up by frame index.
NoiseModel harvest_noise_model(const RoadSegment& annotations, const DetectionSegment& detections,
                               Exec exec = Exec::parallel);
NoiseModel harvest_noise_model(const std::vector<RoadSegment>& annotations,
                               const std::vector<DetectionSegment>& detections,
                               Exec exec = Exec::parallel);

/// Bootstrap draw. Throws std::logic_error on an empty model.
NoiseSample sample_noise(const NoiseModel& model, Rng& rng);

class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  /// `at` is where the perturbed annotation sits, for meter/degree scaling.
  virtual NoiseSample sample(Rng& rng, const GeoPoint& at) const = 0;
};

class EmpiricalNoise final : public NoiseSource {
 public:
  explicit EmpiricalNoise(NoiseModel model);
  NoiseSample sample(Rng& rng, const GeoPoint& at) const override;
  const NoiseModel& model() const { return model_; }

 private:
  NoiseModel model_;
};

// Gaussian GPS error in meters, class confusion and bbox jitter.
class ParametricNoise final : public NoiseSource {
 public:
  ParametricNoise(double gps_sigma_m, double class_confusion, double bbox_jitter_px);
  NoiseSample sample(Rng& rng, const GeoPoint& at) const override;

 private:
  double gps_sigma_m_;
  double class_confusion_;
  double bbox_jitter_px_;
};

/// Applies a noise sample to an annotation. A class mismatch moves to a
/// uniformly drawn other class; the bbox is clipped back into the image.
Detection perturb_annotation(const Annotation& a, const NoiseSample& noise, int num_classes,
                             const ImageSize& image, Rng& rng);

// ---------------------------------------------------------------------------
// Labeled training pairs.

struct LabeledPair {
  Detection a;
  Detection b;
  // Frames are shared by many pairs.
  std::shared_ptr<const SnapshotGrid> grid_a;
  std::shared_ptr<const SnapshotGrid> grid_b;
  ImageSize image;
  int label = 0;  // 0 same sign, 1 different
};

struct TrainingPairs {
  std::vector<LabeledPair> pairs;
  std::vector<std::string> skipped_segments;  // no same-sign pair
};

/// Perturbs every annotation of the segment, then pairs each annotation of
/// frame t with each annotation of frame t+1 (label 0 for the same sign id).
/// No balancing.
std::vector<LabeledPair> consecutive_frame_pairs(const RoadSegment& seg, const NoiseSource& noise,
                                                int num_classes, Rng& rng);

/// consecutive_frame_pairs over all segments, then the majority label is
/// subsampled to a 50/50 balance across the pooled pairs. Segments without a
/// same-sign pair are skipped and listed.
TrainingPairs generate_training_pairs(const std::vector<RoadSegment>& segments,
                                      const NoiseSource& noise, int num_classes, Rng& rng);

struct PairSplit {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> validation;
  std::vector<LabeledPair> test;
};

/// Shuffled 80/10/10 split.
PairSplit split_pairs(std::vector<LabeledPair> pairs, Rng& rng);

}  // namespace signmap
