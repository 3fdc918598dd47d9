#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "signmap/types.hpp"

namespace signmap {

inline constexpr double kMatchRadiusM = 15.0;
inline constexpr int kHistogramBins = 30;  // 1 m bins over [0, 30) m

struct PredictionMatch {
  std::size_t prediction = 0;
  std::size_t truth = 0;
  double error_m = 0.0;
  ClassId truth_class = 0;
  bool class_agrees = false;
};

struct MatchReport {
  int tp = 0;
  int fn = 0;
  int fp = 0;
  std::vector<double> gps_errors;  // one per TP, same order as `matches`
  std::vector<PredictionMatch> matches;
  std::map<ClassId, double> per_class_errors;

  double precision() const;
  double recall() const;
};

struct MatchOptions {
  double radius_m = kMatchRadiusM;
  bool require_class = false;
};

/// One-to-one matching of predictions to truth by optimal assignment on
/// haversine distance; pairs farther than the radius never count.
MatchReport match_predictions(const std::vector<SignPrediction>& preds,
                              const std::vector<GroundTruthSign>& truth,
                              const MatchOptions& options = {});

/// Pools reports from independent segments.
MatchReport merge_reports(const std::vector<MatchReport>& reports);

struct ErrorStats {
  std::optional<double> mean_m;
  std::optional<double> std_m;  // population
  // Errors at or beyond the last edge land in the last bin.
  std::array<int, kHistogramBins> histogram{};
};

ErrorStats gps_error_stats(const MatchReport& r);

/// Mean TP error per truth class; classes without TPs are absent.
std::map<ClassId, double> per_class_gps_error(const MatchReport& r);

double iou(const BoundingBox& a, const BoundingBox& b);

/// All-points interpolated AP for one class. Detections and annotations are
/// matched only within the same frame index. nullopt when the class has no
/// annotations.
std::optional<double> average_precision(const std::vector<Detection>& dets,
                                        const std::vector<Annotation>& anns, ClassId class_id,
                                        double iou_thresh = 0.5);

/// Unweighted mean over classes that have annotations. Throws if none do.
double mean_average_precision(const std::vector<Detection>& dets,
                              const std::vector<Annotation>& anns, double iou_thresh = 0.5);

}  // namespace signmap
