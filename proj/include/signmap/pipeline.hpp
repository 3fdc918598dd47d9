#pragma once

#include <string>
#include <vector>

#include "signmap/condenser.hpp"
#include "signmap/evaluation.hpp"
#include "signmap/exec.hpp"
#include "signmap/tracker.hpp"
#include "signmap/types.hpp"

namespace signmap {

// Detections -> tracklets -> predictions for whole segments. The confidence
// and support filters default to off.
struct PipelineConfig {
  TrackerConfig tracker;
  CondenseMethod method = CondenseMethod::weighted_average;
  double min_confidence = 0.0;  // detections below are dropped before tracking
  int min_support = 1;          // tracklets shorter than this are dropped

  void validate() const;
};

/// Copy of the segment without detections below `min_confidence`.
DetectionSegment filter_detections(const DetectionSegment& seg, double min_confidence);

struct SegmentResult {
  std::string segment_id;
  std::vector<Tracklet> tracklets;        // after the support filter
  std::vector<SignPrediction> predictions;
};

SegmentResult run_segment(const DetectionSegment& seg, const PipelineConfig& cfg);

/// Results in input order. With Exec::parallel segments run concurrently and
/// each segment's own kernels run serially.
std::vector<SegmentResult> run_segments(const std::vector<DetectionSegment>& segs,
                                        const PipelineConfig& cfg, Exec exec = Exec::parallel);

/// Matches each segment against the truth segment with the same id and pools
/// the reports. Throws std::invalid_argument on an id without truth.
MatchReport evaluate_results(const std::vector<SegmentResult>& results,
                             const std::vector<RoadSegment>& truth,
                             const MatchOptions& options = {});

}  // namespace signmap
