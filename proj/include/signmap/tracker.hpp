#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "signmap/assignment.hpp"
#include "signmap/exec.hpp"
#include "signmap/similarity.hpp"
#include "signmap/types.hpp"

namespace signmap {

struct TrackerConfig {
  double threshold = 0.7;
  int max_gap = 0;  // frames a tracklet may go unmatched and stay open
  std::shared_ptr<const PairScorer> scorer = std::make_shared<BaselineScorer>();
  Exec exec = Exec::parallel;

  /// Throws std::invalid_argument unless threshold in (0, 1), max_gap >= 0
  /// and a scorer is set.
  void validate() const;
};

// An open tracklet plus the snapshot of its latest frame.
struct ActiveTracklet {
  Tracklet tracklet;
  std::shared_ptr<const SnapshotGrid> grid;
  int missed = 0;  // consecutive frames without a match
};

struct StepResult {
  std::vector<ActiveTracklet> extended;  // matched, or unmatched but within max_gap
  std::vector<ActiveTracklet> created;
  std::vector<Tracklet> closed;
};

/// cost(i, j) = scorer(latest detection of tracklet i, detection j).
CostMatrix build_cost_matrix(const std::vector<ActiveTracklet>& active,
                             const std::vector<Detection>& next, const SnapshotGrid& next_grid,
                             const ImageSize& image, const PairScorer& scorer, Exec exec);

/// One frame of tracking. New tracklets take ids from `next_id`.
StepResult step_frame(std::vector<ActiveTracklet> active, const std::vector<Detection>& next,
                      const ImageSize& image, const TrackerConfig& cfg, std::int64_t& next_id);

/// Tracklets of a whole segment, ordered by id. Every detection ends up in
/// exactly one tracklet.
std::vector<Tracklet> track_segment(const DetectionSegment& segment, const TrackerConfig& cfg);

}  // namespace signmap
