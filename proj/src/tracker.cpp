#include "signmap/tracker.hpp"

#include <algorithm>
#include <stdexcept>

namespace signmap {

void TrackerConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("tracker threshold must lie in (0, 1)");
  }
  if (max_gap < 0) throw std::invalid_argument("max_gap must be >= 0");
  if (!scorer) throw std::invalid_argument("tracker needs a scorer");
}

namespace {

CostMatrix cost_matrix_serial(const std::vector<ActiveTracklet>& active,
                              const std::vector<Detection>& next, const SnapshotGrid& next_grid,
                              const ImageSize& image, const PairScorer& scorer) {
  CostMatrix m(active.size(), next.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    const Detection& last = active[i].tracklet.detections.back();
    for (std::size_t j = 0; j < next.size(); ++j) {
      m(i, j) = scorer.score(last, *active[i].grid, next[j], next_grid, image);
    }
  }
  return m;
}

CostMatrix cost_matrix_parallel(const std::vector<ActiveTracklet>& active,
                                const std::vector<Detection>& next, const SnapshotGrid& next_grid,
                                const ImageSize& image, const PairScorer& scorer) {
  CostMatrix m(active.size(), next.size());
  const long rows = static_cast<long>(active.size());
  const long cols = static_cast<long>(next.size());
#pragma omp parallel for collapse(2) schedule(dynamic)
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      m(i, j) = scorer.score(active[i].tracklet.detections.back(), *active[i].grid, next[j],
                             next_grid, image);
    }
  }
  return m;
}

}  // namespace

CostMatrix build_cost_matrix(const std::vector<ActiveTracklet>& active,
                             const std::vector<Detection>& next, const SnapshotGrid& next_grid,
                             const ImageSize& image, const PairScorer& scorer, Exec exec) {
  return exec == Exec::parallel ? cost_matrix_parallel(active, next, next_grid, image, scorer)
                                : cost_matrix_serial(active, next, next_grid, image, scorer);
}

StepResult step_frame(std::vector<ActiveTracklet> active, const std::vector<Detection>& next,
                      const ImageSize& image, const TrackerConfig& cfg, std::int64_t& next_id) {
  cfg.validate();
  StepResult result;
  auto grid = std::make_shared<const SnapshotGrid>(build_detection_snapshot(next, image));

  std::vector<char> row_matched(active.size(), 0);
  std::vector<char> col_matched(next.size(), 0);
  if (!active.empty() && !next.empty()) {
    const CostMatrix cost = build_cost_matrix(active, next, *grid, image, *cfg.scorer, cfg.exec);
    for (const auto& [i, j] : match_with_cutoff(cost, cfg.threshold).pairs) {
      row_matched[i] = 1;
      col_matched[j] = 1;
      active[i].tracklet.detections.push_back(next[j]);
      active[i].grid = grid;
      active[i].missed = 0;
    }
  }

  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!row_matched[i] && ++active[i].missed > cfg.max_gap) {
      result.closed.push_back(std::move(active[i].tracklet));
    } else {
      result.extended.push_back(std::move(active[i]));
    }
  }
  for (std::size_t j = 0; j < next.size(); ++j) {
    if (col_matched[j]) continue;
    result.created.push_back({Tracklet{next_id++, {next[j]}}, grid, 0});
  }
  return result;
}

std::vector<Tracklet> track_segment(const DetectionSegment& segment, const TrackerConfig& cfg) {
  cfg.validate();
  std::vector<Tracklet> done;
  std::vector<ActiveTracklet> active;
  std::int64_t next_id = 0;
  for (std::size_t f = 0; f < segment.frames.size(); ++f) {
    if (f > 0 && segment.frames[f].index <= segment.frames[f - 1].index) {
      throw std::invalid_argument("segment " + segment.id + " frames are not strictly increasing");
    }
    StepResult step =
        step_frame(std::move(active), segment.frames[f].detections, segment.image, cfg, next_id);
    for (auto& t : step.closed) done.push_back(std::move(t));
    active = std::move(step.extended);
    for (auto& t : step.created) active.push_back(std::move(t));
  }
  for (auto& a : active) done.push_back(std::move(a.tracklet));
  std::sort(done.begin(), done.end(),
            [](const Tracklet& x, const Tracklet& y) { return x.id < y.id; });
  return done;
}

}  // namespace signmap
