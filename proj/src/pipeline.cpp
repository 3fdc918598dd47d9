#include "signmap/pipeline.hpp"

#include <map>
#include <stdexcept>

namespace signmap {

void PipelineConfig::validate() const {
  tracker.validate();
  if (method == CondenseMethod::mrf) throw std::invalid_argument("condenser method not implemented: mrf");
  if (!(min_confidence >= 0.0 && min_confidence <= 1.0)) {
    throw std::invalid_argument("min_confidence must lie in [0, 1]");
  }
  if (min_support < 1) throw std::invalid_argument("min_support must be >= 1");
}

DetectionSegment filter_detections(const DetectionSegment& seg, double min_confidence) {
  DetectionSegment out{seg.id, seg.image, {}};
  out.frames.reserve(seg.frames.size());
  for (const auto& f : seg.frames) {
    DetectionFrame kept{f.index, f.camera, {}};
    for (const auto& d : f.detections) {
      if (d.confidence >= min_confidence) kept.detections.push_back(d);
    }
    out.frames.push_back(std::move(kept));
  }
  return out;
}

SegmentResult run_segment(const DetectionSegment& seg, const PipelineConfig& cfg) {
  cfg.validate();
  SegmentResult r;
  r.segment_id = seg.id;
  auto tracklets = cfg.min_confidence > 0.0
                       ? track_segment(filter_detections(seg, cfg.min_confidence), cfg.tracker)
                       : track_segment(seg, cfg.tracker);
  for (auto& t : tracklets) {
    if (static_cast<int>(t.detections.size()) >= cfg.min_support) r.tracklets.push_back(std::move(t));
  }
  r.predictions = condense_all(r.tracklets, cfg.method, cfg.tracker.exec);
  return r;
}

std::vector<SegmentResult> run_segments(const std::vector<DetectionSegment>& segs,
                                        const PipelineConfig& cfg, Exec exec) {
  cfg.validate();
  PipelineConfig inner = cfg;
  if (exec == Exec::parallel) inner.tracker.exec = Exec::serial;
  std::vector<SegmentResult> out(segs.size());
  const long n = static_cast<long>(segs.size());
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (long i = 0; i < n; ++i) out[i] = run_segment(segs[i], inner);
  return out;
}

MatchReport evaluate_results(const std::vector<SegmentResult>& results,
                             const std::vector<RoadSegment>& truth, const MatchOptions& options) {
  std::map<std::string, const RoadSegment*> by_id;
  for (const auto& t : truth) by_id[t.id] = &t;
  std::vector<MatchReport> reports;
  for (const auto& r : results) {
    auto it = by_id.find(r.segment_id);
    if (it == by_id.end()) throw std::invalid_argument("no truth for segment " + r.segment_id);
    reports.push_back(match_predictions(r.predictions, ground_truth_signs(*it->second), options));
  }
  return merge_reports(reports);
}

}  // namespace signmap
