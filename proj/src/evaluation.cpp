#include "signmap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "signmap/assignment.hpp"

namespace signmap {

double MatchReport::precision() const {
  const int n = tp + fp;
  return n == 0 ? 0.0 : static_cast<double>(tp) / n;
}

double MatchReport::recall() const {
  const int n = tp + fn;
  return n == 0 ? 0.0 : static_cast<double>(tp) / n;
}

MatchReport match_predictions(const std::vector<SignPrediction>& preds,
                              const std::vector<GroundTruthSign>& truth,
                              const MatchOptions& options) {
  MatchReport report;
  if (preds.empty() || truth.empty()) {
    report.fn = static_cast<int>(truth.size());
    report.fp = static_cast<int>(preds.size());
    return report;
  }

  // A forbidden pair costs more than any full set of allowed pairs, so the
  // optimum first maximizes the number of in-radius matches.
  const std::size_t k = std::min(preds.size(), truth.size());
  const double forbidden = options.radius_m * static_cast<double>(k + 1) + 1.0;

  CostMatrix cost(preds.size(), truth.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const double d = haversine_m(preds[i].gps, truth[j].gps);
      const bool class_ok = !options.require_class || preds[i].class_id == truth[j].class_id;
      cost(i, j) = (d <= options.radius_m && class_ok) ? d : forbidden;
    }
  }

  const Matching m = match_with_cutoff(cost, options.radius_m);
  for (const auto& [i, j] : m.pairs) {
    const double d = cost(i, j);
    report.matches.push_back({i, j, d, truth[j].class_id, preds[i].class_id == truth[j].class_id});
    report.gps_errors.push_back(d);
  }
  report.tp = static_cast<int>(m.pairs.size());
  report.fn = static_cast<int>(truth.size()) - report.tp;
  report.fp = static_cast<int>(preds.size()) - report.tp;
  report.per_class_errors = per_class_gps_error(report);
  return report;
}

MatchReport merge_reports(const std::vector<MatchReport>& reports) {
  MatchReport out;
  for (const auto& r : reports) {
    out.tp += r.tp;
    out.fn += r.fn;
    out.fp += r.fp;
    out.gps_errors.insert(out.gps_errors.end(), r.gps_errors.begin(), r.gps_errors.end());
    out.matches.insert(out.matches.end(), r.matches.begin(), r.matches.end());
  }
  out.per_class_errors = per_class_gps_error(out);
  return out;
}

ErrorStats gps_error_stats(const MatchReport& r) {
  ErrorStats s;
  const auto& e = r.gps_errors;
  for (double v : e) {
    const int bin = std::clamp(static_cast<int>(std::floor(v)), 0, kHistogramBins - 1);
    ++s.histogram[bin];
  }
  if (e.empty()) return s;
  const double n = static_cast<double>(e.size());
  const double mean = std::accumulate(e.begin(), e.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : e) ss += (v - mean) * (v - mean);
  s.mean_m = mean;
  s.std_m = std::sqrt(ss / n);
  return s;
}

std::map<ClassId, double> per_class_gps_error(const MatchReport& r) {
  std::map<ClassId, std::pair<double, int>> acc;
  for (const auto& m : r.matches) {
    auto& [sum, count] = acc[m.truth_class];
    sum += m.error_m;
    ++count;
  }
  std::map<ClassId, double> out;
  for (const auto& [cls, sc] : acc) out[cls] = sc.first / sc.second;
  return out;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::optional<double> average_precision(const std::vector<Detection>& dets,
                                        const std::vector<Annotation>& anns, ClassId class_id,
                                        double iou_thresh) {
  std::vector<const Annotation*> gt;
  for (const auto& a : anns) {
    if (a.class_id == class_id) gt.push_back(&a);
  }
  if (gt.empty()) return std::nullopt;

  std::vector<const Detection*> cand;
  for (const auto& d : dets) {
    if (d.class_id == class_id) cand.push_back(&d);
  }
  std::stable_sort(cand.begin(), cand.end(),
                   [](const Detection* x, const Detection* y) { return x->confidence > y->confidence; });

  std::vector<char> taken(gt.size(), 0);
  std::vector<double> precision, recall;
  int tp = 0;
  int fp = 0;
  for (const Detection* d : cand) {
    double best = -1.0;
    std::size_t best_j = gt.size();
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (taken[j] || gt[j]->frame_index != d->frame_index) continue;
      const double o = iou(d->bbox, gt[j]->bbox);
      if (o > best) {
        best = o;
        best_j = j;
      }
    }
    if (best_j < gt.size() && best >= iou_thresh) {
      taken[best_j] = 1;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gt.size()));
  }

  // Precision envelope, then sum over recall steps.
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

double mean_average_precision(const std::vector<Detection>& dets,
                              const std::vector<Annotation>& anns, double iou_thresh) {
  std::set<ClassId> classes;
  for (const auto& a : anns) classes.insert(a.class_id);
  if (classes.empty()) {
    throw std::invalid_argument("mean average precision needs at least one annotated class");
  }
  double sum = 0.0;
  for (ClassId c : classes) sum += *average_precision(dets, anns, c, iou_thresh);
  return sum / static_cast<double>(classes.size());
}

}  // namespace signmap
