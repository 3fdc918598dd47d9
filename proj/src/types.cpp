#include "signmap/types.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <map>
#include <stdexcept>

namespace signmap {

void validate(const BoundingBox& b, const ImageSize& image) {
  const bool finite = std::isfinite(b.x_min) && std::isfinite(b.y_min) &&
                      std::isfinite(b.x_max) && std::isfinite(b.y_max);
  if (!finite || !(b.x_min < b.x_max) || !(b.y_min < b.y_max)) {
    throw std::invalid_argument("bounding box must satisfy min < max on both axes");
  }
  if (b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > image.width || b.y_max > image.height) {
    throw std::invalid_argument("bounding box outside the image");
  }
}

BoundingBox clip_box(const BoundingBox& b, const ImageSize& image) {
  const double w = image.width;
  const double h = image.height;
  auto fix_axis = [](double lo, double hi, double limit) {
    if (lo > hi) std::swap(lo, hi);
    lo = std::clamp(lo, 0.0, limit);
    hi = std::clamp(hi, 0.0, limit);
    if (hi - lo < 1.0) {
      const double c = std::clamp(0.5 * (lo + hi), 0.5, limit - 0.5);
      lo = c - 0.5;
      hi = c + 0.5;
    }
    return std::pair{lo, hi};
  };
  const auto [x0, x1] = fix_axis(b.x_min, b.x_max, w);
  const auto [y0, y1] = fix_axis(b.y_min, b.y_max, h);
  return {x0, y0, x1, y1};
}

const char* to_string(CondenseMethod m) {
  switch (m) {
    case CondenseMethod::foi: return "foi";
    case CondenseMethod::weighted_average: return "wavg";
    case CondenseMethod::triangulate: return "tri";
    case CondenseMethod::triangulate_fallback: return "tri-wavg";
    case CondenseMethod::mrf: return "mrf";
  }
  return "unknown";
}

std::optional<CondenseMethod> parse_condense_method(const std::string& s) {
  if (s == "foi") return CondenseMethod::foi;
  if (s == "wavg") return CondenseMethod::weighted_average;
  if (s == "tri") return CondenseMethod::triangulate;
  if (s == "tri-wavg") return CondenseMethod::triangulate_fallback;
  if (s == "mrf") return CondenseMethod::mrf;
  return std::nullopt;
}

std::vector<GroundTruthSign> ground_truth_signs(const RoadSegment& seg) {
  std::map<SignId, GroundTruthSign> unique;
  for (const auto& frame : seg.frames) {
    for (const auto& a : frame.annotations) {
      unique.try_emplace(a.sign_id, GroundTruthSign{a.sign_id, a.gps, a.class_id});
    }
  }
  std::vector<GroundTruthSign> out;
  out.reserve(unique.size());
  for (auto& [id, sign] : unique) out.push_back(sign);
  return out;
}

Detection as_detection(const Annotation& a) {
  return Detection{a.frame_index, a.bbox, a.class_id, 1.0, a.gps, a.camera};
}

}  // namespace signmap
