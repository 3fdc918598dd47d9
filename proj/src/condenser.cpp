#include "signmap/condenser.hpp"

#include <cmath>
#include <algorithm>
#include <map>
#include <string>
#include <stdexcept>

#include "signmap/geodesy.hpp"

namespace signmap {

namespace {

void require_nonempty(const Tracklet& t) {
  if (t.detections.empty()) throw std::invalid_argument("cannot condense an empty tracklet");
}

ClassId modal_class(const Tracklet& t) {
  std::map<ClassId, std::pair<int, double>> votes;  // count, summed confidence
  for (const auto& d : t.detections) {
    auto& [count, conf] = votes[d.class_id];
    ++count;
    conf += d.confidence;
  }
  // std::map iterates by ascending class id, so strict comparisons keep the
  // lower id on a full tie.
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it) {
    const auto& [count, conf] = it->second;
    const auto& [best_count, best_conf] = best->second;
    if (count > best_count || (count == best_count && conf > best_conf)) best = it;
  }
  return best->first;
}

}  // namespace

SignPrediction condense_foi(const Tracklet& t) {
  require_nonempty(t);
  const Detection& last = t.detections.back();
  return {last.predicted_gps, last.class_id, static_cast<int>(t.detections.size()),
          CondenseMethod::foi};
}

SignPrediction condense_weighted_average(const Tracklet& t) {
  require_nonempty(t);
  double total = 0.0;
  for (const auto& d : t.detections) total += std::max(0.0, d.confidence);
  const bool uniform = total <= 0.0;
  const double n = static_cast<double>(t.detections.size());

  double lat = 0.0;
  double lon = 0.0;
  for (const auto& d : t.detections) {
    const double w = uniform ? 1.0 / n : std::max(0.0, d.confidence) / total;
    lat += w * d.predicted_gps.lat_deg;
    lon += w * d.predicted_gps.lon_deg;
  }
  return {{lat, lon}, modal_class(t), static_cast<int>(t.detections.size()),
          CondenseMethod::weighted_average};
}

SignPrediction condense_triangulate(const Tracklet& t) {
  require_nonempty(t);
  auto fallback = [&] {
    SignPrediction p = condense_weighted_average(t);
    p.method = CondenseMethod::triangulate_fallback;
    return p;
  };
  if (t.detections.size() < 2) return fallback();

  const GeoPoint origin = t.detections.front().camera.position;
  struct Ray {
    NorthEast at;
    double dn;
    double de;
  };
  std::vector<Ray> rays;
  // Directions are taken in the same plane as the solve, so rays that meet
  // exactly on the plane give back their meeting point exactly.
  for (const auto& d : t.detections) {
    const NorthEast at = displacement(origin, d.camera.position);
    const NorthEast to = displacement(origin, d.predicted_gps);
    const double dn = to.north_m - at.north_m;
    const double de = to.east_m - at.east_m;
    const double len = std::hypot(dn, de);
    if (len < 0.01) continue;
    rays.push_back({at, dn / len, de / len});
  }
  if (rays.size() < 2) return fallback();

  double spread = 0.0;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    for (std::size_t j = i + 1; j < rays.size(); ++j) {
      spread = std::max(spread, std::hypot(rays[i].at.north_m - rays[j].at.north_m,
                                           rays[i].at.east_m - rays[j].at.east_m));
    }
  }
  if (spread < kMinBaselineM) return fallback();

  // Sum of (I - d d^T) and (I - d d^T) p over all lines.
  double a11 = 0.0, a12 = 0.0, a22 = 0.0, r1 = 0.0, r2 = 0.0;
  for (const auto& r : rays) {
    const double p11 = 1.0 - r.dn * r.dn;
    const double p12 = -r.dn * r.de;
    const double p22 = 1.0 - r.de * r.de;
    a11 += p11;
    a12 += p12;
    a22 += p22;
    r1 += p11 * r.at.north_m + p12 * r.at.east_m;
    r2 += p12 * r.at.north_m + p22 * r.at.east_m;
  }
  const double tr = a11 + a22;
  const double det = a11 * a22 - a12 * a12;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double lmax = 0.5 * tr + disc;
  const double lmin = 0.5 * tr - disc;
  if (!(lmin > 0.0) || lmax / lmin > kMaxConditionNumber) return fallback();

  const NorthEast x{(a22 * r1 - a12 * r2) / det, (a11 * r2 - a12 * r1) / det};
  SignPrediction p;
  p.gps = displace(origin, x);
  p.class_id = modal_class(t);
  p.support = static_cast<int>(t.detections.size());
  p.method = CondenseMethod::triangulate;
  return p;
}

SignPrediction condense(const Tracklet& t, CondenseMethod method) {
  switch (method) {
    case CondenseMethod::foi: return condense_foi(t);
    case CondenseMethod::weighted_average: return condense_weighted_average(t);
    case CondenseMethod::triangulate:
    case CondenseMethod::triangulate_fallback: return condense_triangulate(t);
    case CondenseMethod::mrf: break;
  }
  throw std::invalid_argument("condenser method not implemented: " +
                              std::string(to_string(method)));
}

std::vector<SignPrediction> condense_all(const std::vector<Tracklet>& tracklets,
                                         CondenseMethod method, Exec exec) {
  if (method == CondenseMethod::mrf) {
    throw std::invalid_argument("condenser method not implemented: mrf");
  }
  std::vector<SignPrediction> out(tracklets.size());
  const long n = static_cast<long>(tracklets.size());
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long i = 0; i < n; ++i) out[i] = condense(tracklets[i], method);
  return out;
}

}  // namespace signmap
