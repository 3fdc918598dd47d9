#include "signmap/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "signmap/evaluation.hpp"
#include "signmap/geodesy.hpp"

namespace signmap {

namespace {

constexpr double kClassScale = 0.02;

}  // namespace

// --- snapshot ---------------------------------------------------------------

int SnapshotGrid::occupied_count() const {
  return static_cast<int>(
      std::count_if(cells_.begin(), cells_.end(), [](const SnapshotCell& c) { return c.occupied; }));
}

std::array<double, kSnapshotSummary> SnapshotGrid::summary() const {
  std::array<double, 4> mean{};
  std::array<double, 4> max{};
  bool first = true;
  for (const auto& c : cells_) {
    const std::array<double, 4> f{c.class_value * kClassScale,
                                  c.north_m * feature_layout::kPositionScale,
                                  c.east_m * feature_layout::kPositionScale, c.confidence};
    for (int k = 0; k < 4; ++k) {
      mean[k] += f[k];
      max[k] = first ? f[k] : std::max(max[k], f[k]);
    }
    first = false;
  }
  std::array<double, kSnapshotSummary> out{};
  for (int k = 0; k < 4; ++k) {
    out[k] = mean[k] / static_cast<double>(cells_.size());
    out[4 + k] = max[k];
  }
  return out;
}

std::pair<int, int> snapshot_cell_of(const BoundingBox& b, const ImageSize& image) {
  const int ix = static_cast<int>(std::floor(kGridSize * b.center_x() / image.width));
  const int iy = static_cast<int>(std::floor(kGridSize * b.center_y() / image.height));
  return {std::clamp(ix, 0, kGridSize - 1), std::clamp(iy, 0, kGridSize - 1)};
}

SnapshotGrid build_detection_snapshot(const std::vector<Detection>& frame_detections,
                                      const ImageSize& image) {
  if (image.width <= 0 || image.height <= 0) {
    throw std::invalid_argument("image size must be positive");
  }
  SnapshotGrid grid;
  for (const auto& d : frame_detections) {
    const auto [ix, iy] = snapshot_cell_of(d.bbox, image);
    SnapshotCell& cell = grid.cell(ix, iy);
    if (cell.occupied && cell.confidence >= d.confidence) continue;
    const NorthEast ne = displacement(d.camera.position, d.predicted_gps);
    cell = {true, static_cast<double>(d.class_id), ne.north_m, ne.east_m, d.confidence};
  }
  return grid;
}

// --- embedding --------------------------------------------------------------

ClassEmbedding::ClassEmbedding(int num_classes, std::vector<double> table)
    : num_classes_(num_classes), table_(std::move(table)) {
  if (num_classes < 0 ||
      table_.size() != static_cast<std::size_t>(num_classes) * kEmbeddingDim) {
    throw std::invalid_argument("embedding table size does not match class count");
  }
}

ClassEmbedding ClassEmbedding::seeded(int num_classes, std::uint64_t seed) {
  std::vector<double> table(static_cast<std::size_t>(num_classes) * kEmbeddingDim);
  for (int c = 0; c < num_classes; ++c) {
    Rng rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(c + 1)));
    std::normal_distribution<double> normal(0.0, 1.0);
    double norm = 0.0;
    double* row = table.data() + static_cast<std::size_t>(c) * kEmbeddingDim;
    for (int k = 0; k < kEmbeddingDim; ++k) {
      row[k] = normal(rng);
      norm += row[k] * row[k];
    }
    norm = std::sqrt(norm);
    for (int k = 0; k < kEmbeddingDim; ++k) row[k] /= norm;
  }
  return ClassEmbedding(num_classes, std::move(table));
}

std::span<const double> ClassEmbedding::row(ClassId c) const {
  if (!contains(c)) throw std::out_of_range("unknown class id " + std::to_string(c));
  return {table_.data() + static_cast<std::size_t>(c) * kEmbeddingDim, kEmbeddingDim};
}

std::span<double> ClassEmbedding::row(ClassId c) {
  if (!contains(c)) throw std::out_of_range("unknown class id " + std::to_string(c));
  return {table_.data() + static_cast<std::size_t>(c) * kEmbeddingDim, kEmbeddingDim};
}

// --- pair features ----------------------------------------------------------

namespace {

void fill_detection_block(double* out, const Detection& d, const GeoPoint& origin,
                          const ImageSize& image, const ClassEmbedding& embedding) {
  using namespace feature_layout;
  const NorthEast cam = displacement(origin, d.camera.position);
  const NorthEast sign = displacement(origin, d.predicted_gps);
  const double theta = deg_to_rad(d.camera.heading_deg);
  out[0] = cam.north_m * kPositionScale;
  out[1] = cam.east_m * kPositionScale;
  out[2] = std::sin(theta);
  out[3] = std::cos(theta);
  out[4] = sign.north_m * kPositionScale;
  out[5] = sign.east_m * kPositionScale;
  out[6] = d.bbox.x_min / image.width;
  out[7] = d.bbox.y_min / image.height;
  out[8] = d.bbox.x_max / image.width;
  out[9] = d.bbox.y_max / image.height;
  const auto row = embedding.row(d.class_id);
  std::copy(row.begin(), row.end(), out + kEmbeddingOffset);
}

}  // namespace

PairFeatures build_pair_features(const Detection& a, const Detection& b,
                                 const SnapshotGrid& grid_a, const SnapshotGrid& grid_b,
                                 const ImageSize& image, const ClassEmbedding& embedding) {
  using namespace feature_layout;
  if (!embedding.contains(a.class_id) || !embedding.contains(b.class_id)) {
    throw std::out_of_range("class id missing from embedding");
  }
  PairFeatures f;
  f.values.assign(kTotal, 0.0);
  f.class_a = a.class_id;
  f.class_b = b.class_id;

  const NorthEast between = displacement(a.camera.position, b.camera.position);
  const GeoPoint origin =
      displace(a.camera.position, {0.5 * between.north_m, 0.5 * between.east_m});

  fill_detection_block(f.values.data() + kBlockA, a, origin, image, embedding);
  fill_detection_block(f.values.data() + kBlockB, b, origin, image, embedding);

  const NorthEast pa = displacement(origin, a.predicted_gps);
  const NorthEast pb = displacement(origin, b.predicted_gps);
  const double dn = std::abs(pb.north_m - pa.north_m);
  const double de = std::abs(pb.east_m - pa.east_m);
  f.values[kDifference + 0] = dn * kDifferenceScale;
  f.values[kDifference + 1] = de * kDifferenceScale;
  f.values[kDifference + 2] = std::hypot(dn, de) * kDifferenceScale;

  const auto sa = grid_a.summary();
  const auto sb = grid_b.summary();
  std::copy(sa.begin(), sa.end(), f.values.begin() + kSnapshotA);
  std::copy(sb.begin(), sb.end(), f.values.begin() + kSnapshotB);
  return f;
}

// --- baseline scorer --------------------------------------------------------

double baseline_score(const Detection& a, const Detection& b) {
  const double d = haversine_m(a.predicted_gps, b.predicted_gps);
  const double penalty = a.class_id == b.class_id ? 0.0 : kBaselineClassPenalty;
  return 1.0 - std::exp(-(d / kBaselineDistanceScaleM + penalty));
}

// --- noise ------------------------------------------------------------------

namespace {

std::vector<NoiseSample> harvest_frame(const AnnotatedFrame& af, const DetectionFrame& df) {
  std::vector<NoiseSample> out;
  for (const auto& a : af.annotations) {
    const Detection* match = nullptr;
    int count = 0;
    for (const auto& d : df.detections) {
      if (iou(a.bbox, d.bbox) > kHarvestIou) {
        match = &d;
        ++count;
      }
    }
    if (count != 1) continue;
    NoiseSample s;
    s.dlat_deg = match->predicted_gps.lat_deg - a.gps.lat_deg;
    s.dlon_deg = match->predicted_gps.lon_deg - a.gps.lon_deg;
    s.class_match = match->class_id == a.class_id;
    s.dbbox = {match->bbox.x_min - a.bbox.x_min, match->bbox.y_min - a.bbox.y_min,
               match->bbox.x_max - a.bbox.x_max, match->bbox.y_max - a.bbox.y_max};
    out.push_back(s);
  }
  return out;
}

NoiseModel harvest_pairs(const std::vector<std::pair<const AnnotatedFrame*, const DetectionFrame*>>& pairs,
                         Exec exec) {
  std::vector<std::vector<NoiseSample>> per_frame(pairs.size());
  const long n = static_cast<long>(pairs.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (long i = 0; i < n; ++i) per_frame[i] = harvest_frame(*pairs[i].first, *pairs[i].second);
  } else {
    for (long i = 0; i < n; ++i) per_frame[i] = harvest_frame(*pairs[i].first, *pairs[i].second);
  }
  NoiseModel model;
  for (auto& v : per_frame) model.samples.insert(model.samples.end(), v.begin(), v.end());
  return model;
}

void collect_frame_pairs(const RoadSegment& annotations, const DetectionSegment& detections,
                         std::vector<std::pair<const AnnotatedFrame*, const DetectionFrame*>>& out) {
  std::map<int, const DetectionFrame*> by_index;
  for (const auto& f : detections.frames) by_index[f.index] = &f;
  for (const auto& f : annotations.frames) {
    if (auto it = by_index.find(f.index); it != by_index.end()) out.emplace_back(&f, it->second);
  }
}

}  // namespace

NoiseModel harvest_noise_model(const RoadSegment& annotations, const DetectionSegment& detections,
                               Exec exec) {
  std::vector<std::pair<const AnnotatedFrame*, const DetectionFrame*>> pairs;
  collect_frame_pairs(annotations, detections, pairs);
  return harvest_pairs(pairs, exec);
}

NoiseModel harvest_noise_model(const std::vector<RoadSegment>& annotations,
                               const std::vector<DetectionSegment>& detections, Exec exec) {
  std::map<std::string, const DetectionSegment*> by_id;
  for (const auto& d : detections) by_id[d.id] = &d;
  std::vector<std::pair<const AnnotatedFrame*, const DetectionFrame*>> pairs;
  for (const auto& a : annotations) {
    if (auto it = by_id.find(a.id); it != by_id.end()) collect_frame_pairs(a, *it->second, pairs);
  }
  return harvest_pairs(pairs, exec);
}

NoiseSample sample_noise(const NoiseModel& model, Rng& rng) {
  if (model.samples.empty()) throw std::logic_error("cannot sample from an empty noise model");
  std::uniform_int_distribution<std::size_t> pick(0, model.samples.size() - 1);
  return model.samples[pick(rng)];
}

EmpiricalNoise::EmpiricalNoise(NoiseModel model) : model_(std::move(model)) {
  if (model_.samples.empty()) throw std::invalid_argument("empirical noise needs samples");
}

NoiseSample EmpiricalNoise::sample(Rng& rng, const GeoPoint&) const {
  return sample_noise(model_, rng);
}

ParametricNoise::ParametricNoise(double gps_sigma_m, double class_confusion, double bbox_jitter_px)
    : gps_sigma_m_(gps_sigma_m), class_confusion_(class_confusion), bbox_jitter_px_(bbox_jitter_px) {
  if (!(gps_sigma_m >= 0.0) || !(bbox_jitter_px >= 0.0) || !(class_confusion >= 0.0) ||
      !(class_confusion <= 1.0)) {
    throw std::invalid_argument("parametric noise needs sigma >= 0 and rates in [0, 1]");
  }
}

NoiseSample ParametricNoise::sample(Rng& rng, const GeoPoint& at) const {
  std::normal_distribution<double> gps(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NoiseSample s;
  const NorthEast ne{gps_sigma_m_ * gps(rng), gps_sigma_m_ * gps(rng)};
  const GeoPoint moved = displace(at, ne);
  s.dlat_deg = moved.lat_deg - at.lat_deg;
  s.dlon_deg = moved.lon_deg - at.lon_deg;
  s.class_match = !(u(rng) < class_confusion_);
  for (double& v : s.dbbox) v = bbox_jitter_px_ * gps(rng);
  return s;
}

Detection perturb_annotation(const Annotation& a, const NoiseSample& noise, int num_classes,
                             const ImageSize& image, Rng& rng) {
  Detection d = as_detection(a);
  d.predicted_gps.lat_deg += noise.dlat_deg;
  d.predicted_gps.lon_deg += noise.dlon_deg;
  if (!noise.class_match && num_classes > 1) {
    std::uniform_int_distribution<int> other(0, num_classes - 2);
    const int c = other(rng);
    d.class_id = c >= a.class_id ? c + 1 : c;
  }
  d.bbox = clip_box({a.bbox.x_min + noise.dbbox[0], a.bbox.y_min + noise.dbbox[1],
                     a.bbox.x_max + noise.dbbox[2], a.bbox.y_max + noise.dbbox[3]},
                    image);
  return d;
}

// --- training pairs ---------------------------------------------------------

std::vector<LabeledPair> consecutive_frame_pairs(const RoadSegment& seg, const NoiseSource& noise,
                                                int num_classes, Rng& rng) {
  struct PerturbedFrame {
    std::vector<Detection> detections;
    std::vector<SignId> sign_ids;
    std::shared_ptr<const SnapshotGrid> grid;
  };
  std::vector<PerturbedFrame> frames;
  frames.reserve(seg.frames.size());
  for (const auto& f : seg.frames) {
    PerturbedFrame pf;
    for (const auto& a : f.annotations) {
      pf.detections.push_back(
          perturb_annotation(a, noise.sample(rng, a.gps), num_classes, seg.image, rng));
      pf.sign_ids.push_back(a.sign_id);
    }
    pf.grid = std::make_shared<const SnapshotGrid>(build_detection_snapshot(pf.detections, seg.image));
    frames.push_back(std::move(pf));
  }

  std::vector<LabeledPair> out;
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    const auto& f0 = frames[t];
    const auto& f1 = frames[t + 1];
    for (std::size_t i = 0; i < f0.detections.size(); ++i) {
      for (std::size_t j = 0; j < f1.detections.size(); ++j) {
        const int label = f0.sign_ids[i] == f1.sign_ids[j] ? 0 : 1;
        out.push_back({f0.detections[i], f1.detections[j], f0.grid, f1.grid, seg.image, label});
      }
    }
  }
  return out;
}

TrainingPairs generate_training_pairs(const std::vector<RoadSegment>& segments,
                                      const NoiseSource& noise, int num_classes, Rng& rng) {
  TrainingPairs result;
  std::vector<LabeledPair> same;
  std::vector<LabeledPair> different;

  for (const auto& seg : segments) {
    std::vector<LabeledPair> seg_same;
    std::vector<LabeledPair> seg_different;
    for (auto& p : consecutive_frame_pairs(seg, noise, num_classes, rng)) {
      (p.label == 0 ? seg_same : seg_different).push_back(std::move(p));
    }
    if (seg_same.empty()) {
      result.skipped_segments.push_back(seg.id);
      continue;
    }
    std::move(seg_same.begin(), seg_same.end(), std::back_inserter(same));
    std::move(seg_different.begin(), seg_different.end(), std::back_inserter(different));
  }

  auto& majority = same.size() > different.size() ? same : different;
  const std::size_t keep = std::min(same.size(), different.size());
  std::vector<std::size_t> idx(majority.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  std::vector<LabeledPair> kept;
  kept.reserve(keep);
  for (std::size_t i : idx) kept.push_back(std::move(majority[i]));
  majority = std::move(kept);

  // Interleave so neither label clusters at the front.
  result.pairs.reserve(same.size() + different.size());
  for (std::size_t i = 0; i < keep; ++i) {
    result.pairs.push_back(std::move(same[i]));
    result.pairs.push_back(std::move(different[i]));
  }
  return result;
}

PairSplit split_pairs(std::vector<LabeledPair> pairs, Rng& rng) {
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const std::size_t n = pairs.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  PairSplit split;
  auto it = std::make_move_iterator(pairs.begin());
  split.train.assign(it, it + n_train);
  split.validation.assign(it + n_train, it + n_train + n_val);
  split.test.assign(it + n_train + n_val, std::make_move_iterator(pairs.end()));
  return split;
}

}  // namespace signmap
