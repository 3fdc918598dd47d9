#include "signmap/dataio.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace signmap {

using nlohmann::json;

ParseError::ParseError(std::string source, int line, std::string field, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) +
                         (field.empty() ? std::string() : " field '" + field + "'") + ": " + what),
      source_(std::move(source)),
      line_(line),
      field_(std::move(field)) {}

double canonical(double v) {
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

namespace {

// --- stream helpers ---------------------------------------------------------

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

void finish(std::ostream& out) {
  out.flush();
  if (!out) throw std::runtime_error("write failed");
}

void put_line(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

// Reads one JSON record per non-blank line.
class RecordReader {
 public:
  RecordReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(json& j) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw error("", std::string("malformed record: ") + e.what());
      }
      if (!j.is_object()) throw error("", "record is not a JSON object");
      return true;
    }
    return false;
  }

  ParseError error(const std::string& field, const std::string& what) const {
    return ParseError(source_, line_, field, what);
  }

  int line() const { return line_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  int line_ = 0;
};

const json& field(const json& obj, const char* key, const RecordReader& r) {
  auto it = obj.find(key);
  if (it == obj.end()) throw r.error(key, "missing");
  return *it;
}

double get_number(const json& obj, const char* key, const RecordReader& r) {
  const json& v = field(obj, key, r);
  if (!v.is_number()) throw r.error(key, "not a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw r.error(key, "not finite");
  return d;
}

std::int64_t get_int(const json& obj, const char* key, const RecordReader& r) {
  const json& v = field(obj, key, r);
  if (!v.is_number_integer()) throw r.error(key, "not an integer");
  return v.get<std::int64_t>();
}

std::string get_string(const json& obj, const char* key, const RecordReader& r) {
  const json& v = field(obj, key, r);
  if (!v.is_string()) throw r.error(key, "not a string");
  return v.get<std::string>();
}

bool get_bool(const json& obj, const char* key, const RecordReader& r) {
  const json& v = field(obj, key, r);
  if (!v.is_boolean()) throw r.error(key, "not a boolean");
  return v.get<bool>();
}

template <typename F>
auto checked(const RecordReader& r, const char* key, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw r.error(key, e.what());
  }
}

// --- value codecs -----------------------------------------------------------

json encode_bbox(const BoundingBox& b) {
  return json::array({canonical(b.x_min), canonical(b.y_min), canonical(b.x_max), canonical(b.y_max)});
}

BoundingBox decode_bbox(const json& obj, const RecordReader& r) {
  const json& v = field(obj, "bbox", r);
  if (!v.is_array() || v.size() != 4) throw r.error("bbox", "expected 4 numbers");
  for (const auto& e : v) {
    if (!e.is_number()) throw r.error("bbox", "expected 4 numbers");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
}

json encode_camera(const CameraPose& c) {
  return {{"heading", canonical(c.heading_deg)},
          {"lat", canonical(c.position.lat_deg)},
          {"lon", canonical(c.position.lon_deg)}};
}

CameraPose decode_camera(const json& obj, const RecordReader& r) {
  const json& c = field(obj, "camera", r);
  if (!c.is_object()) throw r.error("camera", "not an object");
  CameraPose pose{{get_number(c, "lat", r), get_number(c, "lon", r)}, get_number(c, "heading", r)};
  checked(r, "camera", [&] {
    validate(pose);
    return 0;
  });
  return pose;
}

GeoPoint decode_gps(const json& obj, const RecordReader& r) {
  GeoPoint p{get_number(obj, "lat", r), get_number(obj, "lon", r)};
  checked(r, "lat", [&] {
    validate(p);
    return 0;
  });
  return p;
}

json encode_detection(const Detection& d, bool with_frame_context) {
  json j = {{"bbox", encode_bbox(d.bbox)},
            {"class", d.class_id},
            {"confidence", canonical(d.confidence)},
            {"lat", canonical(d.predicted_gps.lat_deg)},
            {"lon", canonical(d.predicted_gps.lon_deg)}};
  if (with_frame_context) {
    j["frame"] = d.frame_index;
    j["camera"] = encode_camera(d.camera);
  }
  return j;
}

Detection decode_detection(const json& j, const RecordReader& r, const ImageSize& image,
                           int frame_index, const CameraPose* camera) {
  Detection d;
  d.frame_index = camera ? frame_index : static_cast<int>(get_int(j, "frame", r));
  d.camera = camera ? *camera : decode_camera(j, r);
  d.bbox = decode_bbox(j, r);
  checked(r, "bbox", [&] {
    validate(d.bbox, image);
    return 0;
  });
  d.class_id = static_cast<ClassId>(get_int(j, "class", r));
  if (d.class_id < 0) throw r.error("class", "negative class id");
  d.confidence = get_number(j, "confidence", r);
  if (d.confidence < 0.0 || d.confidence > 1.0) throw r.error("confidence", "outside [0, 1]");
  d.predicted_gps = decode_gps(j, r);
  return d;
}

json encode_annotation(const Annotation& a) {
  return {{"assembly", a.assembly},
          {"bbox", encode_bbox(a.bbox)},
          {"class", a.class_id},
          {"lat", canonical(a.gps.lat_deg)},
          {"lon", canonical(a.gps.lon_deg)},
          {"side", a.side == Side::left ? "left" : "right"},
          {"sign_id", a.sign_id}};
}

Annotation decode_annotation(const json& j, const RecordReader& r, const ImageSize& image,
                             int frame_index, const CameraPose& camera) {
  Annotation a;
  a.frame_index = frame_index;
  a.camera = camera;
  a.bbox = decode_bbox(j, r);
  checked(r, "bbox", [&] {
    validate(a.bbox, image);
    return 0;
  });
  a.class_id = static_cast<ClassId>(get_int(j, "class", r));
  if (a.class_id < 0) throw r.error("class", "negative class id");
  a.gps = decode_gps(j, r);
  a.sign_id = get_int(j, "sign_id", r);
  const std::string side = get_string(j, "side", r);
  if (side == "left") {
    a.side = Side::left;
  } else if (side == "right") {
    a.side = Side::right;
  } else {
    throw r.error("side", "expected left or right");
  }
  a.assembly = get_bool(j, "assembly", r);
  return a;
}

// --- segment files ----------------------------------------------------------

constexpr const char* kSegmentFormat = "signmap-segment";

template <typename Segment>
json segment_header(const Segment& seg, const char* kind) {
  return {{"format", kSegmentFormat},
          {"frames", seg.frames.size()},
          {"image_height", seg.image.height},
          {"image_width", seg.image.width},
          {"kind", kind},
          {"record", "header"},
          {"segment_id", seg.id},
          {"version", kSegmentFormatVersion}};
}

struct SegmentHeader {
  std::string id;
  ImageSize image;
  std::string kind;
  std::size_t frames = 0;
};

SegmentHeader decode_header(const json& j, const RecordReader& r) {
  if (get_string(j, "format", r) != kSegmentFormat) throw r.error("format", "not a segment file");
  const auto version = get_int(j, "version", r);
  if (version != kSegmentFormatVersion) {
    throw r.error("version", "unknown format version " + std::to_string(version));
  }
  SegmentHeader h;
  h.id = get_string(j, "segment_id", r);
  h.image = {static_cast<int>(get_int(j, "image_width", r)),
             static_cast<int>(get_int(j, "image_height", r))};
  if (h.image.width <= 0 || h.image.height <= 0) throw r.error("image_width", "must be positive");
  h.kind = get_string(j, "kind", r);
  const auto frames = get_int(j, "frames", r);
  if (frames < 0) throw r.error("frames", "negative frame count");
  h.frames = static_cast<std::size_t>(frames);
  return h;
}

template <typename Segment, typename Frame, typename DecodeItems>
std::vector<Segment> read_segment_stream(std::istream& in, const std::string& source,
                                         const char* kind, const char* items_key,
                                         DecodeItems decode_items) {
  RecordReader reader(in, source);
  std::vector<Segment> out;
  std::size_t expected_frames = 0;
  json j;
  auto check_complete = [&] {
    if (!out.empty() && out.back().frames.size() != expected_frames) {
      throw reader.error("frames", "segment " + out.back().id + " truncated: expected " +
                                       std::to_string(expected_frames) + " frames, found " +
                                       std::to_string(out.back().frames.size()));
    }
  };
  while (reader.next(j)) {
    const std::string record = get_string(j, "record", reader);
    if (record == "header") {
      check_complete();
      const SegmentHeader h = decode_header(j, reader);
      if (h.kind != kind) {
        throw reader.error("kind", "expected " + std::string(kind) + " segment, found " + h.kind);
      }
      Segment seg;
      seg.id = h.id;
      seg.image = h.image;
      expected_frames = h.frames;
      out.push_back(std::move(seg));
    } else if (record == "frame") {
      if (out.empty()) throw reader.error("record", "frame before any header");
      Segment& seg = out.back();
      Frame frame;
      frame.index = static_cast<int>(get_int(j, "frame", reader));
      if (!seg.frames.empty() && frame.index <= seg.frames.back().index) {
        throw reader.error("frame", "frame indices must be strictly increasing");
      }
      frame.camera = decode_camera(j, reader);
      const json& items = field(j, items_key, reader);
      if (!items.is_array()) throw reader.error(items_key, "not an array");
      decode_items(items, reader, seg, frame);
      seg.frames.push_back(std::move(frame));
    } else {
      throw reader.error("record", "unknown record type " + record);
    }
  }
  check_complete();
  return out;
}

}  // namespace

void write_segments(const std::vector<RoadSegment>& segs, std::ostream& out) {
  for (const auto& seg : segs) {
    put_line(out, segment_header(seg, "annotations"));
    for (const auto& f : seg.frames) {
      json items = json::array();
      for (const auto& a : f.annotations) items.push_back(encode_annotation(a));
      put_line(out, {{"annotations", items},
                     {"camera", encode_camera(f.camera)},
                     {"frame", f.index},
                     {"record", "frame"}});
    }
  }
  finish(out);
}

void write_segments(const std::vector<DetectionSegment>& segs, std::ostream& out) {
  for (const auto& seg : segs) {
    put_line(out, segment_header(seg, "detections"));
    for (const auto& f : seg.frames) {
      json items = json::array();
      for (const auto& d : f.detections) items.push_back(encode_detection(d, false));
      put_line(out, {{"camera", encode_camera(f.camera)},
                     {"detections", items},
                     {"frame", f.index},
                     {"record", "frame"}});
    }
  }
  finish(out);
}

std::vector<RoadSegment> read_segments(std::istream& in, const std::string& source) {
  return read_segment_stream<RoadSegment, AnnotatedFrame>(
      in, source, "annotations", "annotations",
      [](const json& items, const RecordReader& r, RoadSegment& seg, AnnotatedFrame& frame) {
        // Same sign id must mean the same place and class across the segment.
        static thread_local std::map<SignId, std::pair<GeoPoint, ClassId>> seen;
        if (seg.frames.empty()) seen.clear();
        for (const auto& item : items) {
          Annotation a = decode_annotation(item, r, seg.image, frame.index, frame.camera);
          auto [it, fresh] = seen.try_emplace(a.sign_id, a.gps, a.class_id);
          if (!fresh && (it->second.first != a.gps || it->second.second != a.class_id)) {
            throw r.error("sign_id", "sign " + std::to_string(a.sign_id) +
                                         " changes position or class between frames");
          }
          frame.annotations.push_back(a);
        }
      });
}

std::vector<DetectionSegment> read_detection_segments(std::istream& in, const std::string& source) {
  return read_segment_stream<DetectionSegment, DetectionFrame>(
      in, source, "detections", "detections",
      [](const json& items, const RecordReader& r, DetectionSegment& seg, DetectionFrame& frame) {
        for (const auto& item : items) {
          frame.detections.push_back(decode_detection(item, r, seg.image, frame.index, &frame.camera));
        }
      });
}

void write_segment(const RoadSegment& seg, const std::string& path) {
  write_segments(std::vector<RoadSegment>{seg}, path);
}

RoadSegment read_segment(const std::string& path) {
  auto segs = read_segments(path);
  if (segs.size() != 1) {
    throw ParseError(path, 0, "", "expected exactly one segment, found " + std::to_string(segs.size()));
  }
  return std::move(segs.front());
}

void write_segments(const std::vector<RoadSegment>& segs, const std::string& path) {
  auto out = open_out(path);
  write_segments(segs, out);
}

void write_segments(const std::vector<DetectionSegment>& segs, const std::string& path) {
  auto out = open_out(path);
  write_segments(segs, out);
}

std::vector<RoadSegment> read_segments(const std::string& path) {
  auto in = open_in(path);
  return read_segments(in, path);
}

std::vector<DetectionSegment> read_detection_segments(const std::string& path) {
  auto in = open_in(path);
  return read_detection_segments(in, path);
}

// --- tracklets --------------------------------------------------------------

namespace {
constexpr const char* kTrackletFormat = "signmap-tracklets";
constexpr const char* kNoiseFormat = "signmap-noise";
constexpr const char* kPairsFormat = "signmap-pairs";
constexpr const char* kEvaluationFormat = "signmap-evaluation";
constexpr int kAuxFormatVersion = 1;

void expect_header(const json& j, const RecordReader& r, const char* format) {
  if (get_string(j, "format", r) != format) {
    throw r.error("format", std::string("expected a ") + format + " file");
  }
  const auto version = get_int(j, "version", r);
  if (version != kAuxFormatVersion) {
    throw r.error("version", "unknown format version " + std::to_string(version));
  }
}

// Tracklet and pair files carry no image size; boxes are checked against a
// generous bound instead.
constexpr ImageSize kUnboundedImage{1 << 20, 1 << 20};
}  // namespace

void write_tracklets(const std::vector<SegmentTracklets>& all, std::ostream& out) {
  put_line(out, {{"format", kTrackletFormat}, {"record", "header"}, {"version", kAuxFormatVersion}});
  for (const auto& st : all) {
    for (const auto& t : st.tracklets) {
      json dets = json::array();
      for (const auto& d : t.detections) dets.push_back(encode_detection(d, true));
      put_line(out, {{"detections", dets},
                     {"id", t.id},
                     {"record", "tracklet"},
                     {"segment_id", st.segment_id}});
    }
  }
  finish(out);
}

std::vector<SegmentTracklets> read_tracklets(std::istream& in, const std::string& source) {
  RecordReader reader(in, source);
  json j;
  if (!reader.next(j)) throw reader.error("", "empty tracklet file");
  expect_header(j, reader, kTrackletFormat);
  std::vector<SegmentTracklets> out;
  while (reader.next(j)) {
    if (get_string(j, "record", reader) != "tracklet") throw reader.error("record", "expected tracklet");
    const std::string seg = get_string(j, "segment_id", reader);
    if (out.empty() || out.back().segment_id != seg) out.push_back({seg, {}});
    Tracklet t;
    t.id = get_int(j, "id", reader);
    const json& dets = field(j, "detections", reader);
    if (!dets.is_array() || dets.empty()) throw reader.error("detections", "expected a nonempty array");
    for (const auto& d : dets) {
      t.detections.push_back(decode_detection(d, reader, kUnboundedImage, 0, nullptr));
      if (t.detections.size() > 1 &&
          t.detections.back().frame_index <= t.detections[t.detections.size() - 2].frame_index) {
        throw reader.error("frame", "tracklet frame indices must be strictly increasing");
      }
    }
    out.back().tracklets.push_back(std::move(t));
  }
  return out;
}

void write_tracklets(const std::vector<SegmentTracklets>& all, const std::string& path) {
  auto out = open_out(path);
  write_tracklets(all, out);
}

std::vector<SegmentTracklets> read_tracklets(const std::string& path) {
  auto in = open_in(path);
  return read_tracklets(in, path);
}

// --- predictions ------------------------------------------------------------

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

constexpr const char* kPredictionHeader = "segment_id,lat_deg,lon_deg,class_id,support,method";

}  // namespace

void write_predictions(const std::vector<SegmentPredictions>& all, std::ostream& out) {
  out << kPredictionHeader << '\n';
  for (const auto& sp : all) {
    for (const auto& p : sp.predictions) {
      out << sp.segment_id << ',' << format_number(p.gps.lat_deg) << ','
          << format_number(p.gps.lon_deg) << ',' << p.class_id << ',' << p.support << ','
          << to_string(p.method) << '\n';
    }
  }
  finish(out);
}

std::vector<SegmentPredictions> read_predictions(std::istream& in, const std::string& source) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) throw ParseError(source, 1, "", "empty predictions file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPredictionHeader) throw ParseError(source, 1, "", "unexpected CSV header");
  std::vector<SegmentPredictions> out;
  const char* names[] = {"segment_id", "lat_deg", "lon_deg", "class_id", "support", "method"};
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 6) throw ParseError(source, line_no, "", "expected 6 columns");
    auto number = [&](int col) {
      char* end = nullptr;
      const double v = std::strtod(cells[col].c_str(), &end);
      if (cells[col].empty() || *end != '\0' || !std::isfinite(v)) {
        throw ParseError(source, line_no, names[col], "not a number");
      }
      return v;
    };
    SignPrediction p;
    p.gps = {number(1), number(2)};
    try {
      validate(p.gps);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, "lat_deg", e.what());
    }
    p.class_id = static_cast<ClassId>(number(3));
    p.support = static_cast<int>(number(4));
    if (p.support < 1) throw ParseError(source, line_no, "support", "must be >= 1");
    const auto method = parse_condense_method(cells[5]);
    if (!method) throw ParseError(source, line_no, "method", "unknown method " + cells[5]);
    p.method = *method;
    if (out.empty() || out.back().segment_id != cells[0]) out.push_back({cells[0], {}});
    out.back().predictions.push_back(p);
  }
  return out;
}

void write_predictions(const std::vector<SegmentPredictions>& all, const std::string& path) {
  auto out = open_out(path);
  write_predictions(all, out);
}

std::vector<SegmentPredictions> read_predictions(const std::string& path) {
  auto in = open_in(path);
  return read_predictions(in, path);
}

// --- noise model ------------------------------------------------------------

void write_noise_model(const NoiseModel& model, std::ostream& out) {
  put_line(out, {{"format", kNoiseFormat},
                 {"record", "header"},
                 {"samples", model.samples.size()},
                 {"version", kAuxFormatVersion}});
  for (const auto& s : model.samples) {
    put_line(out, {{"class_match", s.class_match},
                   {"dbbox", json::array({canonical(s.dbbox[0]), canonical(s.dbbox[1]),
                                          canonical(s.dbbox[2]), canonical(s.dbbox[3])})},
                   {"dlat", canonical(s.dlat_deg)},
                   {"dlon", canonical(s.dlon_deg)},
                   {"record", "sample"}});
  }
  finish(out);
}

NoiseModel read_noise_model(std::istream& in, const std::string& source) {
  RecordReader reader(in, source);
  json j;
  if (!reader.next(j)) throw reader.error("", "empty noise model file");
  expect_header(j, reader, kNoiseFormat);
  const auto expected = get_int(j, "samples", reader);
  NoiseModel model;
  while (reader.next(j)) {
    NoiseSample s;
    s.dlat_deg = get_number(j, "dlat", reader);
    s.dlon_deg = get_number(j, "dlon", reader);
    s.class_match = get_bool(j, "class_match", reader);
    const json& b = field(j, "dbbox", reader);
    if (!b.is_array() || b.size() != 4) throw reader.error("dbbox", "expected 4 numbers");
    for (int k = 0; k < 4; ++k) {
      if (!b[k].is_number()) throw reader.error("dbbox", "expected 4 numbers");
      s.dbbox[k] = b[k].get<double>();
    }
    model.samples.push_back(s);
  }
  if (static_cast<std::int64_t>(model.samples.size()) != expected) {
    throw reader.error("samples", "expected " + std::to_string(expected) + " samples, found " +
                                      std::to_string(model.samples.size()));
  }
  return model;
}

void write_noise_model(const NoiseModel& model, const std::string& path) {
  auto out = open_out(path);
  write_noise_model(model, out);
}

NoiseModel read_noise_model(const std::string& path) {
  auto in = open_in(path);
  return read_noise_model(in, path);
}

// --- training pairs ---------------------------------------------------------

namespace {

json encode_grid(const SnapshotGrid& g) {
  json cells = json::array();
  for (int iy = 0; iy < kGridSize; ++iy) {
    for (int ix = 0; ix < kGridSize; ++ix) {
      const auto& c = g.cell(ix, iy);
      if (!c.occupied) continue;
      cells.push_back(json::array({ix, iy, canonical(c.class_value), canonical(c.north_m),
                                   canonical(c.east_m), canonical(c.confidence)}));
    }
  }
  return cells;
}

SnapshotGrid decode_grid(const json& j, const char* key, const RecordReader& r) {
  const json& cells = field(j, key, r);
  if (!cells.is_array()) throw r.error(key, "not an array");
  SnapshotGrid g;
  for (const auto& c : cells) {
    if (!c.is_array() || c.size() != 6 || !c[0].is_number_integer() || !c[1].is_number_integer()) {
      throw r.error(key, "cell must be [ix, iy, class, north, east, confidence]");
    }
    const int ix = c[0].get<int>();
    const int iy = c[1].get<int>();
    if (ix < 0 || ix >= kGridSize || iy < 0 || iy >= kGridSize) throw r.error(key, "cell out of grid");
    for (int k = 2; k < 6; ++k) {
      if (!c[k].is_number()) throw r.error(key, "cell values must be numbers");
    }
    g.cell(ix, iy) = {true, c[2].get<double>(), c[3].get<double>(), c[4].get<double>(),
                      c[5].get<double>()};
  }
  return g;
}

}  // namespace

void write_pairs(const std::vector<LabeledPair>& pairs, std::ostream& out) {
  put_line(out, {{"format", kPairsFormat},
                 {"pairs", pairs.size()},
                 {"record", "header"},
                 {"version", kAuxFormatVersion}});
  for (const auto& p : pairs) {
    put_line(out, {{"a", encode_detection(p.a, true)},
                   {"b", encode_detection(p.b, true)},
                   {"grid_a", encode_grid(*p.grid_a)},
                   {"grid_b", encode_grid(*p.grid_b)},
                   {"image", json::array({p.image.width, p.image.height})},
                   {"label", p.label},
                   {"record", "pair"}});
  }
  finish(out);
}

std::vector<LabeledPair> read_pairs(std::istream& in, const std::string& source) {
  RecordReader reader(in, source);
  json j;
  if (!reader.next(j)) throw reader.error("", "empty pairs file");
  expect_header(j, reader, kPairsFormat);
  const auto expected = get_int(j, "pairs", reader);
  std::vector<LabeledPair> out;
  while (reader.next(j)) {
    LabeledPair p;
    const json& image = field(j, "image", reader);
    if (!image.is_array() || image.size() != 2 || !image[0].is_number_integer() ||
        !image[1].is_number_integer()) {
      throw reader.error("image", "expected [width, height]");
    }
    p.image = {image[0].get<int>(), image[1].get<int>()};
    p.a = decode_detection(field(j, "a", reader), reader, p.image, 0, nullptr);
    p.b = decode_detection(field(j, "b", reader), reader, p.image, 0, nullptr);
    p.grid_a = std::make_shared<const SnapshotGrid>(decode_grid(j, "grid_a", reader));
    p.grid_b = std::make_shared<const SnapshotGrid>(decode_grid(j, "grid_b", reader));
    const auto label = get_int(j, "label", reader);
    if (label != 0 && label != 1) throw reader.error("label", "must be 0 or 1");
    p.label = static_cast<int>(label);
    out.push_back(std::move(p));
  }
  if (static_cast<std::int64_t>(out.size()) != expected) {
    throw reader.error("pairs", "expected " + std::to_string(expected) + " pairs, found " +
                                    std::to_string(out.size()));
  }
  return out;
}

void write_pairs(const std::vector<LabeledPair>& pairs, const std::string& path) {
  auto out = open_out(path);
  write_pairs(pairs, out);
}

std::vector<LabeledPair> read_pairs(const std::string& path) {
  auto in = open_in(path);
  return read_pairs(in, path);
}

// --- evaluation -------------------------------------------------------------

void write_evaluation(const MatchReport& report, const MatchOptions& options, std::ostream& out) {
  json matches = json::array();
  for (const auto& m : report.matches) {
    matches.push_back({{"class_agrees", m.class_agrees},
                       {"error_m", canonical(m.error_m)},
                       {"prediction", m.prediction},
                       {"truth", m.truth},
                       {"truth_class", m.truth_class}});
  }
  put_line(out, {{"fn", report.fn},
                 {"format", kEvaluationFormat},
                 {"fp", report.fp},
                 {"matches", matches},
                 {"radius_m", canonical(options.radius_m)},
                 {"require_class", options.require_class},
                 {"tp", report.tp},
                 {"version", kAuxFormatVersion}});
  finish(out);
}

MatchReport read_evaluation(std::istream& in, const std::string& source) {
  RecordReader reader(in, source);
  json j;
  if (!reader.next(j)) throw reader.error("", "empty evaluation file");
  expect_header(j, reader, kEvaluationFormat);
  MatchReport r;
  r.tp = static_cast<int>(get_int(j, "tp", reader));
  r.fn = static_cast<int>(get_int(j, "fn", reader));
  r.fp = static_cast<int>(get_int(j, "fp", reader));
  const json& matches = field(j, "matches", reader);
  if (!matches.is_array()) throw reader.error("matches", "not an array");
  for (const auto& m : matches) {
    PredictionMatch pm;
    pm.prediction = static_cast<std::size_t>(get_int(m, "prediction", reader));
    pm.truth = static_cast<std::size_t>(get_int(m, "truth", reader));
    pm.error_m = get_number(m, "error_m", reader);
    pm.truth_class = static_cast<ClassId>(get_int(m, "truth_class", reader));
    pm.class_agrees = get_bool(m, "class_agrees", reader);
    r.matches.push_back(pm);
    r.gps_errors.push_back(pm.error_m);
  }
  if (static_cast<int>(r.matches.size()) != r.tp) throw reader.error("tp", "does not match match count");
  r.per_class_errors = per_class_gps_error(r);
  return r;
}

void write_evaluation(const MatchReport& report, const MatchOptions& options,
                      const std::string& path) {
  auto out = open_out(path);
  write_evaluation(report, options, out);
}

MatchReport read_evaluation(const std::string& path) {
  auto in = open_in(path);
  return read_evaluation(in, path);
}

void write_report_csv(const MatchReport& report, std::ostream& out) {
  out << "tp,fn,fp,mean_error_m,std_error_m";
  for (int b = 0; b < kHistogramBins; ++b) {
    char buf[24];
    std::snprintf(buf, sizeof buf, ",hist_%02d_%02d", b, b + 1);
    out << buf;
  }
  out << ",precision,recall\n";
  if (report.tp + report.fn + report.fp > 0) {
    const ErrorStats s = gps_error_stats(report);
    out << report.tp << ',' << report.fn << ',' << report.fp << ','
        << (s.mean_m ? format_number(*s.mean_m) : "") << ','
        << (s.std_m ? format_number(*s.std_m) : "");
    for (int count : s.histogram) out << ',' << count;
    out << ',' << format_number(report.precision()) << ',' << format_number(report.recall())
        << '\n';
  }
  finish(out);
}

void write_report_csv(const MatchReport& report, const std::string& path) {
  auto out = open_out(path);
  write_report_csv(report, out);
}

}  // namespace signmap
