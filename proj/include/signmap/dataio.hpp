#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "signmap/evaluation.hpp"
#include "signmap/similarity.hpp"
#include "signmap/types.hpp"

// On-disk formats. Segment, tracklet, noise-model, pair and evaluation files
// are JSON lines with sorted keys and floats rounded to 9 significant digits,
// so identical values always serialize to identical bytes. A segment file
// may hold several segments, each introduced by its own header record.
// Predictions and reports are CSV with a fixed column order.

namespace signmap {

inline constexpr int kSegmentFormatVersion = 1;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string source, int line, std::string field, const std::string& what);

  const std::string& source() const { return source_; }
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string source_;
  int line_;
  std::string field_;
};

/// Rounds to 9 significant digits (the on-disk precision).
double canonical(double v);

// --- segments ---------------------------------------------------------------

void write_segments(const std::vector<RoadSegment>& segs, std::ostream& out);
void write_segments(const std::vector<DetectionSegment>& segs, std::ostream& out);
std::vector<RoadSegment> read_segments(std::istream& in, const std::string& source = "<stream>");
std::vector<DetectionSegment> read_detection_segments(std::istream& in,
                                                      const std::string& source = "<stream>");

void write_segment(const RoadSegment& seg, const std::string& path);
RoadSegment read_segment(const std::string& path);  // exactly one segment
void write_segments(const std::vector<RoadSegment>& segs, const std::string& path);
void write_segments(const std::vector<DetectionSegment>& segs, const std::string& path);
std::vector<RoadSegment> read_segments(const std::string& path);
std::vector<DetectionSegment> read_detection_segments(const std::string& path);

// --- tracklets --------------------------------------------------------------

struct SegmentTracklets {
  std::string segment_id;
  std::vector<Tracklet> tracklets;
};

void write_tracklets(const std::vector<SegmentTracklets>& all, std::ostream& out);
std::vector<SegmentTracklets> read_tracklets(std::istream& in, const std::string& source = "<stream>");
void write_tracklets(const std::vector<SegmentTracklets>& all, const std::string& path);
std::vector<SegmentTracklets> read_tracklets(const std::string& path);

// --- predictions (CSV) ------------------------------------------------------

struct SegmentPredictions {
  std::string segment_id;
  std::vector<SignPrediction> predictions;
};

// segment_id,lat_deg,lon_deg,class_id,support,method
void write_predictions(const std::vector<SegmentPredictions>& all, std::ostream& out);
std::vector<SegmentPredictions> read_predictions(std::istream& in,
                                                 const std::string& source = "<stream>");
void write_predictions(const std::vector<SegmentPredictions>& all, const std::string& path);
std::vector<SegmentPredictions> read_predictions(const std::string& path);

// --- noise model and training pairs ----------------------------------------

void write_noise_model(const NoiseModel& model, std::ostream& out);
NoiseModel read_noise_model(std::istream& in, const std::string& source = "<stream>");
void write_noise_model(const NoiseModel& model, const std::string& path);
NoiseModel read_noise_model(const std::string& path);

void write_pairs(const std::vector<LabeledPair>& pairs, std::ostream& out);
std::vector<LabeledPair> read_pairs(std::istream& in, const std::string& source = "<stream>");
void write_pairs(const std::vector<LabeledPair>& pairs, const std::string& path);
std::vector<LabeledPair> read_pairs(const std::string& path);

// --- evaluation -------------------------------------------------------------

void write_evaluation(const MatchReport& report, const MatchOptions& options, std::ostream& out);
MatchReport read_evaluation(std::istream& in, const std::string& source = "<stream>");
void write_evaluation(const MatchReport& report, const MatchOptions& options,
                      const std::string& path);
MatchReport read_evaluation(const std::string& path);

/// Columns: tp, fn, fp, mean_error_m, std_error_m, hist_00_01 ... hist_29_30,
/// precision, recall. A report with no truth and no predictions writes the
/// header only.
void write_report_csv(const MatchReport& report, std::ostream& out);
void write_report_csv(const MatchReport& report, const std::string& path);

}  // namespace signmap
