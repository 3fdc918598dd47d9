#include "signmap/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "signmap/condenser.hpp"
#include "signmap/dataio.hpp"
#include "signmap/evaluation.hpp"
#include "signmap/metric_model.hpp"
#include "signmap/pipeline.hpp"
#include "signmap/similarity.hpp"
#include "signmap/simulator.hpp"
#include "signmap/tracker.hpp"

namespace signmap {

namespace {

// Raised for bad flag values found after parsing; maps to the validation exit.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string mean_text(const ErrorStats& s) { return s.mean_m ? fmt("%.3f", *s.mean_m) : "n/a"; }

template <typename T>
void sort_by_segment(std::vector<T>& v) {
  std::stable_sort(v.begin(), v.end(),
                   [](const T& a, const T& b) { return a.segment_id < b.segment_id; });
}

template <typename Seg>
void sort_segments(std::vector<Seg>& v) {
  std::stable_sort(v.begin(), v.end(), [](const Seg& a, const Seg& b) { return a.id < b.id; });
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::uint64_t seed = 1;
  int segments = 1;
  std::string preset = "benchmark";
  std::string out;
  std::string detections_out;
};

void simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.segments < 1) throw UsageError("--segments must be >= 1");
  SimConfig cfg = a.preset == "zero-noise" ? zero_noise_preset(a.seed) : benchmark_preset(a.seed);
  cfg.validate();
  auto segs = generate_segments(cfg, a.segments);
  write_segments(segs, a.out);
  std::size_t frames = 0;
  std::size_t signs = 0;
  for (const auto& s : segs) {
    frames += s.frames.size();
    signs += ground_truth_signs(s).size();
  }
  std::size_t dets = 0;
  if (!a.detections_out.empty()) {
    auto degraded = degrade_segments(segs, cfg.noise, cfg.class_count, a.seed ^ kDegradeSeedSalt,
                                     Exec::parallel, cfg.projection);
    for (const auto& s : degraded) {
      for (const auto& f : s.frames) dets += f.detections.size();
    }
    write_segments(degraded, a.detections_out);
  }
  out << "simulate: segments=" << segs.size() << " frames=" << frames << " signs=" << signs;
  if (!a.detections_out.empty()) out << " detections=" << dets;
  out << '\n';
}

// --- harvest-noise ----------------------------------------------------------

struct HarvestArgs {
  std::string annotations;
  std::string detections;
  std::string out;
};

void harvest(const HarvestArgs& a, std::ostream& out) {
  auto anns = read_segments(a.annotations);
  auto dets = read_detection_segments(a.detections);
  std::map<std::string, const DetectionSegment*> by_id;
  for (const auto& d : dets) by_id[d.id] = &d;
  std::vector<RoadSegment> paired_anns;
  std::vector<DetectionSegment> paired_dets;
  for (const auto& s : anns) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) throw UsageError("--detections has no segment " + s.id);
    paired_anns.push_back(s);
    paired_dets.push_back(*it->second);
  }
  const NoiseModel model = harvest_noise_model(paired_anns, paired_dets);
  write_noise_model(model, a.out);
  std::size_t mismatched = 0;
  for (const auto& s : model.samples) mismatched += s.class_match ? 0 : 1;
  out << "harvest-noise: segments=" << paired_anns.size() << " samples=" << model.samples.size()
      << " class_mismatches=" << mismatched << '\n';
}

// --- gen-pairs --------------------------------------------------------------

struct PairsArgs {
  std::string annotations;
  std::string noise;
  std::string out;
  std::uint64_t seed = 1;
  int classes = 50;
  double gps_sigma_m = 2.0;
  double class_confusion = 0.05;
  double bbox_jitter_px = 2.0;
};

void gen_pairs(const PairsArgs& a, std::ostream& out) {
  if (a.classes < 1) throw UsageError("--classes must be >= 1");
  auto anns = read_segments(a.annotations);
  std::unique_ptr<NoiseSource> noise;
  if (!a.noise.empty()) {
    NoiseModel model = read_noise_model(a.noise);
    if (model.samples.empty()) throw UsageError("--noise model " + a.noise + " has no samples");
    noise = std::make_unique<EmpiricalNoise>(std::move(model));
  } else {
    noise = std::make_unique<ParametricNoise>(a.gps_sigma_m, a.class_confusion, a.bbox_jitter_px);
  }
  Rng rng(a.seed);
  const TrainingPairs tp = generate_training_pairs(anns, *noise, a.classes, rng);
  write_pairs(tp.pairs, a.out);
  std::size_t same = 0;
  for (const auto& p : tp.pairs) same += p.label == 0 ? 1 : 0;
  out << "gen-pairs: pairs=" << tp.pairs.size() << " same=" << same
      << " different=" << tp.pairs.size() - same << " skipped_segments=" << tp.skipped_segments.size()
      << '\n';
}

// --- train-metric -----------------------------------------------------------

struct TrainArgs {
  std::string pairs;
  std::string out;
  std::uint64_t seed = 1;
  int epochs = 20;
  double learning_rate = 0.01;
  int batch_size = 32;
  int classes = 50;
};

void train_metric(const TrainArgs& a, std::ostream& out) {
  if (a.epochs < 1) throw UsageError("--epochs must be >= 1");
  if (a.batch_size < 1) throw UsageError("--batch-size must be >= 1");
  if (!(a.learning_rate > 0.0)) throw UsageError("--lr must be positive");
  auto pairs = read_pairs(a.pairs);
  if (pairs.size() < 100) {
    throw UsageError("--pairs " + a.pairs + " holds " + std::to_string(pairs.size()) +
                     " pairs, need at least 100");
  }
  Rng rng(a.seed);
  const PairSplit split = split_pairs(std::move(pairs), rng);
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.learning_rate;
  cfg.batch_size = static_cast<std::size_t>(a.batch_size);
  cfg.num_classes = a.classes;
  cfg.embedding_seed = a.seed;
  const TrainResult r = train_similarity_model(split, cfg, rng);
  save_model(r.model, a.out);
  const auto test = make_examples(split.test);
  out << "train-metric: train=" << split.train.size() << " validation=" << split.validation.size()
      << " test=" << split.test.size() << " best_epoch=" << r.best_epoch
      << " validation_loss=" << fmt("%.4f", r.history.at(r.best_epoch - 1).validation_loss)
      << " test_accuracy=" << fmt("%.4f", test.empty() ? 0.0 : accuracy(r.model, test)) << '\n';
}

// --- track ------------------------------------------------------------------

struct TrackArgs {
  std::string detections;
  std::string out;
  double threshold = 0.7;
  int max_gap = 0;
  double min_confidence = 0.0;
  std::string scorer = "baseline";
  std::string model;
};

void track(const TrackArgs& a, std::ostream& out) {
  TrackerConfig cfg;
  cfg.threshold = a.threshold;
  cfg.max_gap = a.max_gap;
  if (a.scorer == "model") {
    if (a.model.empty()) throw UsageError("--scorer model requires --model");
    cfg.scorer = std::make_shared<ModelScorer>(load_model(a.model));
  } else if (!a.model.empty()) {
    throw UsageError("--model is only used with --scorer model");
  }
  if (!(a.min_confidence >= 0.0 && a.min_confidence <= 1.0)) {
    throw UsageError("--min-confidence must lie in [0, 1]");
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--threshold/--max-gap: ") + e.what());
  }
  auto segs = read_detection_segments(a.detections);
  sort_segments(segs);

  TrackerConfig inner = cfg;
  inner.exec = Exec::serial;
  std::vector<SegmentTracklets> all(segs.size());
  const long n = static_cast<long>(segs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const DetectionSegment seg =
        a.min_confidence > 0.0 ? filter_detections(segs[i], a.min_confidence) : segs[i];
    all[i] = {segs[i].id, track_segment(seg, inner)};
  }
  write_tracklets(all, a.out);
  std::size_t tracklets = 0;
  std::size_t dets = 0;
  for (const auto& st : all) {
    tracklets += st.tracklets.size();
    for (const auto& t : st.tracklets) dets += t.detections.size();
  }
  out << "track: segments=" << all.size() << " detections=" << dets << " tracklets=" << tracklets
      << '\n';
}

// --- condense ---------------------------------------------------------------

struct CondenseArgs {
  std::string tracklets;
  std::string out;
  std::string method = "wavg";
  int min_support = 1;
};

void condense_cmd(const CondenseArgs& a, std::ostream& out) {
  const auto method = parse_condense_method(a.method);
  if (!method || *method == CondenseMethod::triangulate_fallback || *method == CondenseMethod::mrf) {
    throw UsageError("--method must be one of foi, wavg, tri (got " + a.method + ")");
  }
  if (a.min_support < 1) throw UsageError("--min-support must be >= 1");
  auto all = read_tracklets(a.tracklets);
  sort_by_segment(all);
  std::vector<SegmentPredictions> preds(all.size());
  const long n = static_cast<long>(all.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    std::vector<Tracklet> kept;
    for (const auto& t : all[i].tracklets) {
      if (static_cast<int>(t.detections.size()) >= a.min_support) kept.push_back(t);
    }
    preds[i] = {all[i].segment_id, condense_all(kept, *method, Exec::serial)};
  }
  write_predictions(preds, a.out);
  std::size_t count = 0;
  std::size_t fallbacks = 0;
  for (const auto& sp : preds) {
    count += sp.predictions.size();
    for (const auto& p : sp.predictions) {
      fallbacks += p.method == CondenseMethod::triangulate_fallback ? 1 : 0;
    }
  }
  out << "condense: segments=" << preds.size() << " predictions=" << count
      << " method=" << a.method;
  if (*method == CondenseMethod::triangulate) out << " fallbacks=" << fallbacks;
  out << '\n';
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string predictions;
  std::string truth;
  std::string out;
  double radius_m = kMatchRadiusM;
  bool require_class = false;
};

void evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (!(a.radius_m > 0.0)) throw UsageError("--radius must be positive");
  auto truth = read_segments(a.truth);
  sort_segments(truth);
  auto preds = read_predictions(a.predictions);
  std::map<std::string, std::vector<SignPrediction>> by_id;
  for (auto& sp : preds) {
    auto& v = by_id[sp.segment_id];
    v.insert(v.end(), sp.predictions.begin(), sp.predictions.end());
  }
  for (const auto& [id, _] : by_id) {
    const bool known = std::any_of(truth.begin(), truth.end(),
                                   [&](const RoadSegment& s) { return s.id == id; });
    if (!known) throw UsageError("--predictions names segment " + id + " absent from --truth");
  }
  const MatchOptions options{a.radius_m, a.require_class};
  std::vector<MatchReport> reports(truth.size());
  const long n = static_cast<long>(truth.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    auto it = by_id.find(truth[i].id);
    static const std::vector<SignPrediction> none;
    reports[i] = match_predictions(it == by_id.end() ? none : it->second,
                                   ground_truth_signs(truth[i]), options);
  }
  const MatchReport r = merge_reports(reports);
  write_evaluation(r, options, a.out);
  out << "evaluate: tp=" << r.tp << " fn=" << r.fn << " fp=" << r.fp
      << " precision=" << fmt("%.4f", r.precision()) << " recall=" << fmt("%.4f", r.recall())
      << " mean_error_m=" << mean_text(gps_error_stats(r)) << '\n';
}

// --- report -----------------------------------------------------------------

struct ReportArgs {
  std::string evaluation;
  std::string out;
};

void print_histogram(const ErrorStats& s, std::ostream& out) {
  constexpr int kWidth = 50;
  const int peak = *std::max_element(s.histogram.begin(), s.histogram.end());
  out << "GPS error histogram (m)\n";
  for (int b = 0; b < kHistogramBins; ++b) {
    const int count = s.histogram[b];
    const int bar = peak == 0 ? 0 : (count * kWidth + peak - 1) / peak;
    char label[32];
    if (b + 1 == kHistogramBins) {
      std::snprintf(label, sizeof label, "%2d+    ", b);
    } else {
      std::snprintf(label, sizeof label, "%2d-%-2d  ", b, b + 1);
    }
    out << label << '|' << std::string(bar, '#') << ' ' << count << '\n';
  }
}

void report(const ReportArgs& a, std::ostream& out) {
  const MatchReport r = read_evaluation(a.evaluation);
  write_report_csv(r, a.out);
  const ErrorStats s = gps_error_stats(r);
  print_histogram(s, out);
  out << "report: tp=" << r.tp << " fn=" << r.fn << " fp=" << r.fp
      << " mean_error_m=" << mean_text(s)
      << " std_error_m=" << (s.std_m ? fmt("%.3f", *s.std_m) : "n/a") << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Traffic sign geolocation pipeline", "signmap"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate seeded synthetic road segments");
  c_sim->add_option("--seed", sim.seed, "Base seed");
  c_sim->add_option("--segments", sim.segments, "Number of segments");
  c_sim->add_option("--preset", sim.preset, "Noise preset")
      ->check(CLI::IsMember({"benchmark", "zero-noise"}));
  c_sim->add_option("--out", sim.out, "Annotation segment file")->required();
  c_sim->add_option("--detections-out", sim.detections_out, "Simulated detector output file");

  HarvestArgs har;
  auto* c_har = app.add_subcommand("harvest-noise", "Build a noise model from matched detections");
  c_har->add_option("--annotations", har.annotations)->required()->check(CLI::ExistingFile);
  c_har->add_option("--detections", har.detections)->required()->check(CLI::ExistingFile);
  c_har->add_option("--out", har.out)->required();

  PairsArgs prs;
  auto* c_prs = app.add_subcommand("gen-pairs", "Generate labeled training pairs");
  c_prs->add_option("--annotations", prs.annotations)->required()->check(CLI::ExistingFile);
  c_prs->add_option("--noise", prs.noise, "Noise model; parametric noise when absent")
      ->check(CLI::ExistingFile);
  c_prs->add_option("--out", prs.out)->required();
  c_prs->add_option("--seed", prs.seed);
  c_prs->add_option("--classes", prs.classes);
  c_prs->add_option("--gps-sigma", prs.gps_sigma_m);
  c_prs->add_option("--class-confusion", prs.class_confusion);
  c_prs->add_option("--bbox-jitter", prs.bbox_jitter_px);

  TrainArgs trn;
  auto* c_trn = app.add_subcommand("train-metric", "Train the similarity network");
  c_trn->add_option("--pairs", trn.pairs)->required()->check(CLI::ExistingFile);
  c_trn->add_option("--out", trn.out)->required();
  c_trn->add_option("--seed", trn.seed);
  c_trn->add_option("--epochs", trn.epochs);
  c_trn->add_option("--lr", trn.learning_rate);
  c_trn->add_option("--batch-size", trn.batch_size);
  c_trn->add_option("--classes", trn.classes);

  TrackArgs trk;
  auto* c_trk = app.add_subcommand("track", "Merge detections into tracklets");
  c_trk->add_option("--detections", trk.detections)->required()->check(CLI::ExistingFile);
  c_trk->add_option("--out", trk.out)->required();
  c_trk->add_option("--threshold", trk.threshold);
  c_trk->add_option("--max-gap", trk.max_gap);
  c_trk->add_option("--min-confidence", trk.min_confidence);
  c_trk->add_option("--scorer", trk.scorer)->check(CLI::IsMember({"baseline", "model"}));
  c_trk->add_option("--model", trk.model)->check(CLI::ExistingFile);

  CondenseArgs cnd;
  auto* c_cnd = app.add_subcommand("condense", "Condense tracklets into sign predictions");
  c_cnd->add_option("--tracklets", cnd.tracklets)->required()->check(CLI::ExistingFile);
  c_cnd->add_option("--out", cnd.out)->required();
  c_cnd->add_option("--method", cnd.method, "foi | wavg | tri");
  c_cnd->add_option("--min-support", cnd.min_support);

  EvaluateArgs evl;
  auto* c_evl = app.add_subcommand("evaluate", "Match predictions against ground truth");
  c_evl->add_option("--predictions", evl.predictions)->required()->check(CLI::ExistingFile);
  c_evl->add_option("--truth", evl.truth)->required()->check(CLI::ExistingFile);
  c_evl->add_option("--out", evl.out)->required();
  c_evl->add_option("--radius", evl.radius_m);
  c_evl->add_flag("--require-class", evl.require_class);

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "CSV and ASCII histogram from an evaluation");
  c_rep->add_option("--evaluation", rep.evaluation)->required()->check(CLI::ExistingFile);
  c_rep->add_option("--out", rep.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitValidation;
  }

  try {
    if (c_sim->parsed()) simulate(sim, out);
    if (c_har->parsed()) harvest(har, out);
    if (c_prs->parsed()) gen_pairs(prs, out);
    if (c_trn->parsed()) train_metric(trn, out);
    if (c_trk->parsed()) track(trk, out);
    if (c_cnd->parsed()) condense_cmd(cnd, out);
    if (c_evl->parsed()) evaluate(evl, out);
    if (c_rep->parsed()) report(rep, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace signmap
