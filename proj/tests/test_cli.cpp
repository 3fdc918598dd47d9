#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "signmap/cli.hpp"
#include "signmap/dataio.hpp"

using namespace signmap;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"signmap"};
  storage.insert(storage.end(), args);
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("signmap_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const char* name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateIsDeterministic) {
  ASSERT_EQ(run({"simulate", "--seed", "7", "--out", path("a.jsonl")}).code, 0);
  ASSERT_EQ(run({"simulate", "--seed", "7", "--out", path("b.jsonl")}).code, 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_FALSE(slurp(path("a.jsonl")).empty());
}

TEST_F(CliTest, EvaluateWithoutTruthIsUsageError) {
  const CliRun r = run({"evaluate", "--predictions", path("p.csv"), "--out", path("e.json")});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("--truth"), std::string::npos);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST_F(CliTest, ZeroNoiseChainIsPerfect) {
  ASSERT_EQ(run({"simulate", "--seed", "3", "--segments", "3", "--preset", "zero-noise", "--out",
                 path("truth.jsonl"), "--detections-out", path("dets.jsonl")})
                .code,
            0);
  ASSERT_EQ(run({"track", "--detections", path("dets.jsonl"), "--out", path("t.jsonl")}).code, 0);
  ASSERT_EQ(run({"condense", "--tracklets", path("t.jsonl"), "--out", path("p.csv"), "--method", "wavg"}).code, 0);
  const CliRun ev = run({"evaluate", "--predictions", path("p.csv"), "--truth", path("truth.jsonl"),
                      "--out", path("e.json")});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("fn=0 fp=0"), std::string::npos) << ev.out;
  const CliRun rep = run({"report", "--evaluation", path("e.json"), "--out", path("r.csv")});
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("histogram"), std::string::npos);
  const MatchReport r = read_evaluation(path("e.json"));
  EXPECT_EQ(r.fn, 0);
  EXPECT_EQ(r.fp, 0);
  EXPECT_GT(r.tp, 0);
  const std::string csv = slurp(path("r.csv"));
  EXPECT_EQ(csv.substr(0, 9), "tp,fn,fp,");
}

TEST_F(CliTest, SegmentsComeOutInIdOrder) {
  ASSERT_EQ(run({"simulate", "--seed", "3", "--segments", "4", "--out", path("truth.jsonl"),
                 "--detections-out", path("dets.jsonl")})
                .code,
            0);
  ASSERT_EQ(run({"track", "--detections", path("dets.jsonl"), "--out", path("t.jsonl")}).code, 0);
  const auto ts = read_tracklets(path("t.jsonl"));
  ASSERT_EQ(ts.size(), 4u);
  for (std::size_t i = 1; i < ts.size(); ++i) EXPECT_LT(ts[i - 1].segment_id, ts[i].segment_id);
  ASSERT_EQ(run({"condense", "--tracklets", path("t.jsonl"), "--out", path("p1.csv"), "--method", "tri"}).code, 0);
  ASSERT_EQ(run({"condense", "--tracklets", path("t.jsonl"), "--out", path("p2.csv"), "--method", "tri"}).code, 0);
  EXPECT_EQ(slurp(path("p1.csv")), slurp(path("p2.csv")));
}

TEST_F(CliTest, LearnedScorerChain) {
  ASSERT_EQ(run({"simulate", "--seed", "5", "--segments", "2", "--out", path("truth.jsonl"),
                 "--detections-out", path("dets.jsonl")})
                .code,
            0);
  const CliRun h = run({"harvest-noise", "--annotations", path("truth.jsonl"), "--detections",
                     path("dets.jsonl"), "--out", path("noise.jsonl")});
  ASSERT_EQ(h.code, 0) << h.err;
  const CliRun g = run({"gen-pairs", "--annotations", path("truth.jsonl"), "--noise", path("noise.jsonl"),
                     "--out", path("pairs.jsonl"), "--seed", "2"});
  ASSERT_EQ(g.code, 0) << g.err;
  const CliRun t = run({"train-metric", "--pairs", path("pairs.jsonl"), "--out", path("model.bin"),
                     "--epochs", "2"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.out.find("test_accuracy="), std::string::npos);
  const CliRun k = run({"track", "--detections", path("dets.jsonl"), "--out", path("t.jsonl"),
                     "--scorer", "model", "--model", path("model.bin")});
  ASSERT_EQ(k.code, 0) << k.err;
}

TEST_F(CliTest, ValidationErrors) {
  EXPECT_EQ(run({}).code, kExitValidation);
  EXPECT_EQ(run({"frobnicate"}).code, kExitValidation);
  ASSERT_EQ(run({"simulate", "--out", path("truth.jsonl"), "--detections-out", path("dets.jsonl")}).code, 0);
  const CliRun bad_threshold =
      run({"track", "--detections", path("dets.jsonl"), "--out", path("t.jsonl"), "--threshold", "2"});
  EXPECT_EQ(bad_threshold.code, kExitValidation);
  EXPECT_NE(bad_threshold.err.find("--threshold"), std::string::npos);
  ASSERT_EQ(run({"track", "--detections", path("dets.jsonl"), "--out", path("t.jsonl")}).code, 0);
  const CliRun bad_method =
      run({"condense", "--tracklets", path("t.jsonl"), "--out", path("p.csv"), "--method", "mrf"});
  EXPECT_EQ(bad_method.code, kExitValidation);
  EXPECT_NE(bad_method.err.find("--method"), std::string::npos);
  const CliRun missing = run({"track", "--detections", path("nope.jsonl"), "--out", path("t.jsonl")});
  EXPECT_EQ(missing.code, kExitValidation);
  EXPECT_NE(missing.err.find("nope.jsonl"), std::string::npos);
  // Wrong kind of file: annotations where detections are expected.
  const CliRun wrong = run({"track", "--detections", path("truth.jsonl"), "--out", path("t.jsonl")});
  EXPECT_EQ(wrong.code, kExitValidation);
  EXPECT_NE(wrong.err.find("truth.jsonl"), std::string::npos);
  EXPECT_EQ(run({"simulate", "--help"}).code, kExitOk);
}

TEST_F(CliTest, RuntimeErrorExitsTwo) {
  ASSERT_EQ(run({"simulate", "--out", path("truth.jsonl")}).code, 0);
  const CliRun r = run({"simulate", "--out", (dir_ / "no_such_dir" / "x.jsonl").string()});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.err.find("no_such_dir"), std::string::npos);
}
