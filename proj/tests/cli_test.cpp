// Copyright 2026 The topicret Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"
#include "topicret/binary_io.hpp"
#include "topicret/cli.hpp"
#include "topicret/config.hpp"

namespace topicret {
namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation run(std::vector<std::string> args) {
  args.insert(args.begin(), "topicret");
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Config, RenderParsesBack) {
  RunConfig c;
  c.seed = 99;
  c.alpha = 0.3;
  c.theta_t = 0.1 + 0.2;
  c.granularity = Granularity::kWord;
  c.scheme = QuantKind::kU8;
  c.normalize = false;
  c.collection = "some/where.tsv";
  EXPECT_EQ(RunConfig::parse(c.render()), c);
  EXPECT_EQ(RunConfig::parse(RunConfig{}.render()), RunConfig{});
}

TEST(Config, UnknownKeyIsParseError) {
  try {
    RunConfig::parse("seed=1\nbogus=2\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Config, ValidationCatchesBadValues) {
  RunConfig c;
  c.topics = 1;
  EXPECT_THROW(c.validate(), Error);
  c = RunConfig{};
  c.k = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Config, FingerprintIgnoresOperationalKeys) {
  RunConfig a;
  RunConfig b = a;
  b.threads = 4;
  b.k = 10;
  b.scheme = QuantKind::kF16;
  b.artifacts = "elsewhere";
  EXPECT_EQ(a.fingerprint_text(), b.fingerprint_text());
  b.theta_t = 0.2;
  EXPECT_NE(a.fingerprint_text(), b.fingerprint_text());
}

TEST(Cli, UnknownSubcommandAndFlag) {
  EXPECT_EQ(run({"frobnicate"}).code, kExitValidation);
  EXPECT_EQ(run({"grad-check", "--no-such-flag"}).code, kExitValidation);
  EXPECT_EQ(run({}).code, kExitValidation);
}

TEST(Cli, BadConfigValueIsValidationError) {
  EXPECT_EQ(run({"grad-check", "--scheme", "f8"}).code, kExitValidation);
  EXPECT_EQ(run({"grad-check", "--set", "nonsense"}).code, kExitValidation);
}

TEST(Cli, GradCheckPasses) {
  const auto r = run({"grad-check", "--seed", "3"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST(Cli, SynthIsDeterministic) {
  testing::TempDir a, b;
  for (const auto* d : {&a, &b}) {
    const auto r = run({"synth", "--docs", "60", "--queries", "5", "--train-queries", "10",
                        "--seed", "4", "--out", d->path().string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  for (const char* f : {synth_files::kCollection, synth_files::kQueries, synth_files::kQrels,
                        synth_files::kTriples, synth_files::kTrainQueries}) {
    EXPECT_EQ(io::read_file(a / f), io::read_file(b / f)) << f;
  }
}

TEST(Cli, MissingInputIsValidationError) {
  testing::TempDir dir;
  const auto r = run({"lda-train", "--collection", (dir / "absent.tsv").string()});
  EXPECT_EQ(r.code, kExitValidation);
}

TEST(Cli, EvalOnPerfectRun) {
  testing::TempDir dir;
  io::write_text_file(dir / "qrels.txt", "q1 0 d1 1\nq2 0 d2 1\n");
  io::write_text_file(dir / "run.trec",
                      "q1 Q0 d1 1 2.0 t\nq1 Q0 d2 2 1.0 t\nq2 Q0 d2 1 3.0 t\n");
  const auto r = run({"eval", "--qrels", (dir / "qrels.txt").string(), "--run",
                      (dir / "run.trec").string(), "--artifacts", (dir / "none").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("mrr_at_10\t1.000000"), std::string::npos) << r.out;
}

TEST(Cli, EvalWithoutJudgedQueriesFails) {
  testing::TempDir dir;
  io::write_text_file(dir / "qrels.txt", "q9 0 d1 1\n");
  io::write_text_file(dir / "run.trec", "q1 Q0 d1 1 2.0 t\n");
  const auto r = run({"eval", "--qrels", (dir / "qrels.txt").string(), "--run",
                      (dir / "run.trec").string()});
  EXPECT_NE(r.code, kExitOk);
}

// A tiny end-to-end pass, then a search against artifacts from a different setup.
TEST(Cli, PipelineAndIncompatibleArtifacts) {
  testing::TempDir dir;
  const std::string d = dir.path().string();
  ASSERT_EQ(run({"synth", "--docs", "40", "--queries", "4", "--train-queries", "8", "--topics",
                 "4", "--out", d})
                .code,
            kExitOk);
  const std::string conf = (dir / "run.conf").string();
  const std::vector<std::string> common = {"--config", conf, "--set", "dim=8", "--set",
                                           "context-dim=4", "--set", "attention-dim=4",
                                           "--epochs", "1", "--set", "lda-train-iters=20",
                                           "--artifacts", (dir / "out").string()};
  auto with = [&](std::vector<std::string> head) {
    head.insert(head.end(), common.begin(), common.end());
    return run(head);
  };
  for (const char* cmd : {"lda-train", "train", "index", "search"}) {
    const auto r = with({cmd});
    ASSERT_EQ(r.code, kExitOk) << cmd << ": " << r.err;
  }
  const auto ev = with({"eval", "--with-space"});
  ASSERT_EQ(ev.code, kExitOk) << ev.err;
  EXPECT_NE(ev.out.find("tradeoff_e3"), std::string::npos);
  EXPECT_EQ(with({"space-report"}).code, kExitOk);

  // Changing a fingerprinted setting makes the stored checkpoint unusable.
  auto mismatch = with({"search", "--theta-t", "0.3"});
  EXPECT_EQ(mismatch.code, kExitRuntime);
  EXPECT_NE(mismatch.err.find("ncompatible"), std::string::npos) << mismatch.err;

  // An index built for another granularity is refused.
  auto other = with({"search", "--granularity", "global"});
  EXPECT_NE(other.code, kExitOk);
}

}  // namespace
}  // namespace topicret
