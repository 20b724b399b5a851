// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "completion/errors.hpp"
#include "completion/sequence_data.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace completion;

namespace {

// Frozen from a reference run; guards against silent generator drift.
constexpr int kSynthIncompleteFixture = 53;

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

FeatureSequence ramp(const std::string& id, int T, std::size_t d) {
  std::vector<float> v(static_cast<std::size_t>(T) * d);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.25f * static_cast<float>(i);
  return FeatureSequence::create(id, d, v);
}

}  // namespace

TEST_CASE("FeatureSequence validates its invariants") {
  CHECK_THROWS_AS(FeatureSequence::create("a", 2, {1, 2}), DataError);  // T=1
  CHECK_THROWS_AS(FeatureSequence::create("a", 0, {}), DataError);
  CHECK_THROWS_AS(FeatureSequence::create("a", 2, {1, 2, 3}), DataError);
  const float nan = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_WITH_AS(FeatureSequence::create("bad", 1, {1.0f, nan}),
                       doctest::Contains("non-finite value"), DataError);

  const auto s = ramp("ok", 3, 2);
  CHECK(s.length() == 3);
  CHECK(s.dim() == 2);
  CHECK(s.frame(2)[0] == doctest::Approx(0.5));
}

TEST_CASE("annotations canonicalise incompletion to T+1") {
  const auto inc = CompletionAnnotation::incomplete("x", 10);
  CHECK(inc.tau() == 11);
  CHECK_FALSE(inc.is_complete());
  const auto c = CompletionAnnotation::complete("y", 10, 10);
  CHECK(c.is_complete());
  CHECK_THROWS_WITH_AS(CompletionAnnotation::complete("z", 10, 12),
                       doctest::Contains("tau out of range"), DataError);
  CHECK_THROWS_AS(CompletionAnnotation::complete("z", 10, 0), DataError);
}

TEST_CASE("frame_labels worked examples") {
  SUBCASE("T=6, tau=4") {
    const auto labels =
        frame_labels(CompletionAnnotation::complete("s", 6, 4), 6);
    const Phase expected_y[] = {Phase::Pre,  Phase::Pre,  Phase::Pre,
                                Phase::Post, Phase::Post, Phase::Post};
    const double expected_r[] = {-0.75, -0.5, -0.25, 0.0, 0.25, 0.5};
    REQUIRE(labels.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(labels[i].t == static_cast<int>(i + 1));
      CHECK(labels[i].y == expected_y[i]);
      REQUIRE(labels[i].r.has_value());
      CHECK(*labels[i].r == expected_r[i]);
    }
  }
  SUBCASE("T=5 incomplete") {
    for (const auto& l :
         frame_labels(CompletionAnnotation::incomplete("s", 5), 5)) {
      CHECK(l.y == Phase::Pre);
      CHECK_FALSE(l.r.has_value());
    }
  }
  SUBCASE("T=3, tau=1") {
    const auto labels =
        frame_labels(CompletionAnnotation::complete("s", 3, 1), 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(labels[i].y == Phase::Post);
      CHECK(*labels[i].r == static_cast<double>(i));
    }
  }
}

TEST_CASE("frame_labels invariants hold for random (tau, T)") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int T = std::uniform_int_distribution<int>(2, 80)(rng);
    const auto ann = oracle::random_annotation(rng, T);
    const auto labels = frame_labels(ann, T);
    REQUIRE(labels.size() == static_cast<std::size_t>(T));
    for (const auto& l : labels) {
      if (ann.is_complete()) {
        CHECK((l.y == Phase::Post) == (l.t >= ann.tau()));
        REQUIRE(l.r.has_value());
        CHECK((*l.r < 0) == (l.t < ann.tau()));
        CHECK((*l.r == 0) == (l.t == ann.tau()));
      } else {
        CHECK(l.y == Phase::Pre);
        CHECK_FALSE(l.r.has_value());
      }
    }
  }
}

TEST_CASE("make_split") {
  std::vector<CompletionAnnotation> anns{
      CompletionAnnotation::complete("a1", 5, 2, "A"),
      CompletionAnnotation::incomplete("a2", 5, "A"),
      CompletionAnnotation::complete("b1", 5, 3, "B"),
      CompletionAnnotation::complete("c1", 5, 4, "C"),
  };

  SUBCASE("leave one subject out") {
    const auto splits = make_split(anns, LeaveOneSubjectOut{});
    REQUIRE(splits.size() == 3);
    CHECK(splits[0].name == "A");
    CHECK(splits[0].test_ids == std::vector<std::string>{"a1", "a2"});
    CHECK(splits[0].train_ids == std::vector<std::string>{"b1", "c1"});
    std::multiset<std::string> tested;
    for (const auto& s : splits) tested.insert(s.test_ids.begin(), s.test_ids.end());
    CHECK(tested == std::multiset<std::string>{"a1", "a2", "b1", "c1"});
  }
  SUBCASE("fixed") {
    FixedSplit fixed{{{"a1", SplitRole::Train},
                      {"b1", SplitRole::Test},
                      {"c1", SplitRole::Train}}};
    const auto splits = make_split(anns, fixed);
    REQUIRE(splits.size() == 1);
    CHECK(splits[0].train_ids == std::vector<std::string>{"a1", "c1"});
    CHECK(splits[0].test_ids == std::vector<std::string>{"b1"});
    FixedSplit unknown{{{"zz", SplitRole::Test}}};
    CHECK_THROWS_AS(make_split(anns, unknown), DataError);
  }
  SUBCASE("missing subject") {
    anns.push_back(CompletionAnnotation::complete("d1", 5, 4));
    CHECK_THROWS_WITH_AS(make_split(anns, LeaveOneSubjectOut{}),
                         doctest::Contains("d1"), DataError);
  }
}

TEST_CASE("leave-one-subject-out partitions synthetic datasets") {
  SynthConfig cfg;
  cfg.n_sequences = 37;
  cfg.n_subjects = 5;
  const auto ds = synthesize_dataset(cfg, 3);
  const auto splits = make_split(ds.annotations, LeaveOneSubjectOut{});
  CHECK(splits.size() == 5);
  std::multiset<std::string> tested;
  for (const auto& s : splits) {
    tested.insert(s.test_ids.begin(), s.test_ids.end());
    CHECK(s.test_ids.size() + s.train_ids.size() == ds.size());
  }
  CHECK(tested.size() == ds.size());
  CHECK(std::set<std::string>(tested.begin(), tested.end()).size() == ds.size());
}

TEST_CASE("load_dataset reads what save_dataset wrote, bit for bit") {
  TempDir dir;
  SynthConfig cfg;
  cfg.n_sequences = 12;
  cfg.n_subjects = 3;
  const auto ds = synthesize_dataset(cfg, 5);
  save_dataset(dir.path() / "features", dir.path() / "ann.jsonl", ds);
  const auto back = load_dataset(dir.path() / "features", dir.path() / "ann.jsonl");
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.sequences[i] == ds.sequences[i]);
    CHECK(back.annotations[i] == ds.annotations[i]);
  }
}

TEST_CASE("load_dataset error reporting") {
  TempDir dir;
  const auto feat = dir.path() / "features";
  std::filesystem::create_directories(feat);
  write_feature_file(feat / "s1.cmv", ramp("s1", 10, 3));
  write_feature_file(feat / "s2.cmv", ramp("s2", 8, 3));
  const auto ann = dir.path() / "ann.jsonl";
  auto write = [&](const std::string& text) { std::ofstream(ann) << text; };

  SUBCASE("two valid sequences") {
    write("{\"id\":\"s1\",\"T\":10,\"tau\":4}\n{\"id\":\"s2\",\"T\":8,\"tau\":null}\n");
    const auto ds = load_dataset(feat, ann);
    CHECK(ds.size() == 2);
    CHECK(ds.annotations[1].tau() == 9);
  }
  SUBCASE("tau out of range") {
    write("{\"id\":\"s1\",\"T\":10,\"tau\":12}\n{\"id\":\"s2\",\"T\":8,\"tau\":null}\n");
    CHECK_THROWS_WITH_AS(load_dataset(feat, ann),
                         doctest::Contains("tau out of range"), DataError);
  }
  SUBCASE("missing annotation") {
    write("{\"id\":\"s1\",\"T\":10,\"tau\":4}\n");
    CHECK_THROWS_WITH_AS(load_dataset(feat, ann),
                         doctest::Contains("missing annotation for sequence 's2'"),
                         DataError);
  }
  SUBCASE("dimension mismatch") {
    write_feature_file(feat / "s2.cmv", ramp("s2", 8, 4));
    write("{\"id\":\"s1\",\"T\":10,\"tau\":4}\n{\"id\":\"s2\",\"T\":8,\"tau\":null}\n");
    CHECK_THROWS_WITH_AS(load_dataset(feat, ann),
                         doctest::Contains("'s2': dimension mismatch"), DataError);
  }
  SUBCASE("non-finite value") {
    // Patch one float of s2 to NaN on disk.
    std::fstream f(feat / "s2.cmv", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(12 + 4 * 5);
    const unsigned char nan_le[4] = {0x00, 0x00, 0xc0, 0x7f};
    f.write(reinterpret_cast<const char*>(nan_le), 4);
    f.close();
    write("{\"id\":\"s1\",\"T\":10,\"tau\":4}\n{\"id\":\"s2\",\"T\":8,\"tau\":null}\n");
    CHECK_THROWS_WITH_AS(load_dataset(feat, ann),
                         doctest::Contains("'s2': non-finite value"), DataError);
  }
  SUBCASE("length disagreement") {
    write("{\"id\":\"s1\",\"T\":9,\"tau\":4}\n{\"id\":\"s2\",\"T\":8,\"tau\":null}\n");
    CHECK_THROWS_WITH_AS(load_dataset(feat, ann), doctest::Contains("'s1'"),
                         DataError);
  }
}

TEST_CASE("feature file layout is little-endian CMV1") {
  TempDir dir;
  const auto p = dir.path() / "x.cmv";
  write_feature_file(p, FeatureSequence::create("x", 1, {1.0f, -2.0f}));
  const std::string bytes = read_bytes(p);
  const std::string expected("CMV1\x02\0\0\0\x01\0\0\0\0\0\x80\x3f\0\0\0\xc0", 20);
  CHECK(bytes == expected);
}

TEST_CASE("synthesize_dataset") {
  SUBCASE("p_inc = 0 gives only complete annotations") {
    SynthConfig cfg;
    cfg.n_sequences = 10;
    cfg.p_incomplete = 0.0;
    const auto ds = synthesize_dataset(cfg, 1);
    CHECK(ds.size() == 10);
    for (const auto& a : ds.annotations) CHECK(a.tau() <= a.length());
  }
  SUBCASE("same seed, identical bytes") {
    TempDir a, b;
    SynthConfig cfg;
    cfg.n_sequences = 6;
    save_dataset(a.path() / "f", a.path() / "ann.jsonl", synthesize_dataset(cfg, 9));
    save_dataset(b.path() / "f", b.path() / "ann.jsonl", synthesize_dataset(cfg, 9));
    CHECK(read_bytes(a.path() / "ann.jsonl") == read_bytes(b.path() / "ann.jsonl"));
    for (int i = 0; i < 6; ++i) {
      const auto name = "seq_000" + std::to_string(i) + ".cmv";
      CHECK(read_bytes(a.path() / "f" / name) == read_bytes(b.path() / "f" / name));
    }
  }
  SUBCASE("incompletion count for n=100, p_inc=0.5, seed=7") {
    SynthConfig cfg;
    cfg.n_sequences = 100;
    cfg.p_incomplete = 0.5;
    const auto ds = synthesize_dataset(cfg, 7);
    int incomplete = 0;
    for (const auto& a : ds.annotations) incomplete += a.is_complete() ? 0 : 1;
    CHECK(incomplete >= 35);
    CHECK(incomplete <= 65);
    CHECK(incomplete == kSynthIncompleteFixture);
  }
  SUBCASE("progress signal crosses 1 exactly at tau") {
    SynthConfig cfg;
    cfg.n_sequences = 20;
    cfg.noise = 0.0;
    const auto ds = synthesize_dataset(cfg, 2);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& s = ds.sequences[i];
      const auto& a = ds.annotations[i];
      for (int t = 1; t <= s.length(); ++t) {
        CHECK((s.frame(t)[0] >= 1.0f) == (t >= a.tau()));
      }
    }
  }
  SUBCASE("invalid configs") {
    SynthConfig cfg;
    cfg.p_incomplete = 1.5;
    CHECK_THROWS_AS(synthesize_dataset(cfg, 0), ConfigError);
    cfg = {};
    cfg.dim = 1;
    CHECK_THROWS_AS(synthesize_dataset(cfg, 0), ConfigError);
    cfg = {};
    cfg.min_length = 30;
    cfg.max_length = 10;
    CHECK_THROWS_AS(synthesize_dataset(cfg, 0), ConfigError);
  }
}
