#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fog/characterize.hpp"
#include "fog/dsp.hpp"
#include "oracles.hpp"

using namespace fog;
using stats::Segment;
using stats::SegmentGroup;

namespace {

features::FeatureSeries series(const Vec& v, Scalar rate = 100.0) {
  features::FeatureSeries fs;
  fs.kind = features::FeatureKind::SPV;
  fs.name = "spv";
  fs.rate_hz = rate;
  fs.values = v;
  return fs;
}

io::AnnotationTrack fog_track(std::vector<std::pair<Scalar, Scalar>> eps) {
  io::AnnotationTrack t;
  t.rater_id = "truth";
  for (auto [a, b] : eps) t.episodes.push_back({a, b, io::EpisodeLabel::FOG});
  return t;
}

Segment seg(const std::string& subject, SegmentGroup g, const Vec& v) {
  Segment s;
  s.group = g;
  s.feature_name = "f";
  s.subject_id = subject;
  s.rate_hz = 100.0;
  s.pre_s = 10.0;
  s.values = v;
  return s;
}

}  // namespace

TEST_CASE("episodes five seconds apart exclude each other") {
  Vec v = Vec::Zero(120 * 100);
  auto segs = stats::extract_freezing_segments(series(v), fog_track({{40.0, 42.0}, {47.0, 49.0}}), "S");
  CHECK(segs.empty());
}

TEST_CASE("one isolated episode gives one segment at its onset") {
  Vec v = Vec::Zero(120 * 100);
  auto segs = stats::extract_freezing_segments(series(v), fog_track({{60.0, 63.0}}), "S");
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].anchor_s == doctest::Approx(60.0));
  CHECK(segs[0].values.size() == 13 * 100 + 1);
}

TEST_CASE("window clipped by the recording edges is excluded") {
  Vec v = Vec::Zero(120 * 100);
  auto early = stats::extract_freezing_segments(series(v), fog_track({{5.0, 7.0}}), "S");
  CHECK(early.empty());
  auto late = stats::extract_freezing_segments(series(v), fog_track({{118.5, 119.5}}), "S");
  CHECK(late.empty());
}

TEST_CASE("segment extraction matches a brute-force overlap scan") {
  Rng rng(41);
  Vec v = Vec::Zero(300 * 100);
  std::vector<std::pair<Scalar, Scalar>> eps;
  Scalar t = 12.0;
  while (t < 280.0) {
    const Scalar dur = 1.0 + 4.0 * rng.uniform();
    eps.push_back({t, t + dur});
    t += dur + 3.0 + 14.0 * rng.uniform();
  }
  auto ann = fog_track(eps);
  auto segs = stats::extract_freezing_segments(series(v), ann, "S");

  // brute force: window [onset-10, onset+3] free of every other episode and
  // of every other episode's window
  std::size_t expected = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const Scalar lo = eps[i].first - 10.0, hi = eps[i].first + 3.0;
    if (lo < 0.0 || hi > 300.0) continue;
    bool clean = true;
    for (std::size_t j = 0; j < eps.size(); ++j) {
      if (j == i) continue;
      if (eps[j].first < hi && eps[j].second > lo) clean = false;
      const Scalar jlo = eps[j].first - 10.0, jhi = eps[j].first + 3.0;
      if (jlo < hi && jhi > lo) clean = false;
    }
    if (clean) ++expected;
  }
  CHECK(segs.size() == expected);
  CHECK(expected >= 3);  // the construction should produce some
}

TEST_CASE("controls anchor at matching turning phase and avoid FOG") {
  const Scalar rate = 100.0;
  const Index n = 240 * 100;
  // SPV oscillating with an 8 s turning period, with some samples missing
  Vec spv(n);
  Rng rng(3);
  for (Index i = 0; i < n; ++i) {
    const Scalar t = static_cast<Scalar>(i) / rate;
    spv[i] = 50.0 * std::sin(2.0 * oracle::kPi * t / 8.0);
    if (rng.uniform() < 0.1) spv[i] = kMissing;
  }
  Vec phase = stats::turning_phase(spv, rate);

  auto ann = fog_track({{60.0, 62.0}});
  Vec feature_vals = Vec::Zero(n);
  auto fsegs = stats::extract_freezing_segments(series(feature_vals, rate), ann, "S");
  REQUIRE(fsegs.size() == 1);

  auto res = stats::match_control_segments(series(feature_vals, rate), phase,
                                           fsegs, ann);
  REQUIRE(res.controls.size() == 1);
  const auto& c = res.controls[0];
  // phase at the control's relative -10 s matches the freezing segment's
  const Index fstart = static_cast<Index>((60.0 - 10.0) * rate);
  const Index cstart = static_cast<Index>(std::llround((c.anchor_s - 10.0) * rate));
  Scalar d = phase[cstart] - phase[fstart];
  while (d <= -oracle::kPi) d += 2.0 * oracle::kPi;
  while (d > oracle::kPi) d -= 2.0 * oracle::kPi;
  CHECK(std::abs(d) <= 0.1);
  // control window is FOG-free
  const Scalar lo = c.anchor_s - 10.0, hi = c.anchor_s + 3.0;
  CHECK((hi <= 60.0 || lo >= 62.0));
}

TEST_CASE("no controls when FOG covers the whole recording") {
  const Scalar rate = 100.0;
  const Index n = 100 * 100;
  Vec spv(n);
  for (Index i = 0; i < n; ++i)
    spv[i] = std::sin(2.0 * oracle::kPi * static_cast<Scalar>(i) / rate / 8.0);
  Vec phase = stats::turning_phase(spv, rate);
  // one isolated episode, but FOG blankets everything else too
  io::AnnotationTrack ann = fog_track({{0.0, 49.9}, {50.0, 52.0}, {52.1, 100.0}});
  std::vector<Segment> fsegs = {seg("S", SegmentGroup::FREEZING, Vec::Zero(1301))};
  fsegs[0].anchor_s = 50.0;
  fsegs[0].rate_hz = rate;
  auto res = stats::match_control_segments(series(Vec::Zero(n), rate), phase,
                                           fsegs, ann);
  CHECK(res.controls.empty());
  CHECK(res.unmatched.size() == 1);
}

TEST_CASE("control windows never overlap FOG on randomized inputs") {
  Rng rng(77);
  const Scalar rate = 100.0;
  const Index n = 300 * 100;
  Vec spv(n);
  for (Index i = 0; i < n; ++i)
    spv[i] = 40.0 * std::sin(2.0 * oracle::kPi * static_cast<Scalar>(i) / rate / 7.0);
  Vec phase = stats::turning_phase(spv, rate);

  std::vector<std::pair<Scalar, Scalar>> eps;
  Scalar t = 15.0;
  while (t < 270.0) {
    const Scalar dur = 1.0 + 3.0 * rng.uniform();
    eps.push_back({t, t + dur});
    t += dur + 16.0 + 10.0 * rng.uniform();
  }
  auto ann = fog_track(eps);
  auto fsegs = stats::extract_freezing_segments(series(Vec::Zero(n), rate), ann, "S");
  REQUIRE(!fsegs.empty());
  auto res = stats::match_control_segments(series(Vec::Zero(n), rate), phase,
                                           fsegs, ann);
  for (const auto& c : res.controls) {
    const Scalar lo = c.anchor_s - 10.0, hi = c.anchor_s + 3.0;
    for (auto [a, b] : eps) CHECK(!(a < hi && b > lo));
  }
}

TEST_CASE("normalization zeroes constant segments and flags them") {
  std::vector<Segment> segs = {seg("S", SegmentGroup::FREEZING, Vec::Constant(10, 7.0)),
                               seg("S", SegmentGroup::NORMAL_TURNING, Vec::Constant(10, 7.0))};
  auto out = stats::normalize_segments(segs);
  for (const auto& s : out) {
    CHECK(s.constant_flag);
    CHECK(s.values.abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("normalization is invariant to positive affine input transforms") {
  Rng rng(13);
  std::vector<Segment> base;
  for (int i = 0; i < 6; ++i) {
    Vec v(50);
    for (Index j = 0; j < 50; ++j) v[j] = rng.normal() + (i < 3 ? 1.0 : 0.0);
    base.push_back(seg("S", i < 3 ? SegmentGroup::FREEZING : SegmentGroup::NORMAL_TURNING, v));
  }
  std::vector<Segment> scaled = base;
  for (auto& s : scaled) s.values = 3.5 * s.values + 11.0;
  auto a = stats::normalize_segments(base);
  auto b = stats::normalize_segments(scaled);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK((a[i].values - b[i].values).abs().maxCoeff() < 1e-9);
}

TEST_CASE("normalized values pool to mean 0 and sd 1 per subject") {
  Rng rng(21);
  std::vector<Segment> segs;
  for (int i = 0; i < 8; ++i) {
    Vec v(40);
    for (Index j = 0; j < 40; ++j) v[j] = 5.0 * rng.normal() + 2.0;
    if (i == 0) v[3] = kMissing;
    segs.push_back(seg(i < 4 ? "A" : "B",
                       i % 2 ? SegmentGroup::FREEZING : SegmentGroup::NORMAL_TURNING, v));
  }
  auto out = stats::normalize_segments(segs);
  for (const std::string subject : {"A", "B"}) {
    Scalar sum = 0.0, sum2 = 0.0;
    long n = 0;
    for (const auto& s : out) {
      if (s.subject_id != subject) continue;
      for (Index j = 0; j < s.values.size(); ++j) {
        if (is_missing(s.values[j])) continue;
        sum += s.values[j];
        sum2 += s.values[j] * s.values[j];
        ++n;
      }
    }
    const Scalar mean = sum / static_cast<Scalar>(n);
    const Scalar sd = std::sqrt(sum2 / static_cast<Scalar>(n) - mean * mean);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(sd - 1.0) < 1e-9);
  }
}

TEST_CASE("identical groups give p = 1 everywhere") {
  Rng rng(5);
  std::vector<Segment> a, b;
  for (int i = 0; i < 5; ++i) {
    Vec v(30);
    for (Index j = 0; j < 30; ++j) v[j] = rng.normal();
    a.push_back(seg("S", SegmentGroup::FREEZING, v));
    b.push_back(seg("S", SegmentGroup::NORMAL_TURNING, v));
  }
  auto band = stats::pointwise_ttest(a, b);
  for (Index i = 0; i < band.p.size(); ++i) CHECK(band.p[i] == doctest::Approx(1.0));
}

TEST_CASE("well-separated groups give vanishing p") {
  Rng rng(6);
  std::vector<Segment> a, b;
  for (int i = 0; i < 30; ++i) {
    Vec va(20), vb(20);
    for (Index j = 0; j < 20; ++j) {
      va[j] = 1e-3 * rng.normal();
      vb[j] = 5.0 + 1e-3 * rng.normal();
    }
    a.push_back(seg("S", SegmentGroup::FREEZING, va));
    b.push_back(seg("S", SegmentGroup::NORMAL_TURNING, vb));
  }
  auto band = stats::pointwise_ttest(a, b);
  for (Index i = 0; i < band.p.size(); ++i) CHECK(band.p[i] < 1e-6);
}

TEST_CASE("CI half-width equals 1.96/sqrt(n) at unit sample sd") {
  // 100 segments alternating +-sqrt(0.99) have sample sd exactly 1
  std::vector<Segment> a, b;
  const Scalar amp = std::sqrt(0.99);
  for (int i = 0; i < 100; ++i) {
    a.push_back(seg("S", SegmentGroup::FREEZING, Vec::Constant(5, i % 2 ? amp : -amp)));
    b.push_back(seg("S", SegmentGroup::NORMAL_TURNING, Vec::Constant(5, i % 2 ? amp : -amp)));
  }
  auto band = stats::pointwise_ttest(a, b);
  const Scalar half = band.hi_a[0] - band.mean_a[0];
  CHECK(std::abs(half - 1.96 / 10.0) < 1e-6);
}

TEST_CASE("swapping groups preserves p exactly") {
  Rng rng(8);
  std::vector<Segment> a, b;
  for (int i = 0; i < 7; ++i) {
    Vec va(15), vb(15);
    for (Index j = 0; j < 15; ++j) {
      va[j] = rng.normal();
      vb[j] = 0.5 + rng.normal();
    }
    a.push_back(seg("S", SegmentGroup::FREEZING, va));
    b.push_back(seg("S", SegmentGroup::NORMAL_TURNING, vb));
  }
  auto ab = stats::pointwise_ttest(a, b);
  auto ba = stats::pointwise_ttest(b, a);
  for (Index i = 0; i < ab.p.size(); ++i) {
    CHECK(ab.p[i] == ba.p[i]);
    CHECK(ab.mean_a[i] == ba.mean_b[i]);
  }
}

TEST_CASE("non-overlapping CI bands imply p < 0.05") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Segment> a, b;
    const Scalar shift = 0.3 * static_cast<Scalar>(trial % 5);
    for (int i = 0; i < 12; ++i) {
      Vec va(10), vb(10);
      for (Index j = 0; j < 10; ++j) {
        va[j] = rng.normal();
        vb[j] = shift + rng.normal();
      }
      a.push_back(seg("S", SegmentGroup::FREEZING, va));
      b.push_back(seg("S", SegmentGroup::NORMAL_TURNING, vb));
    }
    auto band = stats::pointwise_ttest(a, b);
    for (Index i = 0; i < band.p.size(); ++i) {
      const bool disjoint = band.lo_a[i] > band.hi_b[i] || band.lo_b[i] > band.hi_a[i];
      if (disjoint) CHECK(band.p[i] < 0.05);
    }
  }
}

TEST_CASE("too-few segments are rejected") {
  std::vector<Segment> one = {seg("S", SegmentGroup::FREEZING, Vec::Zero(5))};
  std::vector<Segment> two = {seg("S", SegmentGroup::NORMAL_TURNING, Vec::Zero(5)),
                              seg("S", SegmentGroup::NORMAL_TURNING, Vec::Zero(5))};
  CHECK_THROWS_AS(stats::pointwise_ttest(one, two), ParamError);
  CHECK_THROWS_AS(stats::normalize_segments(one), ParamError);
}

TEST_CASE("Wilcoxon n=6 all positive gives exactly 2/64") {
  std::vector<Scalar> d = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  CHECK(stats::wilcoxon_signed_rank(d) == doctest::Approx(0.03125).epsilon(1e-12));
}

TEST_CASE("Wilcoxon antisymmetric differences give p = 1") {
  std::vector<Scalar> d = {1.0, -1.0, 2.0, -2.0, 3.0, -3.0};
  CHECK(stats::wilcoxon_signed_rank(d) == doctest::Approx(1.0));
}

TEST_CASE("Wilcoxon all-zero convention and small-n error") {
  CHECK(stats::wilcoxon_signed_rank({0.0, 0.0, 0.0}) == 1.0);
  CHECK_THROWS_AS(stats::wilcoxon_signed_rank({1.0, 2.0, 3.0, 4.0}), ParamError);
}

TEST_CASE("Wilcoxon exact path matches full enumeration on random cases") {
  Rng rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Scalar> d;
    const int n = 5 + static_cast<int>(rng.uniform_index(8));
    for (int i = 0; i < n; ++i) {
      Scalar v = std::round(rng.normal() * 4.0) / 2.0;  // induce ties
      if (v == 0.0) v = 0.5;
      d.push_back(v);
    }
    const Scalar got = stats::wilcoxon_signed_rank(d);
    std::vector<double> dd(d.begin(), d.end());
    const double expect = oracle::wilcoxon_exact_enum(dd);
    CHECK(got == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("Wilcoxon normal approximation tracks the exact tail at n=30") {
  // symmetric null: p should be comfortably non-significant
  Rng rng(44);
  std::vector<Scalar> d;
  for (int i = 0; i < 30; ++i) d.push_back(rng.normal());
  const Scalar p = stats::wilcoxon_signed_rank(d);
  CHECK(p > 0.0);
  CHECK(p <= 1.0);

  // and a strongly one-sided case is significant
  std::vector<Scalar> pos;
  for (int i = 0; i < 30; ++i) pos.push_back(1.0 + 0.1 * rng.normal());
  CHECK(stats::wilcoxon_signed_rank(pos) < 1e-4);
}

TEST_CASE("Bonferroni multiplies and caps") {
  auto adj = stats::bonferroni({0.01, 0.5, 0.002}, 5);
  CHECK(adj[0] == doctest::Approx(0.05));
  CHECK(adj[1] == doctest::Approx(1.0));
  CHECK(adj[2] == doctest::Approx(0.01));
  CHECK_THROWS_AS(stats::bonferroni({0.1, 0.2}, 1), ParamError);
}

TEST_CASE("student t p-value sanity") {
  CHECK(stats::student_t_two_sided_p(0.0, 10.0) == doctest::Approx(1.0));
  // t = 2.228 at dof 10 is the classic 0.05 two-sided quantile
  CHECK(stats::student_t_two_sided_p(2.228, 10.0) == doctest::Approx(0.05).epsilon(0.002));
  // large dof approaches the normal tail
  const Scalar p = stats::student_t_two_sided_p(1.96, 1e7);
  CHECK(p == doctest::Approx(0.05).epsilon(0.002));
}
