#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fog/dsp.hpp"
#include "oracles.hpp"

using namespace fog;
using dsp::FilterPhase;
using dsp::FilterSpec;

namespace {

Vec sine(Scalar f, Scalar rate, Scalar dur, Scalar amp = 1.0, Scalar phase = 0.0) {
  const Index n = static_cast<Index>(std::llround(dur * rate));
  Vec x(n);
  for (Index i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * oracle::kPi * f * static_cast<Scalar>(i) / rate + phase);
  return x;
}

}  // namespace

TEST_CASE("bandpass rejects DC") {
  const Scalar rate = 500.0;
  Vec x = Vec::Constant(5000, 3.7);
  Vec y = dsp::apply_filter(x, rate, FilterSpec::bandpass(0.5, 45.0, 4));
  CHECK(y.abs().maxCoeff() < 1e-3 * 3.7);
}

TEST_CASE("lowpass passes in-band sine within 2% with zero phase") {
  const Scalar rate = 500.0;
  Vec x = sine(10.0, rate, 20.0);
  Vec y = dsp::apply_filter(x, rate, FilterSpec::lowpass(30.0, 4));
  const Index n = x.size();
  const double amp = oracle::projected_amplitude(y, rate, 10.0, n / 10, 9 * n / 10);
  CHECK(amp == doctest::Approx(1.0).epsilon(0.02));
  // zero group delay: residual against the input is small in the middle
  const double resid = (y.segment(n / 10, 8 * n / 10) - x.segment(n / 10, 8 * n / 10))
                           .abs()
                           .maxCoeff();
  CHECK(resid < 0.02);
}

TEST_CASE("lowpass attenuates 100 Hz by at least 20 dB (causal order 4)") {
  const Scalar rate = 500.0;
  Vec x = sine(100.0, rate, 10.0);
  Vec y = dsp::apply_filter(x, rate, FilterSpec::lowpass(30.0, 4, FilterPhase::causal));
  const Index n = x.size();
  const double amp = oracle::projected_amplitude(y, rate, 100.0, n / 4, n);
  CHECK(amp < 0.1);  // -20 dB
}

TEST_CASE("corner at or above Nyquist is rejected") {
  Vec x = Vec::Zero(1000);
  CHECK_THROWS_AS(dsp::apply_filter(x, 500.0, FilterSpec::lowpass(250.0, 4)), ParamError);
  CHECK_THROWS_AS(dsp::apply_filter(x, 500.0, FilterSpec::bandpass(0.5, 300.0, 4)), ParamError);
}

TEST_CASE("zero-phase filtering is idempotent on in-band sinusoids") {
  const Scalar rate = 500.0;
  Vec x = sine(10.0, rate, 20.0);
  const auto spec = FilterSpec::lowpass(30.0, 4);
  Vec once = dsp::apply_filter(x, rate, spec);
  Vec twice = dsp::apply_filter(once, rate, spec);
  const Index n = x.size();
  const double a1 = oracle::projected_amplitude(once, rate, 10.0, n / 10, 9 * n / 10);
  const double a2 = oracle::projected_amplitude(twice, rate, 10.0, n / 10, 9 * n / 10);
  CHECK(std::abs(a2 - a1) / a1 < 0.01);
}

TEST_CASE("causal filter class matches batch causal run") {
  const Scalar rate = 500.0;
  Rng rng(7);
  Vec x(4000);
  for (Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
  const auto spec = FilterSpec::bandpass(0.5, 45.0, 4, FilterPhase::causal);
  Vec batch = dsp::apply_filter(x, rate, spec);
  dsp::CausalFilter g(spec, rate);
  Vec inc(x.size());
  for (Index i = 0; i < x.size(); ++i) inc[i] = g.push(x[i]);
  CHECK((batch - inc).abs().maxCoeff() == 0.0);
}

TEST_CASE("median filter leaves constants unchanged") {
  Vec x = Vec::Constant(300, 2.5);
  Vec y = dsp::median_filter(x, 500.0, 50.0);
  CHECK((y - x).abs().maxCoeff() == 0.0);
}

TEST_CASE("median filter removes an isolated spike") {
  Vec x = Vec::Constant(500, 1.0);
  x[250] = 80.0;
  Vec y = dsp::median_filter(x, 500.0, 50.0);
  CHECK(y.maxCoeff() == 1.0);
}

TEST_CASE("median filter equals brute-force sliding sort") {
  Rng rng(11);
  Vec x(400);
  for (Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
  Vec y = dsp::median_filter(x, 500.0, 50.0);  // 25-sample window
  Vec ref = oracle::brute_median_filter(x, 12);
  CHECK((y - ref).abs().maxCoeff() == 0.0);
}

TEST_CASE("causal median matches trailing-window brute force") {
  Rng rng(13);
  const int w = 25;
  dsp::CausalMedian cm(w);
  std::vector<Scalar> hist;
  for (int i = 0; i < 300; ++i) {
    const Scalar v = rng.normal();
    hist.push_back(v);
    const Scalar got = cm.push(v);
    const int lo = std::max(0, i - w + 1);
    std::vector<Scalar> win(hist.begin() + lo, hist.end());
    std::sort(win.begin(), win.end());
    CHECK(got == win[(win.size() - 1) / 2]);
  }
}

TEST_CASE("wavelet baseline removal strips a slow ramp") {
  const Scalar rate = 500.0;
  const Index n = static_cast<Index>(60.0 * rate);
  Vec x(n);
  for (Index i = 0; i < n; ++i) x[i] = static_cast<Scalar>(i) / static_cast<Scalar>(n);
  Vec r = dsp::wavelet_baseline_remove(x, 10);
  const double in_power = x.square().mean();
  const double out_power = r.square().mean();
  CHECK(out_power < 0.01 * in_power);
}

TEST_CASE("wavelet baseline removal of zero is zero") {
  Vec x = Vec::Zero(4096);
  Vec r = dsp::wavelet_baseline_remove(x, 10);
  CHECK(r.abs().maxCoeff() == 0.0);
}

TEST_CASE("wavelet baseline removal keeps a 5 Hz component on a ramp") {
  const Scalar rate = 500.0;
  const Index n = static_cast<Index>(60.0 * rate);
  Vec ramp(n);
  for (Index i = 0; i < n; ++i) ramp[i] = 4.0 * static_cast<Scalar>(i) / static_cast<Scalar>(n);
  Vec x = ramp + sine(5.0, rate, 60.0);
  Vec r = dsp::wavelet_baseline_remove(x, 10);
  const double amp = oracle::projected_amplitude(r, rate, 5.0, n / 10, 9 * n / 10);
  CHECK(amp == doctest::Approx(1.0).epsilon(0.05));
  // ramp gone: residual after removing the sine has little power
  Vec leftover = r - sine(5.0, rate, 60.0);
  CHECK(leftover.segment(n / 10, 8 * n / 10).square().mean() < 0.01 * ramp.square().mean());
}

TEST_CASE("wavelet baseline rejects too-short signals") {
  Vec x = Vec::Zero(512);
  CHECK_THROWS_AS(dsp::wavelet_baseline_remove(x, 10), ParamError);
}

TEST_CASE("morlet band power separates bands") {
  const Scalar rate = 500.0;
  Vec x = sine(5.0, rate, 30.0);
  Vec tremble = dsp::morlet_band_power(x, rate, 3.0, 8.0);
  Vec loco = dsp::morlet_band_power(x, rate, 0.5, 3.0);
  const Index n = x.size();
  const double pt = tremble.segment(n / 4, n / 2).mean();
  const double pl = loco.segment(n / 4, n / 2).mean();
  CHECK(pt > 20.0 * pl);

  Vec x1 = sine(1.0, rate, 30.0);
  Vec theta = dsp::morlet_band_power(x1, rate, 4.0, 7.0);
  Vec low = dsp::morlet_band_power(x1, rate, 0.5, 3.0);
  CHECK(theta.segment(n / 4, n / 2).mean() < 0.05 * low.segment(n / 4, n / 2).mean());
}

TEST_CASE("morlet band power of zero signal is zero") {
  Vec x = Vec::Zero(5000);
  Vec p = dsp::morlet_band_power(x, 500.0, 3.0, 8.0);
  CHECK(p.abs().maxCoeff() == 0.0);
}

TEST_CASE("morlet band power is scale equivariant") {
  const Scalar rate = 500.0;
  Rng rng(3);
  Vec x(8000);
  for (Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
  Vec p1 = dsp::morlet_band_power(x, rate, 3.0, 8.0);
  Vec p3 = dsp::morlet_band_power(Vec(3.0 * x), rate, 3.0, 8.0);
  CHECK(((p3 - 9.0 * p1).abs() / (p1.abs() + 1e-300)).maxCoeff() < 1e-9);
}

TEST_CASE("morlet band power reads ~1 for a unit in-band sinusoid") {
  const Scalar rate = 500.0;
  for (Scalar f : {4.0, 4.8, 5.5, 6.0}) {
    Vec x = sine(f, rate, 30.0);
    Vec p = dsp::morlet_band_power(x, rate, 3.0, 8.0);
    const Index n = x.size();
    const double mid = p.segment(n / 4, n / 2).mean();
    CHECK(mid == doctest::Approx(1.0).epsilon(0.04));
  }
}

TEST_CASE("morlet band power rejects bad bands") {
  Vec x = Vec::Zero(5000);
  CHECK_THROWS_AS(dsp::morlet_band_power(x, 500.0, 3.0, 300.0), ParamError);
  CHECK_THROWS_AS(dsp::morlet_band_power(x, 500.0, -1.0, 8.0), ParamError);
}

TEST_CASE("hilbert phase advances at 2*pi*f") {
  const Scalar rate = 500.0;
  const Scalar f = 0.25;
  const Index n = static_cast<Index>(60.0 * rate);
  Vec x(n);
  for (Index i = 0; i < n; ++i)
    x[i] = std::cos(2.0 * oracle::kPi * f * static_cast<Scalar>(i) / rate);
  Vec ph = dsp::unwrap_phase(dsp::hilbert_phase(x));
  const double slope = oracle::fitted_slope(ph, rate, n / 10, 9 * n / 10);
  CHECK(slope == doctest::Approx(2.0 * oracle::kPi * f).epsilon(0.01));
}

TEST_CASE("hilbert phase of sin lags cos by pi/2") {
  const Scalar rate = 500.0;
  const Scalar f = 1.0;
  const Index n = 30000;
  Vec c(n), s(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar t = static_cast<Scalar>(i) / rate;
    c[i] = std::cos(2.0 * oracle::kPi * f * t);
    s[i] = std::sin(2.0 * oracle::kPi * f * t);
  }
  Vec pc = dsp::hilbert_phase(c);
  Vec ps = dsp::hilbert_phase(s);
  for (Index i = n / 10; i < 9 * n / 10; i += 97) {
    Scalar d = pc[i] - ps[i];
    while (d <= -oracle::kPi) d += 2.0 * oracle::kPi;
    while (d > oracle::kPi) d -= 2.0 * oracle::kPi;
    CHECK(std::abs(d - oracle::kPi / 2.0) < 0.02);
  }
}

TEST_CASE("hilbert phase rejects zero signal and is amplitude invariant") {
  Vec z = Vec::Zero(100);
  CHECK_THROWS_AS(dsp::hilbert_phase(z), ParamError);

  Vec x = sine(2.0, 500.0, 4.0);
  Vec p1 = dsp::hilbert_phase(x);
  Vec p2 = dsp::hilbert_phase(Vec(2.0 * x));
  CHECK((p1 - p2).abs().maxCoeff() < 1e-9);
}

TEST_CASE("kmeans separates well-spaced blobs") {
  Rng rng(21);
  const Index n = 200;
  Mat pts(2 * n, 2);
  for (Index i = 0; i < n; ++i) {
    pts(i, 0) = rng.normal();
    pts(i, 1) = rng.normal();
    pts(n + i, 0) = 20.0 + rng.normal();
    pts(n + i, 1) = 20.0 + rng.normal();
  }
  auto res = dsp::kmeans(pts, 2, 5);
  const int first = res.assignment[0];
  for (Index i = 0; i < n; ++i) {
    CHECK(res.assignment[static_cast<size_t>(i)] == first);
    CHECK(res.assignment[static_cast<size_t>(n + i)] == 1 - first);
  }
  // inertia non-increasing across Lloyd iterations
  for (size_t i = 1; i < res.inertia_history.size(); ++i)
    CHECK(res.inertia_history[i] <= res.inertia_history[i - 1] + 1e-9);
}

TEST_CASE("kmeans with k=1 returns the mean") {
  Mat pts(4, 2);
  pts << 0, 0, 2, 0, 0, 2, 2, 2;
  auto res = dsp::kmeans(pts, 1, 9);
  CHECK(res.centroids(0, 0) == doctest::Approx(1.0));
  CHECK(res.centroids(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("kmeans on duplicate points repairs the empty cluster") {
  Mat pts = Mat::Constant(6, 2, 4.0);
  auto res = dsp::kmeans(pts, 2, 17);
  CHECK(res.inertia == 0.0);
  CHECK(res.empty_repairs >= 1);
}

TEST_CASE("kmeans is deterministic and validates k") {
  Rng rng(5);
  Mat pts(30, 3);
  for (Index i = 0; i < pts.rows(); ++i)
    for (Index j = 0; j < 3; ++j) pts(i, j) = rng.normal();
  auto a = dsp::kmeans(pts, 3, 123);
  auto b = dsp::kmeans(pts, 3, 123);
  CHECK(a.assignment == b.assignment);
  CHECK((a.centroids - b.centroids).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(dsp::kmeans(pts, 31, 1), ParamError);
}
