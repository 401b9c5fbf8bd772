#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ecg_fixture.hpp"
#include "fog/features.hpp"
#include "fog/pan_tompkins.hpp"
#include "oracles.hpp"

using namespace fog;
using features::FeatureSeries;

namespace {

io::Channel eeg(const std::string& electrode, const Vec& samples,
                Scalar rate = 500.0) {
  io::Channel c;
  c.label = electrode;
  c.kind = io::ChannelKind::EEG;
  c.electrode = electrode;
  c.rate_hz = rate;
  c.samples = samples;
  return c;
}

io::Channel eog_h(const Vec& samples, Scalar rate = 500.0) {
  io::Channel c;
  c.label = "eog_h";
  c.kind = io::ChannelKind::EOG;
  c.axis = "horizontal";
  c.rate_hz = rate;
  c.samples = samples;
  return c;
}

io::Channel accel(const std::string& axis, const Vec& samples,
                  Scalar rate = 500.0) {
  io::Channel c;
  c.label = "acc_lk_" + axis;
  c.kind = io::ChannelKind::ACCEL;
  c.placement = "left_knee";
  c.axis = axis;
  c.rate_hz = rate;
  c.samples = samples;
  return c;
}

Vec sine(Scalar f, Scalar rate, Scalar dur, Scalar amp = 1.0) {
  const Index n = static_cast<Index>(std::llround(dur * rate));
  Vec x(n);
  for (Index i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * oracle::kPi * f * static_cast<Scalar>(i) / rate);
  return x;
}

// Sawtooth nystagmus-like trace: slow ramp across [-amp, amp] then a quick
// reset. Returns the position signal.
Vec sawtooth(Scalar rate, Scalar dur, Scalar slow_s, Scalar quick_s, Scalar amp) {
  const Index n = static_cast<Index>(std::llround(dur * rate));
  const Scalar period = slow_s + quick_s;
  Vec x(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar t = std::fmod(static_cast<Scalar>(i) / rate, period);
    if (t < slow_s)
      x[i] = -amp + 2.0 * amp * t / slow_s;
    else
      x[i] = amp - 2.0 * amp * (t - slow_s) / quick_s;
  }
  return x;
}

}  // namespace

TEST_CASE("theta power of identical electrodes is zero") {
  Rng rng(1);
  Vec s(10000);
  for (Index i = 0; i < s.size(); ++i) s[i] = rng.normal();
  auto fs = features::theta_power(eeg("Fz", s), eeg("Cz", s));
  CHECK(fs.values.abs().maxCoeff() == 0.0);
}

TEST_CASE("theta power picks up a 5.5 Hz difference and not a 20 Hz one") {
  const Scalar rate = 500.0;
  Vec zero = Vec::Zero(static_cast<Index>(30 * rate));
  auto in_band = features::theta_power(eeg("Fz", sine(5.5, rate, 30.0)), eeg("Cz", zero));
  auto out_band = features::theta_power(eeg("Fz", sine(20.0, rate, 30.0)), eeg("Cz", zero));
  const Index n = zero.size();
  const Scalar p_in = in_band.values.segment(n / 4, n / 2).mean();
  const Scalar p_out = out_band.values.segment(n / 4, n / 2).mean();
  CHECK(p_in > 10.0 * p_out);
  // roughly constant across the middle
  const Scalar lo = in_band.values.segment(n / 4, n / 2).minCoeff();
  const Scalar hi = in_band.values.segment(n / 4, n / 2).maxCoeff();
  CHECK(hi - lo < 0.2 * p_in);
}

TEST_CASE("theta power of white noise is near the DFT band estimate") {
  const Scalar rate = 500.0;
  Rng rng(7);
  Vec noise(static_cast<Index>(30 * rate));
  for (Index i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
  Vec zero = Vec::Zero(noise.size());
  auto fs = features::theta_power(eeg("Fz", noise), eeg("Cz", zero));
  CHECK((fs.values > 0.0).all());
  // compare against the band energy of the filtered difference
  Vec filtered = dsp::apply_filter(noise, rate, dsp::FilterSpec::bandpass(0.5, 45.0, 4));
  const double ref = oracle::dft_band_amp2(filtered, rate, 4.0, 7.0);
  const double got = fs.values.mean();
  CHECK(got > ref / 3.0);
  CHECK(got < ref * 3.0);
}

TEST_CASE("slow-phase velocity recovers the sawtooth slope") {
  const Scalar rate = 500.0;
  const Scalar slow_s = 0.85, quick_s = 0.15, amp = 100.0;
  const Scalar v_true = 2.0 * amp / slow_s;
  Vec pos = sawtooth(rate, 60.0, slow_s, quick_s, amp);
  auto res = features::slow_phase_velocity(eog_h(pos), 99);

  std::vector<Scalar> retained;
  for (Index i = 0; i < res.spv.values.size(); ++i)
    if (!is_missing(res.spv.values[i])) retained.push_back(res.spv.values[i]);
  REQUIRE(retained.size() > 1000);
  std::nth_element(retained.begin(), retained.begin() + retained.size() / 2,
                   retained.end());
  const Scalar med = retained[retained.size() / 2];
  CHECK(med == doctest::Approx(v_true).epsilon(0.10));
}

TEST_CASE("slow-phase velocity of a constant trace is ~0 on retained samples") {
  Vec pos = Vec::Constant(4096, 42.0);
  auto res = features::slow_phase_velocity(eog_h(pos), 3);
  for (Index i = 0; i < res.spv.values.size(); ++i)
    if (!is_missing(res.spv.values[i]))
      CHECK(std::abs(res.spv.values[i]) < 1e-6);
}

TEST_CASE("mirrored sawtooth flips SPV exactly") {
  const Scalar rate = 500.0;
  Vec pos = sawtooth(rate, 20.0, 0.85, 0.15, 100.0);
  auto a = features::slow_phase_velocity(eog_h(pos), 123);
  auto b = features::slow_phase_velocity(eog_h(Vec(-pos)), 123);
  REQUIRE(a.spv.values.size() == b.spv.values.size());
  for (Index i = 0; i < a.spv.values.size(); ++i) {
    if (is_missing(a.spv.values[i])) {
      CHECK(is_missing(b.spv.values[i]));
    } else {
      CHECK(b.spv.values[i] == -a.spv.values[i]);
    }
  }
}

TEST_CASE("retained SPV samples equal the central-difference velocity exactly") {
  Vec pos = sawtooth(500.0, 20.0, 0.85, 0.15, 100.0);
  auto res = features::slow_phase_velocity(eog_h(pos), 5);
  for (Index i = 0; i < res.spv.values.size(); ++i)
    if (!is_missing(res.spv.values[i]))
      CHECK(res.spv.values[i] == res.velocity[i]);
}

TEST_CASE("short EOG is rejected") {
  Vec pos = Vec::Zero(512);
  CHECK_THROWS_AS(features::slow_phase_velocity(eog_h(pos), 1), ParamError);
}

TEST_CASE("merge_turn_directions flips only counterclockwise samples") {
  FeatureSeries spv;
  spv.kind = features::FeatureKind::SPV;
  spv.rate_hz = 500.0;
  spv.values = Vec(6);
  spv.values << 1.0, -2.0, kMissing, 4.0, 5.0, -6.0;

  Vec all_cw = Vec::Constant(6, 1.0);
  auto same = features::merge_turn_directions(spv, all_cw);
  for (Index i = 0; i < 6; ++i)
    if (!is_missing(spv.values[i])) CHECK(same.values[i] == spv.values[i]);

  Vec all_ccw = Vec::Constant(6, -1.0);
  auto neg = features::merge_turn_directions(spv, all_ccw);
  for (Index i = 0; i < 6; ++i)
    if (!is_missing(spv.values[i])) CHECK(neg.values[i] == -spv.values[i]);

  Vec blocks(6);
  blocks << 1, 1, -1, -1, 1, -1;
  auto mixed = features::merge_turn_directions(spv, blocks);
  for (Index i = 0; i < 6; ++i) {
    if (is_missing(spv.values[i])) {
      CHECK(is_missing(mixed.values[i]));
    } else {
      CHECK(mixed.values[i] == (blocks[i] < 0 ? -spv.values[i] : spv.values[i]));
    }
  }
}

TEST_CASE("turn direction follows the rolling median sign") {
  const Scalar rate = 500.0;
  const Index n = 8000;
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = i < n / 2 ? 3.0 : -3.0;
  Vec dir = features::turn_direction(v, rate);
  CHECK(dir[n / 4] == 1.0);
  CHECK(dir[3 * n / 4] == -1.0);
}

TEST_CASE("Pan-Tompkins finds nearly all clean R peaks from 40 to 180 bpm") {
  const Scalar rate = 500.0;
  for (double bpm : {40.0, 60.0, 90.0, 120.0, 150.0, 180.0}) {
    auto ecg = ecgfix::make_ecg(rate, 60.0, bpm, 17);
    auto peaks = features::pan_tompkins(ecg.samples, rate);
    int hits = 0;
    for (double rt : ecg.r_times_s) {
      bool found = false;
      for (Index p : peaks)
        if (std::abs(static_cast<double>(p) / rate - rt) < 0.075) {
          found = true;
          break;
        }
      if (found) ++hits;
    }
    const double recall = static_cast<double>(hits) /
                          static_cast<double>(ecg.r_times_s.size());
    INFO("bpm=", bpm, " recall=", recall, " detected=", peaks.size(),
         " truth=", ecg.r_times_s.size());
    CHECK(recall >= 0.99);
  }
}

TEST_CASE("heart rate reads the pacing rate within 1 bpm") {
  const Scalar rate = 500.0;
  auto ecg = ecgfix::make_ecg(rate, 60.0, 60.0, 29, 0.0);
  io::Channel lead;
  lead.label = "ecg_1";
  lead.kind = io::ChannelKind::ECG;
  lead.lead = "I";
  lead.rate_hz = rate;
  lead.samples = ecg.samples;
  io::Channel lead2 = lead, lead3 = lead;
  lead2.label = "ecg_2";
  lead3.label = "ecg_3";
  auto hr = features::heart_rate({&lead, &lead2, &lead3});
  const Index n = hr.values.size();
  Index defined = 0;
  for (Index i = n / 4; i < 3 * n / 4; ++i) {
    if (is_missing(hr.values[i])) continue;
    ++defined;
    CHECK(hr.values[i] == doctest::Approx(60.0).epsilon(1.0 / 60.0));
  }
  CHECK(defined > n / 4);
}

TEST_CASE("per-sample median across leads ignores a flat lead") {
  const Scalar rate = 500.0;
  auto e58 = ecgfix::make_ecg(rate, 40.0, 58.0, 5, 0.0);
  auto e60 = ecgfix::make_ecg(rate, 40.0, 60.0, 6, 0.0);
  auto e90 = ecgfix::make_ecg(rate, 40.0, 90.0, 7, 0.0);
  auto mk = [&](const std::string& label, const Vec& s) {
    io::Channel c;
    c.label = label;
    c.kind = io::ChannelKind::ECG;
    c.lead = label;
    c.rate_hz = rate;
    c.samples = s;
    return c;
  };
  auto l1 = mk("ecg_1", e58.samples);
  auto l2 = mk("ecg_2", e60.samples);
  auto l3 = mk("ecg_3", e90.samples);
  auto hr3 = features::heart_rate({&l1, &l2, &l3});
  const Index n = hr3.values.size();
  // with rates {58, 60, 90} the median is the middle lead
  Index checked = 0;
  for (Index i = n / 4; i < 3 * n / 4; ++i) {
    if (is_missing(hr3.values[i])) continue;
    if (hr3.values[i] == doctest::Approx(60.0).epsilon(0.03)) ++checked;
  }
  CHECK(checked > n / 4);

  auto flat = mk("ecg_flat", Vec::Zero(n));
  auto hr_fl = features::heart_rate({&l2, &l3, &flat});
  // flat lead contributes nothing: median of the two live leads
  Index live = 0;
  for (Index i = n / 4; i < 3 * n / 4; ++i)
    if (!is_missing(hr_fl.values[i])) ++live;
  CHECK(live > n / 3);
}

TEST_CASE("freeze index is large for tremble-band motion, small for locomotion") {
  const Scalar rate = 500.0;
  Vec base = Vec::Constant(static_cast<Index>(30 * rate), 1.0);  // gravity
  Vec zero = Vec::Zero(base.size());

  Vec tremble = base + sine(5.0, rate, 30.0, 0.5);
  auto fi_t = features::freeze_index(accel("x", tremble), accel("y", zero),
                                     accel("z", zero));
  const Index n = base.size();
  CHECK(fi_t.values.segment(n / 4, n / 2).minCoeff() > 10.0);

  Vec loco = base + sine(1.0, rate, 30.0, 0.5);
  auto fi_l = features::freeze_index(accel("x", loco), accel("y", zero),
                                     accel("z", zero));
  CHECK(fi_l.values.segment(n / 4, n / 2).maxCoeff() < 0.1);
}

TEST_CASE("freeze index matches the DFT band-energy ratio within 5%") {
  const Scalar rate = 500.0;
  const Index n = static_cast<Index>(40 * rate);
  Vec x(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar t = static_cast<Scalar>(i) / rate;
    x[i] = 1.0 + 0.3 * std::sin(2.0 * oracle::kPi * 5.0 * t) +
           0.4 * std::sin(2.0 * oracle::kPi * 1.5 * t);
  }
  Vec zero = Vec::Zero(n);
  auto fi = features::freeze_index(accel("x", x), accel("y", zero), accel("z", zero));

  // oracle on the magnitude signal (x is positive, magnitude == x)
  const double pt = oracle::dft_band_amp2(x, rate, 3.0, 8.0);
  const double pl = oracle::dft_band_amp2(x, rate, 0.5, 3.0);
  const double expected = pt / pl;
  const double got = fi.values.segment(n / 4, n / 2).mean();
  CHECK(got == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("freeze index is amplitude invariant") {
  const Scalar rate = 500.0;
  Rng rng(19);
  const Index n = static_cast<Index>(20 * rate);
  Vec x(n), y(n), z(n);
  for (Index i = 0; i < n; ++i) {
    x[i] = 1.0 + 0.1 * rng.normal();
    y[i] = 0.2 * rng.normal();
    z[i] = 0.3 * rng.normal();
  }
  auto a = features::freeze_index(accel("x", x), accel("y", y), accel("z", z));
  auto b = features::freeze_index(accel("x", Vec(2.0 * x)), accel("y", Vec(2.0 * y)),
                                  accel("z", Vec(2.0 * z)));
  for (Index i = 0; i < n; ++i) {
    if (is_missing(a.values[i])) continue;
    CHECK(std::abs(b.values[i] - a.values[i]) <= 1e-9 * std::abs(a.values[i]));
  }
}

TEST_CASE("freeze index saturates when the locomotion band is empty") {
  const Scalar rate = 500.0;
  Vec base = Vec::Constant(static_cast<Index>(20 * rate), 1.0);
  Vec zero = Vec::Zero(base.size());
  Vec pure = base + sine(5.0, rate, 20.0, 0.5);
  auto fi = features::freeze_index(accel("x", pure), accel("y", zero), accel("z", zero));
  bool any_saturated = false;
  for (auto f : fi.flags)
    if (f & FeatureSeries::kSaturated) any_saturated = true;
  CHECK(any_saturated);
  for (Index i = 0; i < fi.values.size(); ++i)
    if (!is_missing(fi.values[i])) CHECK(fi.values[i] >= 0.0);
}

namespace {

io::Channel footswitch(const std::string& foot, int idx, const Vec& samples,
                       Scalar rate = 500.0) {
  io::Channel c;
  c.label = "fsw_" + foot + "_" + std::to_string(idx);
  c.kind = io::ChannelKind::FOOTSWITCH;
  c.foot = foot;
  c.switch_index = idx;
  c.rate_hz = rate;
  c.samples = samples;
  return c;
}

// square contact pattern: high for stance_s out of every stride_s
Vec contact_pattern(Scalar rate, Scalar dur, Scalar stride_s, Scalar stance_s,
                    Scalar phase_s) {
  const Index n = static_cast<Index>(std::llround(dur * rate));
  Vec x(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar t = std::fmod(static_cast<Scalar>(i) / rate + stride_s - phase_s,
                               stride_s);
    x[i] = t < stance_s ? 3.0 : 0.2;
  }
  return x;
}

}  // namespace

TEST_CASE("stride duration reads the gait period") {
  const Scalar rate = 500.0;
  Vec left = contact_pattern(rate, 30.0, 1.2, 0.7, 0.0);
  Vec right = contact_pattern(rate, 30.0, 1.2, 0.7, 0.6);
  auto l0 = footswitch("left", 0, left);
  auto r0 = footswitch("right", 0, right);
  features::KeySwitchSet keys;
  keys.per_foot = {{"left", {0}}, {"right", {0}}};
  std::map<std::string, Scalar> thr = {{l0.label, 1.5}, {r0.label, 1.5}};
  auto sd = features::stride_duration({&l0, &r0}, keys, thr);
  const Index n = left.size();
  for (Index i = n / 4; i < 3 * n / 4; ++i) {
    REQUIRE(!is_missing(sd.values[i]));
    CHECK(sd.values[i] == doctest::Approx(1.2).epsilon(0.01));
  }
}

TEST_CASE("feet planted forever yield an all-missing stride series") {
  const Scalar rate = 500.0;
  Vec on = Vec::Constant(5000, 3.0);
  auto l0 = footswitch("left", 0, on);
  auto r0 = footswitch("right", 0, on);
  features::KeySwitchSet keys;
  keys.per_foot = {{"left", {0}}, {"right", {0}}};
  std::map<std::string, Scalar> thr = {{l0.label, 1.5}, {r0.label, 1.5}};
  auto sd = features::stride_duration({&l0, &r0}, keys, thr);
  CHECK(sd.missing_count() == sd.size());
}

TEST_CASE("a gait pause shows up as a stride spanning the pause") {
  const Scalar rate = 500.0;
  const Scalar dur = 30.0;
  const Index n = static_cast<Index>(dur * rate);
  // strikes every 1.2 s, but a pause between 10 s and 14 s
  Vec left(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar t = static_cast<Scalar>(i) / rate;
    bool stance;
    if (t >= 10.0 && t < 14.0) {
      stance = true;  // planted during the freeze
    } else {
      stance = std::fmod(t, 1.2) < 0.7;
    }
    left[i] = stance ? 3.0 : 0.2;
  }
  auto l0 = footswitch("left", 0, left);
  features::KeySwitchSet keys;
  keys.per_foot = {{"left", {0}}};
  std::map<std::string, Scalar> thr = {{l0.label, 1.5}};
  auto sd = features::stride_duration({&l0}, keys, thr);
  Scalar longest = 0.0;
  for (Index i = 0; i < n; ++i)
    if (!is_missing(sd.values[i])) longest = std::max(longest, sd.values[i]);
  CHECK(longest >= 4.0);
  // and the inflated stride covers the pause itself
  const Index mid = static_cast<Index>(12.0 * rate);
  REQUIRE(!is_missing(sd.values[mid]));
  CHECK(sd.values[mid] >= 4.0);
}

TEST_CASE("key switch set validation") {
  features::KeySwitchSet empty;
  CHECK_THROWS_AS(empty.validate(), ValidationError);
  features::KeySwitchSet no_keys;
  no_keys.per_foot = {{"left", {}}};
  CHECK_THROWS_AS(no_keys.validate(), ValidationError);
}
