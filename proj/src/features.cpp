#include "fog/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fog/dsp.hpp"
#include "fog/pan_tompkins.hpp"

namespace fog::features {

const std::array<const char*, kFeatureCount> kFeatureNames = {
    "theta_power",  "spv",          "heart_rate",    "fi_left_knee",
    "fi_right_knee", "fi_left_ankle", "fi_right_ankle", "stride_duration"};

void KeySwitchSet::validate() const {
  if (per_foot.empty()) throw ValidationError("key switch set is empty");
  for (const auto& [foot, switches] : per_foot)
    if (switches.empty())
      throw ValidationError("no key switches for foot " + foot);
}

const FeatureSeries& FeatureSet::get(const std::string& name) const {
  for (const auto& s : series)
    if (s.name == name) return s;
  throw ValidationError("no feature series named " + name);
}

namespace {

void check_aligned(const io::Channel& a, const io::Channel& b) {
  if (a.rate_hz != b.rate_hz || a.samples.size() != b.samples.size())
    throw ValidationError("channels " + a.label + " and " + b.label +
                          " are not aligned");
}

Scalar percentile(const Vec& x, Scalar q) {
  std::vector<Scalar> v(x.data(), x.data() + x.size());
  const auto idx = static_cast<std::size_t>(
      std::llround(q / 100.0 * static_cast<Scalar>(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
  return v[idx];
}

Vec central_difference(const Vec& x, Scalar rate_hz) {
  const Index n = x.size();
  Vec v(n);
  for (Index i = 1; i + 1 < n; ++i) v[i] = (x[i + 1] - x[i - 1]) * rate_hz / 2.0;
  if (n >= 2) {
    v[0] = (x[1] - x[0]) * rate_hz;
    v[n - 1] = (x[n - 1] - x[n - 2]) * rate_hz;
  }
  return v;
}

}  // namespace

FeatureSeries theta_power(const io::Channel& fz, const io::Channel& cz,
                          const FeatureParams& params) {
  if (fz.kind != io::ChannelKind::EEG || cz.kind != io::ChannelKind::EEG)
    throw ValidationError("theta power needs two EEG channels");
  check_aligned(fz, cz);

  Vec diff = fz.samples - cz.samples;
  if (diff.abs().maxCoeff() > 0.0) {
    diff = dsp::apply_filter(diff, fz.rate_hz,
                             dsp::FilterSpec::bandpass(params.eeg_band_lo_hz,
                                                       params.eeg_band_hi_hz, 4));
  }
  FeatureSeries out;
  out.kind = FeatureKind::THETA_POWER;
  out.name = "theta_power";
  out.rate_hz = fz.rate_hz;
  out.values = dsp::morlet_band_power(diff, fz.rate_hz, params.theta_lo_hz,
                                      params.theta_hi_hz, params.morlet_n_freqs,
                                      params.morlet_cycles);
  return out;
}

SlowPhaseResult slow_phase_velocity(const io::Channel& eog_h,
                                    std::uint64_t seed,
                                    const FeatureParams& params) {
  if (eog_h.kind != io::ChannelKind::EOG || eog_h.axis != "horizontal")
    throw ValidationError("slow-phase velocity needs a horizontal EOG channel");
  const Index n = eog_h.samples.size();
  if (n < (Index{1} << params.baseline_level))
    throw ParamError("EOG signal shorter than 2^level samples");

  const Scalar rate = eog_h.rate_hz;
  Vec cleaned = dsp::apply_filter(
      eog_h.samples, rate,
      dsp::FilterSpec::lowpass(params.eog_lowpass_hz, 4));
  cleaned = dsp::median_filter(cleaned, rate, params.eog_median_ms);
  cleaned = dsp::wavelet_baseline_remove(cleaned, params.baseline_level);

  Vec v = central_difference(cleaned, rate);
  Vec a = central_difference(v, rate);

  // clustering features come from a smoothed copy so differentiation noise
  // does not blur the slow/quick structure; reported values stay the raw
  // central-difference velocity
  Vec v_s = dsp::apply_filter(v, rate, dsp::FilterSpec::lowpass(10.0, 4));
  Vec a_s = central_difference(v_s, rate);

  // blink rejection before clustering
  const Scalar blink_thr = percentile(v.abs(), params.blink_percentile);
  std::vector<Index> kept;
  kept.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    if (std::abs(v[i]) <= blink_thr) kept.push_back(i);

  SlowPhaseResult res;
  res.spv.kind = FeatureKind::SPV;
  res.spv.name = "spv";
  res.spv.rate_hz = rate;
  res.spv.values = Vec::Constant(n, kMissing);
  res.velocity = v;
  res.cleaned = cleaned;
  if (kept.size() < 2) return res;

  // 2-means on normalized {|v|, |a|}; the slow phase is the low-|v| cluster.
  // Magnitudes enter on a log scale so the slow/quick speed ratio separates
  // the phases even when gaze slows down wholesale, z-scores are clipped at
  // +-3 so a handful of extreme acceleration spikes at phase transitions
  // cannot out-weigh the velocity structure, and the lowest-inertia solution
  // over several seeded restarts is kept.
  Mat pts(static_cast<Index>(kept.size()), 2);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    pts(static_cast<Index>(r), 0) = std::log1p(std::abs(v_s[kept[r]]));
    pts(static_cast<Index>(r), 1) = std::log1p(std::abs(a_s[kept[r]]));
  }
  for (Index c = 0; c < 2; ++c) {
    const Scalar mean = pts.col(c).mean();
    const Scalar sd = std::sqrt(
        (pts.col(c).array() - mean).square().sum() /
        static_cast<Scalar>(pts.rows()));
    pts.col(c) = ((pts.col(c).array() - mean) / (sd > 0.0 ? sd : 1.0))
                     .cwiseMin(3.0)
                     .cwiseMax(-3.0);
  }
  Rng restart_seeds(seed);
  dsp::KMeansResult km;
  km.inertia = std::numeric_limits<Scalar>::max();
  for (int restart = 0; restart < 8; ++restart) {
    auto trial = dsp::kmeans(pts, 2, restart_seeds.next_u64());
    if (trial.inertia < km.inertia) km = std::move(trial);
  }

  Scalar mean_v[2] = {0.0, 0.0};
  Index count[2] = {0, 0};
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const int c = km.assignment[r];
    mean_v[c] += std::abs(v_s[kept[r]]);
    ++count[c];
  }
  for (int c = 0; c < 2; ++c)
    mean_v[c] = count[c] > 0 ? mean_v[c] / static_cast<Scalar>(count[c])
                             : std::numeric_limits<Scalar>::max();
  const int slow = mean_v[0] <= mean_v[1] ? 0 : 1;

  for (std::size_t r = 0; r < kept.size(); ++r)
    if (km.assignment[r] == slow) res.spv.values[kept[r]] = v[kept[r]];
  return res;
}

Vec turn_direction(const Vec& velocity, Scalar rate_hz, Scalar window_s) {
  const Index n = velocity.size();
  Index w = static_cast<Index>(std::llround(window_s * rate_hz));
  if (w % 2 == 0) ++w;
  const Index h = w / 2;

  Vec dir(n);
  std::multiset<Scalar> win;
  auto median_of = [&]() {
    auto it = win.begin();
    std::advance(it, (static_cast<Index>(win.size()) - 1) / 2);
    return *it;
  };
  Index lo = 0, hi = -1;  // inclusive range currently in `win`
  for (Index i = 0; i < n; ++i) {
    const Index nlo = std::max<Index>(0, i - h);
    const Index nhi = std::min<Index>(n - 1, i + h);
    while (hi < nhi) win.insert(velocity[++hi]);
    while (lo < nlo) win.erase(win.find(velocity[lo++]));
    dir[i] = median_of() >= 0.0 ? 1.0 : -1.0;
  }
  return dir;
}

FeatureSeries merge_turn_directions(const FeatureSeries& spv,
                                    const Vec& direction) {
  if (spv.values.size() != direction.size())
    throw ValidationError("direction series is not aligned with SPV");
  FeatureSeries out = spv;
  for (Index i = 0; i < out.values.size(); ++i)
    if (!is_missing(out.values[i]) && direction[i] < 0.0)
      out.values[i] = -out.values[i];
  return out;
}

namespace {

// Per-lead HR series: 60/RR over the interval each RR measures; NaN before
// the first full interval, after the last peak, over >10 s peakless spans,
// and wherever HR falls outside the physiological (20, 250) bpm range.
Vec lead_heart_rate(const Vec& x, Scalar rate_hz, int baseline_level) {
  const Index n = x.size();
  Vec hr = Vec::Constant(n, kMissing);
  if (x.abs().maxCoeff() == 0.0) return hr;

  Vec cleaned = n >= (Index{1} << baseline_level)
                    ? dsp::wavelet_baseline_remove(x, baseline_level)
                    : x;
  const auto peaks = pan_tompkins(cleaned, rate_hz);
  if (peaks.size() < 2) return hr;

  const Index gap_limit = static_cast<Index>(std::llround(10.0 * rate_hz));
  for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
    const Index a = peaks[k], b = peaks[k + 1];
    if (b - a > gap_limit) continue;
    const Scalar bpm = 60.0 * rate_hz / static_cast<Scalar>(b - a);
    if (bpm <= 20.0 || bpm >= 250.0) continue;
    for (Index i = a; i < b; ++i) hr[i] = bpm;
  }
  return hr;
}

}  // namespace

FeatureSeries heart_rate(const std::vector<const io::Channel*>& leads,
                         const FeatureParams& params) {
  if (leads.empty()) throw ValidationError("heart rate needs at least one lead");
  const Scalar rate = leads[0]->rate_hz;
  const Index n = leads[0]->samples.size();
  for (const auto* l : leads) check_aligned(*leads[0], *l);

  std::vector<Vec> per_lead;
  per_lead.reserve(leads.size());
  for (const auto* l : leads)
    per_lead.push_back(lead_heart_rate(l->samples, rate, params.baseline_level));

  FeatureSeries out;
  out.kind = FeatureKind::HEART_RATE;
  out.name = "heart_rate";
  out.rate_hz = rate;
  out.values = Vec::Constant(n, kMissing);
  std::vector<Scalar> vals;
  for (Index i = 0; i < n; ++i) {
    vals.clear();
    for (const auto& hr : per_lead)
      if (!is_missing(hr[i])) vals.push_back(hr[i]);
    if (vals.empty()) continue;
    std::sort(vals.begin(), vals.end());
    const std::size_t m = vals.size();
    out.values[i] = m % 2 == 1 ? vals[m / 2]
                               : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
  }
  return out;
}

FeatureSeries freeze_index(const io::Channel& x, const io::Channel& y,
                           const io::Channel& z, const FeatureParams& params) {
  for (const auto* c : {&x, &y, &z})
    if (c->kind != io::ChannelKind::ACCEL)
      throw ValidationError("freeze index needs accelerometer channels");
  check_aligned(x, y);
  check_aligned(x, z);
  if (x.placement != y.placement || x.placement != z.placement)
    throw ValidationError("freeze index axes must share one placement");

  const Scalar rate = x.rate_hz;
  const Index n = x.samples.size();
  const Vec mag =
      (x.samples.square() + y.samples.square() + z.samples.square()).sqrt();

  const Vec tremble = dsp::morlet_band_power(
      mag, rate, params.fi_tremble_lo_hz, params.fi_tremble_hi_hz,
      params.morlet_n_freqs, params.morlet_cycles);
  const Vec loco = dsp::morlet_band_power(mag, rate, params.fi_loco_lo_hz,
                                          params.fi_loco_hi_hz,
                                          params.morlet_n_freqs,
                                          params.morlet_cycles);

  // prefix sums for O(1) centered-window means
  Vec cum_t(n + 1), cum_l(n + 1);
  cum_t[0] = cum_l[0] = 0.0;
  for (Index i = 0; i < n; ++i) {
    cum_t[i + 1] = cum_t[i] + tremble[i];
    cum_l[i + 1] = cum_l[i] + loco[i];
  }

  const Index halfw =
      static_cast<Index>(std::llround(params.fi_window_s / 2.0 * rate));
  FeatureSeries out;
  out.kind = FeatureKind::FREEZE_INDEX;
  out.name = "fi_" + x.placement;
  out.rate_hz = rate;
  out.values = Vec::Constant(n, kMissing);
  out.flags.assign(static_cast<std::size_t>(n), 0);

  for (Index i = halfw; i + halfw < n; ++i) {
    const Index lo = i - halfw, hi = i + halfw + 1;
    const Scalar pt = cum_t[hi] - cum_t[lo];
    const Scalar pl = cum_l[hi] - cum_l[lo];
    const Scalar total = pt + pl;
    if (total <= 0.0) continue;  // true silence: undefined
    const Scalar floor = 1e-6 * total;
    if (pl < floor) {
      out.values[i] = pt / floor;
      out.flags[static_cast<std::size_t>(i)] |= FeatureSeries::kSaturated;
    } else {
      out.values[i] = pt / pl;
    }
  }
  return out;
}

FeatureSeries stride_duration(const std::vector<const io::Channel*>& switches,
                              const KeySwitchSet& keys,
                              const std::map<std::string, Scalar>& thresholds_v) {
  keys.validate();
  if (switches.empty()) throw ValidationError("no footswitch channels");
  const Scalar rate = switches[0]->rate_hz;
  const Index n = switches[0]->samples.size();
  for (const auto* s : switches) check_aligned(*switches[0], *s);

  FeatureSeries out;
  out.kind = FeatureKind::STRIDE_DURATION;
  out.name = "stride_duration";
  out.rate_hz = rate;
  out.values = Vec::Constant(n, kMissing);

  Vec sum = Vec::Zero(n);
  IntVec cnt = IntVec::Zero(n);
  for (const auto& [foot, key_idx] : keys.per_foot) {
    // contact = any key switch above its threshold
    std::vector<const io::Channel*> foot_switches;
    for (const auto* s : switches)
      if (s->foot == foot &&
          std::find(key_idx.begin(), key_idx.end(), s->switch_index) !=
              key_idx.end())
        foot_switches.push_back(s);
    if (foot_switches.empty())
      throw ValidationError("no switch channels for foot " + foot);

    std::vector<Scalar> thr;
    for (const auto* s : foot_switches) {
      const auto it = thresholds_v.find(s->label);
      if (it == thresholds_v.end())
        throw ValidationError("no voltage threshold for switch " + s->label);
      thr.push_back(it->second);
    }

    std::vector<Index> strikes;
    bool prev = false;
    for (Index i = 0; i < n; ++i) {
      bool contact = false;
      for (std::size_t k = 0; k < foot_switches.size(); ++k)
        if (foot_switches[k]->samples[i] > thr[k]) { contact = true; break; }
      if (contact && !prev && i > 0) strikes.push_back(i);
      prev = contact;
    }

    for (std::size_t k = 0; k + 1 < strikes.size(); ++k) {
      const Scalar dur =
          static_cast<Scalar>(strikes[k + 1] - strikes[k]) / rate;
      for (Index i = strikes[k]; i < strikes[k + 1]; ++i) {
        sum[i] += dur;
        cnt[i] += 1;
      }
    }
  }
  for (Index i = 0; i < n; ++i)
    if (cnt[i] > 0) out.values[i] = sum[i] / static_cast<Scalar>(cnt[i]);
  return out;
}

// ---------------------------------------------------------------------------

FeatureSet extract_all(const io::Recording& rec, const GaitConfig& gait,
                       const FeatureParams& params, std::uint64_t seed) {
  const io::Channel *fz = nullptr, *cz = nullptr, *eog = nullptr;
  std::vector<const io::Channel*> ecg, fsw;
  std::map<std::string, std::array<const io::Channel*, 3>> accel;
  for (const auto& c : rec.channels) {
    switch (c.kind) {
      case io::ChannelKind::EEG:
        if (c.electrode == "Fz") fz = &c;
        if (c.electrode == "Cz") cz = &c;
        break;
      case io::ChannelKind::EOG:
        if (c.axis == "horizontal") eog = &c;
        break;
      case io::ChannelKind::ECG: ecg.push_back(&c); break;
      case io::ChannelKind::FOOTSWITCH: fsw.push_back(&c); break;
      case io::ChannelKind::ACCEL: {
        auto& trio = accel[c.placement];
        if (c.axis == "x") trio[0] = &c;
        else if (c.axis == "y") trio[1] = &c;
        else if (c.axis == "z") trio[2] = &c;
        break;
      }
    }
  }
  if (!fz || !cz) throw ValidationError("recording lacks Fz/Cz EEG channels");
  if (!eog) throw ValidationError("recording lacks a horizontal EOG channel");
  if (ecg.empty()) throw ValidationError("recording lacks ECG leads");
  if (fsw.empty()) throw ValidationError("recording lacks footswitch channels");

  FeatureSet fs;
  fs.subject_id = rec.subject_id;
  fs.rate_hz = fz->rate_hz;

  fs.series.push_back(theta_power(*fz, *cz, params));

  auto sp = slow_phase_velocity(*eog, seed, params);
  fs.turn_direction = turn_direction(sp.velocity, eog->rate_hz);
  fs.spv_unmerged = sp.spv.values;
  fs.series.push_back(merge_turn_directions(sp.spv, fs.turn_direction));

  fs.series.push_back(heart_rate(ecg, params));

  for (const char* placement :
       {"left_knee", "right_knee", "left_ankle", "right_ankle"}) {
    const auto it = accel.find(placement);
    if (it == accel.end() || !it->second[0] || !it->second[1] || !it->second[2])
      throw ValidationError(std::string("recording lacks accelerometer trio at ") +
                            placement);
    fs.series.push_back(
        freeze_index(*it->second[0], *it->second[1], *it->second[2], params));
  }

  fs.series.push_back(stride_duration(fsw, gait.keys, gait.thresholds_v));

  for (std::size_t i = 0; i < kFeatureCount; ++i)
    if (fs.series[i].name != kFeatureNames[i])
      throw ValidationError("feature order mismatch: " + fs.series[i].name);
  for (const auto& s : fs.series)
    if (s.size() != fs.n_samples())
      throw ValidationError("feature series " + s.name +
                            " is not aligned with the recording clock");
  return fs;
}

// ---------------------------------------------------------------------------
// Feature CSV artifacts

namespace {

std::string format_full(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

FeatureKind kind_for(const std::string& name) {
  if (name == "theta_power") return FeatureKind::THETA_POWER;
  if (name == "spv") return FeatureKind::SPV;
  if (name == "heart_rate") return FeatureKind::HEART_RATE;
  if (name.rfind("fi_", 0) == 0) return FeatureKind::FREEZE_INDEX;
  if (name == "stride_duration") return FeatureKind::STRIDE_DURATION;
  throw FormatError("unknown feature column " + name);
}

}  // namespace

void write_feature_set(const FeatureSet& fs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "# subject=" << fs.subject_id << " rate_hz=" << format_full(fs.rate_hz)
      << "\n";
  out << "time_s";
  for (const auto& s : fs.series) out << "," << s.name;
  out << ",turn_direction,spv_unmerged\n";
  const Index n = fs.n_samples();
  for (Index i = 0; i < n; ++i) {
    out << format_full(static_cast<Scalar>(i) / fs.rate_hz);
    for (const auto& s : fs.series) {
      out << ",";
      if (!is_missing(s.values[i])) out << format_full(s.values[i]);
    }
    out << "," << format_full(fs.turn_direction[i]) << ",";
    if (!is_missing(fs.spv_unmerged[i])) out << format_full(fs.spv_unmerged[i]);
    out << "\n";
  }
}

FeatureSet load_feature_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# subject=", 0) != 0)
    throw FormatError(path.string() + ": missing subject header");

  FeatureSet fs;
  {
    std::stringstream ss(line.substr(2));
    std::string tok;
    while (ss >> tok) {
      const auto eq = tok.find('=');
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "subject") fs.subject_id = val;
      else if (key == "rate_hz") fs.rate_hz = std::strtod(val.c_str(), nullptr);
    }
  }
  if (!std::getline(in, line)) throw FormatError(path.string() + ": truncated");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
  }
  if (cols.size() < 4 || cols[0] != "time_s" ||
      cols[cols.size() - 2] != "turn_direction" ||
      cols.back() != "spv_unmerged")
    throw FormatError(path.string() + ": unexpected feature columns");

  const std::size_t n_feat = cols.size() - 3;
  std::vector<std::vector<Scalar>> data(n_feat + 2);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t start = 0, col = 0;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      const std::size_t end = comma == std::string::npos ? line.size() : comma;
      if (col > 0) {
        const std::size_t ci = col - 1;
        if (ci >= data.size())
          throw FormatError(path.string() + ": too many cells");
        if (end > start)
          data[ci].push_back(std::strtod(line.substr(start, end - start).c_str(), nullptr));
        else
          data[ci].push_back(kMissing);
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
      ++col;
    }
  }

  for (std::size_t f = 0; f < n_feat; ++f) {
    FeatureSeries s;
    s.name = cols[f + 1];
    s.kind = kind_for(s.name);
    s.rate_hz = fs.rate_hz;
    s.values = Eigen::Map<const Vec>(data[f].data(),
                                     static_cast<Index>(data[f].size()));
    fs.series.push_back(std::move(s));
  }
  fs.turn_direction = Eigen::Map<const Vec>(
      data[n_feat].data(), static_cast<Index>(data[n_feat].size()));
  fs.spv_unmerged = Eigen::Map<const Vec>(
      data[n_feat + 1].data(), static_cast<Index>(data[n_feat + 1].size()));
  return fs;
}

}  // namespace fog::features
