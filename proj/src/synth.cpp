#include "fog/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fog::synth {

namespace {

constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
constexpr Scalar kEegRate = 500.0;
constexpr Scalar kPortiRate = 512.0;

struct Schedule {
  std::vector<io::Episode> fog;
  std::vector<io::Episode> other;

  bool in_fog(Scalar t) const {
    for (const auto& e : fog)
      if (t >= e.onset_s && t < e.offset_s) return true;
    return false;
  }
  bool in_other(Scalar t) const {
    for (const auto& e : other)
      if (t >= e.onset_s && t < e.offset_s) return true;
    return false;
  }
};

Scalar snap(Scalar t, Scalar rate) {
  return std::round(t * rate) / rate;
}

Schedule schedule_episodes(const SynthConfig& cfg, Rng& rng) {
  Schedule sch;
  if (cfg.fog_rate_per_min <= 0.0) return sch;

  const Scalar lead_in = 16.0;
  const Scalar lead_out = 6.0;
  const Scalar mean_gap =
      std::max(14.0, 60.0 / cfg.fog_rate_per_min -
                         cfg.fog_duration.median_s);
  const Scalar min_gap = 14.0;  // keeps neighboring [-10,+3] windows apart

  Scalar t = lead_in + rng.exponential(2.0);
  while (true) {
    Scalar dur = cfg.fog_duration.median_s *
                 std::exp(cfg.fog_duration.log_sigma * rng.normal());
    dur = std::clamp(dur, cfg.fog_duration.min_s, cfg.fog_duration.max_s);
    if (t + dur + lead_out > cfg.task_duration_s) break;
    io::Episode e;
    e.onset_s = snap(t, kEegRate);
    e.offset_s = snap(t + dur, kEegRate);
    e.label = io::EpisodeLabel::FOG;
    sch.fog.push_back(e);
    t = e.offset_s + min_gap + rng.exponential(std::max(1.0, mean_gap - min_gap));
  }
  if (sch.fog.empty())
    throw ParamError("infeasible episode density: no FOG episode fits the task");

  // brief non-FOG stops in the gaps between episodes
  if (cfg.other_stops_per_min > 0.0) {
    const int wanted = std::max(
        1, static_cast<int>(cfg.other_stops_per_min * cfg.task_duration_s / 60.0));
    int placed = 0;
    for (int attempt = 0; attempt < 50 && placed < wanted; ++attempt) {
      const Scalar onset = snap(
          lead_in + rng.uniform() * (cfg.task_duration_s - lead_in - 8.0),
          kEegRate);
      const Scalar dur = snap(1.0 + rng.uniform(), kEegRate);
      bool clean = true;
      for (const auto& e : sch.fog)
        if (e.onset_s - 8.0 < onset + dur && e.offset_s + 8.0 > onset)
          clean = false;
      for (const auto& e : sch.other)
        if (e.onset_s - 2.0 < onset + dur && e.offset_s + 2.0 > onset)
          clean = false;
      if (!clean) continue;
      sch.other.push_back({onset, onset + dur, io::EpisodeLabel::OTHER_STOP});
      ++placed;
    }
  }
  return sch;
}

// Eye slow-phase speed multiplier: ramps down over the lead window, stays at
// the floor during the episode, recovers instantly at offset.
Scalar spv_envelope(const SynthConfig& cfg, const Schedule& sch, Scalar t) {
  for (const auto& e : sch.fog) {
    if (t >= e.onset_s && t < e.offset_s) return cfg.spv_slowdown_floor;
    const Scalar lead_start = e.onset_s - cfg.spv_slowdown_lead_s;
    if (t >= lead_start && t < e.onset_s) {
      const Scalar u = (t - lead_start) / cfg.spv_slowdown_lead_s;
      return 1.0 - (1.0 - cfg.spv_slowdown_floor) * u;
    }
  }
  return 1.0;
}

Scalar turn_sign(const SynthConfig& cfg, Scalar t) {
  return std::fmod(t, cfg.turn_period_s) < cfg.turn_period_s / 2.0 ? 1.0 : -1.0;
}

// Strike times for one foot; the stride period inflates during FOG and
// doubles across a non-FOG stop.
std::vector<Scalar> strike_times(const SynthConfig& cfg, const Schedule& sch,
                                 Scalar phase, Rng& rng) {
  std::vector<Scalar> strikes;
  const Scalar base = 1.2;
  Scalar t = phase;
  while (t < cfg.task_duration_s) {
    strikes.push_back(snap(t, kPortiRate));
    Scalar period = base * (1.0 + 0.01 * rng.normal());
    if (sch.in_fog(t)) period = base * cfg.stride_inflation;
    else if (sch.in_other(t)) period = base * 2.0;
    t += std::max(0.4, period);
  }
  return strikes;
}

io::Channel make_channel(const std::string& label, io::ChannelKind kind,
                         Scalar rate, Index n) {
  io::Channel c;
  c.label = label;
  c.kind = kind;
  c.rate_hz = rate;
  c.samples = Vec::Zero(n);
  return c;
}

io::AnnotationTrack jitter_track(const io::AnnotationTrack& truth, Rng& rng,
                                 const std::string& rater, Scalar sigma_s) {
  io::AnnotationTrack t;
  t.rater_id = rater;
  Scalar prev_end = -1.0;
  for (const auto& e : truth.episodes) {
    io::Episode j = e;
    j.onset_s = std::max(prev_end + 0.05, e.onset_s + sigma_s * rng.normal());
    j.offset_s = std::max(j.onset_s + 0.2, e.offset_s + sigma_s * rng.normal());
    prev_end = j.offset_s;
    t.episodes.push_back(j);
  }
  return t;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_subjects < 1) throw ParamError("n_subjects must be >= 1");
  if (!(task_duration_s > 30.0))
    throw ParamError("task_duration_s must exceed 30 s");
  if (!(turn_period_s > 0.5)) throw ParamError("turn_period_s too small");
  if (fog_rate_per_min < 0.0) throw ParamError("fog_rate_per_min negative");
  const auto& d = fog_duration;
  if (!(d.min_s > 0.0 && d.min_s <= d.median_s && d.median_s <= d.max_s))
    throw ParamError("episode duration distribution must have min <= median <= max");
  if (!(fi_drop >= 0.0 && fi_drop <= 1.0)) throw ParamError("fi_drop in [0,1]");
  if (spv_slowdown_lead_s < 0.0) throw ParamError("spv lead negative");
  if (stride_inflation < 1.0) throw ParamError("stride_inflation must be >= 1");
}

std::vector<SubjectData> generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<SubjectData> out;
  Rng master(cfg.seed);

  for (int s = 0; s < cfg.n_subjects; ++s) {
    Rng rng = master.fork(static_cast<std::uint64_t>(s) + 1);
    SubjectData sub;
    char idbuf[8];
    std::snprintf(idbuf, sizeof(idbuf), "S%02d", s + 1);
    sub.recording.subject_id = idbuf;
    sub.recording.duration_s = cfg.task_duration_s;

    const Schedule sch = schedule_episodes(cfg, rng);

    const Index n500 = static_cast<Index>(std::llround(cfg.task_duration_s * kEegRate));
    const Index n512 = static_cast<Index>(std::llround(cfg.task_duration_s * kPortiRate));

    sub.fog_mask_500 = Vec::Zero(n500);
    sub.direction_500 = Vec(n500);
    for (Index i = 0; i < n500; ++i) {
      const Scalar t = static_cast<Scalar>(i) / kEegRate;
      sub.fog_mask_500[i] = sch.in_fog(t) ? 1.0 : 0.0;
      sub.direction_500[i] = turn_sign(cfg, t);
    }

    // ---- EEG: shared background plus per-electrode noise; theta_effect
    // injects a FOG-locked 5.5 Hz difference when nonzero.
    auto fz = make_channel("Fz", io::ChannelKind::EEG, kEegRate, n500);
    fz.electrode = "Fz";
    auto cz = make_channel("Cz", io::ChannelKind::EEG, kEegRate, n500);
    cz.electrode = "Cz";
    {
      Rng r1 = rng.fork(11), r2 = rng.fork(12), rc = rng.fork(13);
      for (Index i = 0; i < n500; ++i) {
        const Scalar t = static_cast<Scalar>(i) / kEegRate;
        const Scalar common = 2.0 * rc.normal() +
                              3.0 * std::sin(2.0 * kPi * 10.0 * t);
        Scalar diff_drive = 0.0;
        if (cfg.theta_effect > 0.0 && sch.in_fog(t))
          diff_drive = cfg.theta_effect * std::sin(2.0 * kPi * 5.5 * t);
        fz.samples[i] = common + cfg.noise_eeg * r1.normal() + diff_drive;
        cz.samples[i] = common + cfg.noise_eeg * r2.normal();
      }
    }

    // ---- EOG: nystagmus sawtooth whose slow-phase speed follows the
    // envelope; drift and blinks ride on top.
    auto eog = make_channel("eog_h", io::ChannelKind::EOG, kEegRate, n500);
    eog.axis = "horizontal";
    {
      Rng re = rng.fork(21);
      const Scalar v0 = 200.0;
      const Scalar slow_s = 0.85, quick_s = 0.15;
      const Scalar dt = 1.0 / kEegRate;
      Scalar pos = 0.0, pos0 = 0.0, pos1 = 0.0;
      Scalar beat_t = 0.0;
      const Scalar ph1 = 2.0 * kPi * re.uniform(), ph2 = 2.0 * kPi * re.uniform();
      Scalar next_blink = 10.0 + 10.0 * re.uniform();
      for (Index i = 0; i < n500; ++i) {
        const Scalar t = static_cast<Scalar>(i) / kEegRate;
        if (beat_t < slow_s) {
          pos += turn_sign(cfg, t) * v0 * spv_envelope(cfg, sch, t) * dt;
          pos1 = pos;
        } else {
          const Scalar u = (beat_t - slow_s) / quick_s;
          pos = pos1 + (pos0 - pos1) * u;
        }
        beat_t += dt;
        if (beat_t >= slow_s + quick_s) {
          beat_t = 0.0;
          pos = pos0;  // each beat sweeps away from and back to the rest point
        }
        Scalar blink = 0.0;
        if (t >= next_blink) {
          if (t < next_blink + 0.2)
            blink = 800.0 * std::sin(kPi * (t - next_blink) / 0.2);
          else
            next_blink = t + 10.0 + 10.0 * re.uniform();
        }
        const Scalar drift = 300.0 * std::sin(2.0 * kPi * 0.05 * t + ph1) +
                             200.0 * std::sin(2.0 * kPi * 0.021 * t + ph2);
        eog.samples[i] = pos + drift + blink + cfg.noise_eog * re.normal();
      }
    }

    // ---- footswitches (512 Hz)
    Rng rgait = rng.fork(31);
    const std::vector<Scalar> strikes_l = strike_times(cfg, sch, 0.25, rgait);
    const std::vector<Scalar> strikes_r = strike_times(cfg, sch, 0.85, rgait);

    std::vector<io::Channel> switches;
    {
      Rng rs = rng.fork(32);
      for (const std::string foot : {"left", "right"}) {
        const auto& strikes = foot == "left" ? strikes_l : strikes_r;
        for (int k = 0; k < 2; ++k) {
          auto ch = make_channel("fsw_" + foot + "_" + std::to_string(k),
                                 io::ChannelKind::FOOTSWITCH, kPortiRate, n512);
          ch.foot = foot;
          ch.switch_index = k;
          const Scalar delay = k == 0 ? 0.0 : 0.03;
          for (Index i = 0; i < n512; ++i) {
            const Scalar t = static_cast<Scalar>(i) / kPortiRate;
            bool stance = false;
            for (std::size_t j = 0; j < strikes.size(); ++j) {
              const Scalar start = strikes[j] + delay;
              const Scalar next = j + 1 < strikes.size()
                                      ? strikes[j + 1]
                                      : cfg.task_duration_s + 10.0;
              const Scalar stance_len = 0.58 * std::min(next - strikes[j], 4.0);
              if (t >= start && t < strikes[j] + stance_len) {
                stance = true;
                break;
              }
              if (start > t) break;
            }
            ch.samples[i] = stance ? 3.0 + 0.05 * rs.normal()
                                   : 0.15 + 0.02 * rs.normal();
          }
          switches.push_back(std::move(ch));
        }
      }
    }

    // ---- accelerometers (512 Hz): locomotion sway in 0.5-3 Hz plus damped
    // step-impact bursts in 3-8 Hz; bursts fade with fi_drop during FOG.
    std::vector<io::Channel> accels;
    {
      const struct {
        const char* placement;
        bool left;
        Scalar impact_gain;
      } placements[] = {{"left_knee", true, 1.0},
                        {"right_knee", false, 1.0},
                        {"left_ankle", true, 1.3},
                        {"right_ankle", false, 1.3}};
      int pidx = 0;
      for (const auto& pl : placements) {
        Rng ra = rng.fork(40 + static_cast<std::uint64_t>(pidx++));
        const auto& strikes = pl.left ? strikes_l : strikes_r;
        const Scalar sway_phase = 2.0 * kPi * ra.uniform();
        Vec sway(n512), burst = Vec::Zero(n512);
        for (Index i = 0; i < n512; ++i) {
          const Scalar t = static_cast<Scalar>(i) / kPortiRate;
          Scalar amp = 0.25;
          if (sch.in_fog(t)) amp *= 0.6;
          if (sch.in_other(t)) amp *= 0.5;
          sway[i] = amp * std::sin(2.0 * kPi * 1.7 * t + sway_phase);
        }
        for (Scalar st : strikes) {
          Scalar gain = 0.35 * pl.impact_gain;
          if (sch.in_fog(st)) gain *= (1.0 - cfg.fi_drop);
          const Index i0 = static_cast<Index>(std::llround(st * kPortiRate));
          const Index i1 = std::min<Index>(n512, i0 + static_cast<Index>(0.4 * kPortiRate));
          for (Index i = std::max<Index>(0, i0); i < i1; ++i) {
            const Scalar dt = static_cast<Scalar>(i - i0) / kPortiRate;
            burst[i] += gain * std::exp(-dt / 0.08) *
                        std::sin(2.0 * kPi * 5.5 * dt);
          }
        }
        Vec tremor = Vec::Zero(n512);
        if (cfg.tremor_during_fog) {
          for (Index i = 0; i < n512; ++i) {
            const Scalar t = static_cast<Scalar>(i) / kPortiRate;
            if (sch.in_fog(t))
              tremor[i] = 0.4 * std::sin(2.0 * kPi * 5.0 * t);
          }
        }
        for (const std::string axis : {"x", "y", "z"}) {
          auto ch = make_channel("acc_" + std::string(pl.placement) + "_" + axis,
                                 io::ChannelKind::ACCEL, kPortiRate, n512);
          ch.placement = pl.placement;
          ch.axis = axis;
          const Scalar ax_sway = axis == "x" ? 1.0 : (axis == "y" ? 0.5 : 0.2);
          const Scalar ax_burst = axis == "z" ? 1.0 : 0.6;
          const Scalar gravity = axis == "z" ? 1.0 : 0.0;
          for (Index i = 0; i < n512; ++i)
            ch.samples[i] = gravity + ax_sway * sway[i] +
                            ax_burst * (burst[i] + tremor[i]) +
                            cfg.noise_accel * ra.normal();
          accels.push_back(std::move(ch));
        }
      }
    }

    // ---- ECG (512 Hz): three scaled leads, beats at the configured rate
    // with no FOG coupling unless hr_effect_bpm is set.
    std::vector<io::Channel> ecg;
    {
      Rng re = rng.fork(51);
      // subject-specific slow modulation so the heart rhythm cannot lock to
      // the episode schedule
      const Scalar mod_hz = 0.031 + 0.017 * re.uniform();
      const Scalar mod_ph = 2.0 * kPi * re.uniform();
      std::vector<Scalar> beats;
      Scalar t = 0.4;
      while (t < cfg.task_duration_s - 0.4) {
        beats.push_back(t);
        Scalar bpm = 72.0 + 4.0 * std::sin(2.0 * kPi * mod_hz * t + mod_ph);
        if (sch.in_fog(t)) bpm += cfg.hr_effect_bpm;
        t += 60.0 / bpm * (1.0 + 0.02 * re.normal());
      }
      Vec base = Vec::Zero(n512);
      auto bump = [&](Scalar center, Scalar width, Scalar amp) {
        const Index lo = std::max<Index>(
            0, static_cast<Index>((center - 5 * width) * kPortiRate));
        const Index hi = std::min<Index>(
            n512, static_cast<Index>((center + 5 * width) * kPortiRate));
        for (Index i = lo; i < hi; ++i) {
          const Scalar dt = static_cast<Scalar>(i) / kPortiRate - center;
          base[i] += amp * std::exp(-dt * dt / (2.0 * width * width));
        }
      };
      for (Scalar b : beats) {
        bump(b - 0.18, 0.030, 0.12);
        bump(b - 0.025, 0.008, -0.15);
        bump(b, 0.012, 1.20);
        bump(b + 0.025, 0.008, -0.25);
        bump(b + 0.25, 0.050, 0.30);
      }
      const Scalar scales[3] = {0.8, 1.0, 1.2};
      for (int k = 0; k < 3; ++k) {
        auto ch = make_channel("ecg_" + std::to_string(k + 1),
                               io::ChannelKind::ECG, kPortiRate, n512);
        ch.lead = "L" + std::to_string(k + 1);
        for (Index i = 0; i < n512; ++i)
          ch.samples[i] = scales[k] * base[i] + cfg.noise_ecg * re.normal();
        ecg.push_back(std::move(ch));
      }
    }

    sub.recording.channels.push_back(std::move(fz));
    sub.recording.channels.push_back(std::move(cz));
    sub.recording.channels.push_back(std::move(eog));
    for (auto& c : ecg) sub.recording.channels.push_back(std::move(c));
    for (auto& c : accels) sub.recording.channels.push_back(std::move(c));
    for (auto& c : switches) sub.recording.channels.push_back(std::move(c));
    sub.recording.validate();

    sub.truth.rater_id = "truth";
    for (const auto& e : sch.fog) sub.truth.episodes.push_back(e);
    for (const auto& e : sch.other) sub.truth.episodes.push_back(e);
    std::sort(sub.truth.episodes.begin(), sub.truth.episodes.end(),
              [](const io::Episode& a, const io::Episode& b) {
                return a.onset_s < b.onset_s;
              });
    sub.truth.validate();

    Rng rj = rng.fork(61);
    sub.rater_a = jitter_track(sub.truth, rj, "rater_a", 0.12);
    sub.rater_b = jitter_track(sub.truth, rj, "rater_b", 0.12);

    out.push_back(std::move(sub));
  }
  return out;
}

void write_dataset(const std::vector<SubjectData>& data,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& sub : data) {
    const auto base = dir / sub.recording.subject_id;
    io::write_recording(sub.recording, base.string() + ".csv",
                        base.string() + ".json");
    io::write_annotations({sub.rater_a, sub.rater_b, sub.truth},
                          base.string() + ".annotations.json");
  }
}

}  // namespace fog::synth
