#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fog/signalio.hpp"
#include "fog/types.hpp"

namespace fog::features {

enum class FeatureKind {
  THETA_POWER,
  SPV,
  HEART_RATE,
  FREEZE_INDEX,
  STRIDE_DURATION
};

struct FeatureSeries {
  FeatureKind kind = FeatureKind::THETA_POWER;
  std::string name;
  Scalar rate_hz = 0.0;
  Vec values;  // NaN = missing
  std::vector<std::uint8_t> flags;  // per-sample, empty unless some flag set

  static constexpr std::uint8_t kSaturated = 1;

  Index size() const { return values.size(); }
  Index missing_count() const {
    Index m = 0;
    for (Index i = 0; i < values.size(); ++i)
      if (is_missing(values[i])) ++m;
    return m;
  }
};

// Which switches define floor contact for each foot.
struct KeySwitchSet {
  std::map<std::string, std::vector<int>> per_foot;
  void validate() const;
};

struct FeatureParams {
  Scalar theta_lo_hz = 4.0;
  Scalar theta_hi_hz = 7.0;
  Scalar eeg_band_lo_hz = 0.5;
  Scalar eeg_band_hi_hz = 45.0;
  Scalar eog_lowpass_hz = 30.0;
  Scalar eog_median_ms = 50.0;
  int baseline_level = 10;
  Scalar fi_window_s = 2.0;
  Scalar fi_tremble_lo_hz = 3.0;
  Scalar fi_tremble_hi_hz = 8.0;
  Scalar fi_loco_lo_hz = 0.5;
  Scalar fi_loco_hi_hz = 3.0;
  int morlet_n_freqs = 20;
  Scalar morlet_cycles = 6.0;
  Scalar blink_percentile = 99.5;
  Scalar slow_gate = 1.5;  // causal slow-phase gate, multiples of EMA(|v|)
};

// Theta-band (4-7 Hz) Morlet power of the Fz-Cz difference after a 0.5-45 Hz
// band-pass.
FeatureSeries theta_power(const io::Channel& fz, const io::Channel& cz,
                          const FeatureParams& params = {});

struct SlowPhaseResult {
  FeatureSeries spv;  // velocity on slow-phase samples, NaN elsewhere
  Vec velocity;       // central-difference velocity of the cleaned signal
  Vec cleaned;        // low-passed, median-smoothed, baseline-removed EOG
};

// Slow-phase eye velocity: 30 Hz low-pass, 50 ms median, level-10 baseline
// removal, central-difference velocity, then 2-means segmentation on
// {|v|, |a|} with blink samples above the 99.5th |v| percentile dropped
// first. The cluster with the lower mean |v| is the slow phase.
SlowPhaseResult slow_phase_velocity(const io::Channel& eog_h,
                                    std::uint64_t seed,
                                    const FeatureParams& params = {});

// Turn direction per sample: sign of the centered rolling median of the eye
// velocity (window 2 s). +1 = clockwise convention, -1 = counterclockwise.
Vec turn_direction(const Vec& velocity, Scalar rate_hz, Scalar window_s = 2.0);

// Flip SPV where the turn direction is counterclockwise so both directions
// share one sign convention.
FeatureSeries merge_turn_directions(const FeatureSeries& spv,
                                    const Vec& direction);

// Per-sample median heart rate across leads. Each lead: baseline removal,
// Pan-Tompkins R peaks, HR = 60/RR held over the interval it measures.
// Spans with no R peak for 10 s, or HR outside (20, 250) bpm, are missing.
FeatureSeries heart_rate(const std::vector<const io::Channel*>& leads,
                         const FeatureParams& params = {});

// Freeze index: Morlet power ratio P(3-8 Hz) / P(0.5-3 Hz) of the
// acceleration magnitude over a 2 s window centered on each sample. The
// first/last window-half samples are missing; a vanishing locomotion band is
// floored at 1e-6 of the window total and the sample flagged saturated.
FeatureSeries freeze_index(const io::Channel& x, const io::Channel& y,
                           const io::Channel& z,
                           const FeatureParams& params = {});

// Stride duration per foot from key-switch contact rising edges, the value
// of each inter-strike interval held across that interval, averaged over
// feet where defined.
FeatureSeries stride_duration(const std::vector<const io::Channel*>& switches,
                              const KeySwitchSet& keys,
                              const std::map<std::string, Scalar>& thresholds_v);

inline constexpr std::size_t kFeatureCount = 8;
extern const std::array<const char*, kFeatureCount> kFeatureNames;

struct FeatureSet {
  std::string subject_id;
  Scalar rate_hz = 0.0;
  std::vector<FeatureSeries> series;  // kFeatureNames order
  Vec turn_direction;                 // per sample
  Vec spv_unmerged;                   // NaN off the slow phase

  Index n_samples() const { return series.empty() ? 0 : series[0].size(); }
  const FeatureSeries& get(const std::string& name) const;
};

struct GaitConfig {
  KeySwitchSet keys;
  std::map<std::string, Scalar> thresholds_v;
};

// Runs all five extractors on a single-rate recording (use
// io::resample_recording first when needed).
FeatureSet extract_all(const io::Recording& rec, const GaitConfig& gait,
                       const FeatureParams& params, std::uint64_t seed);

void write_feature_set(const FeatureSet& fs, const std::filesystem::path& path);
FeatureSet load_feature_set(const std::filesystem::path& path);

}  // namespace fog::features
