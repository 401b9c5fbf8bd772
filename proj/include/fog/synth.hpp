#pragma once

#include <filesystem>
#include <vector>

#include "fog/signalio.hpp"
#include "fog/types.hpp"

namespace fog::synth {

struct EpisodeDurationDist {
  Scalar median_s = 3.0;
  Scalar min_s = 1.0;
  Scalar max_s = 20.0;
  Scalar log_sigma = 0.8;
};

struct SynthConfig {
  int n_subjects = 15;
  Scalar task_duration_s = 120.0;
  Scalar turn_period_s = 8.0;       // full CW+CCW alternation cycle
  Scalar fog_rate_per_min = 2.5;
  EpisodeDurationDist fog_duration;

  // per-modality effect sizes
  Scalar fi_drop = 0.75;             // fraction of tremble motion lost in FOG
  Scalar spv_slowdown_lead_s = 6.0;  // eye slowdown starts this early
  Scalar spv_slowdown_floor = 0.35;  // residual slow-phase speed in FOG
  Scalar stride_inflation = 3.0;     // stride period multiplier in FOG
  Scalar hr_effect_bpm = 0.0;        // paper found none
  Scalar theta_effect = 0.0;         // paper found none

  // noise levels (signal units)
  Scalar noise_eeg = 1.0;
  Scalar noise_eog = 1.5;
  Scalar noise_ecg = 0.02;
  Scalar noise_accel = 0.05;

  bool tremor_during_fog = false;  // classical freeze-index-increase regime
  Scalar other_stops_per_min = 1.0;

  std::uint64_t seed = 20210;

  void validate() const;
};

struct SubjectData {
  io::Recording recording;
  io::AnnotationTrack truth;
  io::AnnotationTrack rater_a;
  io::AnnotationTrack rater_b;
  Vec fog_mask_500;    // 1 inside a FOG episode, on the 500 Hz grid
  Vec direction_500;   // true turn direction, +1 CW / -1 CCW
};

std::vector<SubjectData> generate_dataset(const SynthConfig& cfg);

// Writes <id>.csv, <id>.json and <id>.annotations.json per subject.
void write_dataset(const std::vector<SubjectData>& data,
                   const std::filesystem::path& dir);

}  // namespace fog::synth
