#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fog/types.hpp"

namespace fog::io {

enum class ChannelKind { EEG, EOG, ECG, ACCEL, FOOTSWITCH };

std::string to_string(ChannelKind k);
ChannelKind channel_kind_from_string(const std::string& s);

struct Channel {
  std::string label;
  ChannelKind kind = ChannelKind::EEG;
  std::string electrode;  // EEG
  std::string axis;       // EOG: horizontal|vertical; ACCEL: x|y|z
  std::string lead;       // ECG
  std::string placement;  // ACCEL: left_knee|right_knee|left_ankle|right_ankle
  std::string foot;       // FOOTSWITCH: left|right
  int switch_index = -1;  // FOOTSWITCH
  Scalar rate_hz = 0.0;
  Vec samples;

  Scalar duration_s() const {
    return static_cast<Scalar>(samples.size()) / rate_hz;
  }
};

struct Recording {
  std::string subject_id;
  Scalar duration_s = 0.0;
  std::vector<Channel> channels;

  const Channel* find(const std::string& label) const;
  const Channel& get(const std::string& label) const;
  std::vector<const Channel*> find_kind(ChannelKind kind) const;
  void validate() const;
};

enum class EpisodeLabel { FOG, OTHER_STOP };

struct Episode {
  Scalar onset_s = 0.0;
  Scalar offset_s = 0.0;
  EpisodeLabel label = EpisodeLabel::FOG;
};

struct AnnotationTrack {
  std::string rater_id;
  std::vector<Episode> episodes;

  void validate() const;
  Scalar span_end_s() const;
};

// Recording format: one CSV per recording (columns = channels, first column
// = time on the fastest channel's clock; slower channels fill their own
// leading rows and leave the tail blank) plus a JSON sidecar with subject id
// and per-channel metadata.
Recording load_recording(const std::filesystem::path& csv_path,
                         const std::filesystem::path& sidecar_path);
Recording load_recording(const std::filesystem::path& base);  // base + ".csv"/".json"
void write_recording(const Recording& rec,
                     const std::filesystem::path& csv_path,
                     const std::filesystem::path& sidecar_path);

std::vector<AnnotationTrack> load_annotations(const std::filesystem::path& path);
void write_annotations(const std::vector<AnnotationTrack>& tracks,
                       const std::filesystem::path& path);

// Rational downsampler: zero-phase Kaiser-windowed sinc anti-alias filter at
// 0.45x the lower of the two rates, applied by polyphase interpolation /
// decimation. Upsampling is not supported.
Channel resample_channel(const Channel& ch, Scalar target_hz);
Vec resample(const Vec& x, int up, int down);

// Resample every channel of a recording to the given rate (channels already
// there pass through untouched).
Recording resample_recording(const Recording& rec, Scalar target_hz);

struct AgreementStats {
  Scalar percent_agreement = 0.0;
  Scalar kappa = 0.0;
};

// Frame-rasterized agreement on binary FOG / non-FOG labels.
AgreementStats interrater_stats(const AnnotationTrack& a,
                                const AnnotationTrack& b,
                                Scalar frame_s = 0.1);

// Frames where a and b agree keep that label; disagreements take the
// tiebreaker's label; contiguous frames merge back into episodes.
AnnotationTrack adjudicate(const AnnotationTrack& a, const AnnotationTrack& b,
                           const AnnotationTrack& tiebreak,
                           Scalar frame_s = 0.1);

}  // namespace fog::io
