#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fog/features.hpp"
#include "fog/signalio.hpp"
#include "fog/types.hpp"

namespace fog::stats {

enum class SegmentGroup { FREEZING, NORMAL_TURNING };

struct SegmentSpec {
  Scalar pre_s = 10.0;   // seconds before the anchor
  Scalar post_s = 3.0;   // seconds after the anchor
};

// Feature values over relative time [-pre_s, +post_s] around an anchor
// (freezing onset, or the matched phase point for controls).
struct Segment {
  SegmentGroup group = SegmentGroup::FREEZING;
  std::string feature_name;
  std::string subject_id;
  Scalar rate_hz = 0.0;
  Scalar anchor_s = 0.0;
  Scalar pre_s = 10.0;  // seconds of the window before the anchor
  Vec values;  // length pre+post seconds * rate + 1; NaN = missing
  bool constant_flag = false;
};

// One segment per FOG episode whose window holds no other FOG episode and
// lies fully inside the recording.
std::vector<Segment> extract_freezing_segments(
    const features::FeatureSeries& fs, const io::AnnotationTrack& ann,
    const std::string& subject_id, const SegmentSpec& spec = {});

// Instantaneous turning phase from the (unmerged) slow-phase velocity:
// missing samples interpolated, mean removed, 1 Hz low-pass, analytic phase.
Vec turning_phase(const Vec& spv_unmerged, Scalar rate_hz);

struct ControlMatchResult {
  std::vector<Segment> controls;
  std::vector<std::size_t> unmatched;  // freezing-segment indices left unmatched
};

// One FOG-free control window per freezing segment, anchored where the
// turning phase at relative -pre_s matches the freezing segment's (within
// tol_rad, nearest phase first, nearest in time on ties).
ControlMatchResult match_control_segments(const features::FeatureSeries& fs,
                                          const Vec& phase,
                                          const std::vector<Segment>& freezing,
                                          const io::AnnotationTrack& ann,
                                          Scalar tol_rad = 0.1,
                                          const SegmentSpec& spec = {});

// Per-subject z-scores, pooled over both groups of that subject's segments.
// Zero-variance subjects are flagged constant and zeroed.
std::vector<Segment> normalize_segments(std::vector<Segment> segments);

struct TTestBand {
  Vec rel_time_s;
  Vec mean_a, lo_a, hi_a;  // group A mean and 95% band (mean +- 1.96 SE)
  Vec mean_b, lo_b, hi_b;
  Vec p;      // Welch two-sided p per sample
  Vec p_adj;  // Bonferroni over the samples
};

TTestBand pointwise_ttest(const std::vector<Segment>& group_a,
                          const std::vector<Segment>& group_b);

// Two-sided Wilcoxon signed-rank p: exact distribution (midranks) for n <=
// 20 non-zero differences, normal approximation with continuity correction
// beyond. All-zero differences give p = 1 by convention.
Scalar wilcoxon_signed_rank(const std::vector<Scalar>& diffs);

// min(1, p * m); m must cover the number of p-values.
std::vector<Scalar> bonferroni(const std::vector<Scalar>& p_values, int m);

Scalar student_t_two_sided_p(Scalar t, Scalar dof);
Scalar normal_cdf(Scalar z);

void write_band_csv(const TTestBand& band, const std::filesystem::path& path);

}  // namespace fog::stats
