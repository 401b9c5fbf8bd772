#pragma once

#include <optional>
#include <vector>

#include "fog/dsp.hpp"
#include "fog/types.hpp"

namespace fog::features {

// Incremental Pan-Tompkins QRS detector: 5-15 Hz band-pass, five-point
// derivative, squaring, 150 ms moving-window integration, adaptive
// signal/noise thresholds with T-wave discrimination and RR-based
// search-back. The same instance backs both the batch detector and the
// streaming feature path.
class PanTompkins {
 public:
  explicit PanTompkins(Scalar rate_hz);

  // Feed one raw sample; returns newly confirmed R-peak sample indices
  // (search-back may confirm a peak earlier than the current sample).
  std::vector<Index> push(Scalar x);

  void reset();
  Index samples_seen() const { return n_; }

 private:
  struct Candidate {
    Index mwi_index = 0;
    Scalar mwi_value = 0.0;
    Index refined = 0;
    Scalar slope = 0.0;
  };

  Candidate make_candidate(Index mwi_peak_index, Scalar peak_value);
  void accept(const Candidate& c, std::vector<Index>& out, bool searchback);
  void classify(Index peak_idx, Scalar peak_val, std::vector<Index>& out);

  Scalar rate_hz_;
  dsp::CausalFilter bandpass_;
  std::array<Scalar, 5> dbuf_{};  // derivative taps
  std::vector<Scalar> mwi_ring_;
  Index mwi_len_;
  Scalar mwi_sum_ = 0.0;
  Index n_ = 0;

  std::vector<Scalar> band_hist_;  // recent band-passed samples for refinement
  Index band_hist_start_ = 0;

  // last three MWI values for local-maximum detection
  Scalar m2_ = 0.0, m1_ = 0.0;

  Scalar spki_ = 0.0, npki_ = 0.0;
  bool learned_ = false;
  Scalar learn_max_ = 0.0, learn_sum_ = 0.0;

  Index last_qrs_ = -1;
  Scalar last_qrs_slope_ = 0.0;
  std::vector<Scalar> rr_hist_;
  std::optional<Candidate> best_noise_;  // search-back candidate
  std::vector<std::pair<Index, Scalar>> learn_peaks_;

  Index refractory_, twave_window_, learn_len_;
};

// Batch wrapper: R-peak sample indices over a whole signal.
std::vector<Index> pan_tompkins(const Vec& x, Scalar rate_hz);

}  // namespace fog::features
