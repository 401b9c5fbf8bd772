#include "fog/pan_tompkins.hpp"

#include <algorithm>
#include <cmath>

namespace fog::features {

namespace {
constexpr Scalar kRefractoryS = 0.200;
constexpr Scalar kTWaveS = 0.360;
constexpr Scalar kLearnS = 2.0;
constexpr Scalar kMwiS = 0.150;
constexpr Scalar kSearchbackFactor = 1.66;
}  // namespace

PanTompkins::PanTompkins(Scalar rate_hz)
    : rate_hz_(rate_hz),
      bandpass_(dsp::FilterSpec::bandpass(5.0, 15.0, 2,
                                          dsp::FilterPhase::causal),
                rate_hz),
      mwi_len_(std::max<Index>(1, static_cast<Index>(std::llround(kMwiS * rate_hz)))),
      refractory_(static_cast<Index>(std::llround(kRefractoryS * rate_hz))),
      twave_window_(static_cast<Index>(std::llround(kTWaveS * rate_hz))),
      learn_len_(static_cast<Index>(std::llround(kLearnS * rate_hz))) {
  mwi_ring_.assign(static_cast<std::size_t>(mwi_len_), 0.0);
  band_hist_.assign(static_cast<std::size_t>(std::llround(2.0 * rate_hz)), 0.0);
}

void PanTompkins::reset() {
  bandpass_.reset();
  dbuf_.fill(0.0);
  std::fill(mwi_ring_.begin(), mwi_ring_.end(), 0.0);
  mwi_sum_ = 0.0;
  n_ = 0;
  std::fill(band_hist_.begin(), band_hist_.end(), 0.0);
  m2_ = m1_ = 0.0;
  spki_ = npki_ = 0.0;
  learned_ = false;
  learn_max_ = learn_sum_ = 0.0;
  last_qrs_ = -1;
  last_qrs_slope_ = 0.0;
  rr_hist_.clear();
  best_noise_.reset();
  learn_peaks_.clear();
}

PanTompkins::Candidate PanTompkins::make_candidate(Index mwi_peak_index,
                                                   Scalar peak_value) {
  Candidate c;
  c.mwi_index = mwi_peak_index;
  c.mwi_value = peak_value;

  // The MWI output lags the band-passed QRS by roughly the integration
  // window plus the derivative taps; refine to the band-domain maximum.
  const Index hist = static_cast<Index>(band_hist_.size());
  const Index lo = std::max<Index>(0, mwi_peak_index - mwi_len_ - 12);
  const Index hi = mwi_peak_index;
  Index best = lo;
  Scalar bestv = -std::numeric_limits<Scalar>::max();
  Scalar slope = 0.0;
  Scalar prev = 0.0;
  bool have_prev = false;
  for (Index i = lo; i <= hi && i < n_; ++i) {
    if (n_ - i > hist) continue;  // fell out of the ring
    const Scalar v = band_hist_[static_cast<std::size_t>(i % hist)];
    if (v > bestv) {
      bestv = v;
      best = i;
    }
    if (have_prev) slope = std::max(slope, std::abs(v - prev));
    prev = v;
    have_prev = true;
  }
  c.refined = best;
  c.slope = slope;
  return c;
}

void PanTompkins::accept(const Candidate& c, std::vector<Index>& out,
                         bool searchback) {
  if (searchback)
    spki_ = 0.25 * c.mwi_value + 0.75 * spki_;
  else
    spki_ = 0.125 * c.mwi_value + 0.875 * spki_;
  if (last_qrs_ >= 0) {
    rr_hist_.push_back(static_cast<Scalar>(c.refined - last_qrs_));
    if (rr_hist_.size() > 8) rr_hist_.erase(rr_hist_.begin());
  }
  last_qrs_ = c.refined;
  last_qrs_slope_ = c.slope;
  best_noise_.reset();
  out.push_back(c.refined);
}

std::vector<Index> PanTompkins::push(Scalar x) {
  std::vector<Index> confirmed;

  const Scalar y = bandpass_.push(x);
  band_hist_[static_cast<std::size_t>(n_ % static_cast<Index>(band_hist_.size()))] = y;

  // five-point derivative, then squaring
  dbuf_ = {y, dbuf_[0], dbuf_[1], dbuf_[2], dbuf_[3]};
  const Scalar d =
      (2.0 * dbuf_[0] + dbuf_[1] - dbuf_[3] - 2.0 * dbuf_[4]) / 8.0;
  const Scalar sq = d * d;

  // moving-window integration
  const std::size_t slot = static_cast<std::size_t>(n_ % mwi_len_);
  mwi_sum_ += sq - mwi_ring_[slot];
  mwi_ring_[slot] = sq;
  const Scalar m = mwi_sum_ / static_cast<Scalar>(mwi_len_);

  // local maximum of the MWI output at the previous sample
  const bool is_peak = n_ >= 2 && m1_ > m2_ && m1_ >= m;
  const Index peak_idx = n_ - 1;
  const Scalar peak_val = m1_;
  m2_ = m1_;
  m1_ = m;

  if (!learned_) {
    learn_max_ = std::max(learn_max_, m);
    learn_sum_ += m;
    if (is_peak) learn_peaks_.push_back({peak_idx, peak_val});
    ++n_;
    if (n_ >= learn_len_) {
      spki_ = 0.25 * learn_max_;
      npki_ = 0.5 * learn_sum_ / static_cast<Scalar>(n_);
      learned_ = true;
      for (const auto& [idx, val] : learn_peaks_) classify(idx, val, confirmed);
      learn_peaks_.clear();
    }
    return confirmed;
  }

  if (is_peak) classify(peak_idx, peak_val, confirmed);

  // search-back when a beat is overdue
  if (last_qrs_ >= 0 && best_noise_) {
    Scalar rr_avg = rate_hz_;  // assume 60 bpm until history exists
    if (!rr_hist_.empty()) {
      std::vector<Scalar> tmp = rr_hist_;
      std::nth_element(tmp.begin(), tmp.begin() + tmp.size() / 2, tmp.end());
      rr_avg = tmp[tmp.size() / 2];
    }
    if (static_cast<Scalar>(n_ - last_qrs_) > kSearchbackFactor * rr_avg) {
      const Scalar threshold2 =
          0.5 * (npki_ + 0.25 * (spki_ - npki_));
      if (best_noise_->mwi_value > threshold2) {
        accept(*best_noise_, confirmed, true);
      }
    }
  }

  ++n_;
  return confirmed;
}

void PanTompkins::classify(Index peak_idx, Scalar peak_val,
                           std::vector<Index>& out) {
  Candidate c = make_candidate(peak_idx, peak_val);
  const Scalar threshold1 = npki_ + 0.25 * (spki_ - npki_);

  const bool after_refractory =
      last_qrs_ < 0 || c.refined - last_qrs_ >= refractory_;
  bool is_qrs = peak_val > threshold1 && after_refractory;

  // T waves ride close behind the QRS with a much gentler slope.
  if (is_qrs && last_qrs_ >= 0 && c.refined - last_qrs_ < twave_window_ &&
      c.slope < 0.5 * last_qrs_slope_) {
    is_qrs = false;
  }

  if (is_qrs) {
    accept(c, out, false);
  } else {
    npki_ = 0.125 * peak_val + 0.875 * npki_;
    if (after_refractory &&
        (!best_noise_ || c.mwi_value > best_noise_->mwi_value)) {
      best_noise_ = c;
    }
  }
}

std::vector<Index> pan_tompkins(const Vec& x, Scalar rate_hz) {
  PanTompkins det(rate_hz);
  std::vector<Index> peaks;
  for (Index i = 0; i < x.size(); ++i) {
    auto found = det.push(x[i]);
    peaks.insert(peaks.end(), found.begin(), found.end());
  }
  std::sort(peaks.begin(), peaks.end());
  peaks.erase(std::unique(peaks.begin(), peaks.end()), peaks.end());
  return peaks;
}

}  // namespace fog::features
