#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fog/types.hpp"

namespace fog::dsp {

enum class FilterKind { lowpass, bandpass };
enum class FilterPhase { zero_phase, causal };

// Butterworth filter description. `order` is the analog prototype order; a
// bandpass therefore has 2*order poles (one biquad pair per prototype pole).
struct FilterSpec {
  FilterKind kind = FilterKind::lowpass;
  Scalar lo_hz = 0.0;  // lower corner; unused for lowpass
  Scalar hi_hz = 0.0;  // upper corner, or the lowpass cutoff
  int order = 4;
  FilterPhase phase = FilterPhase::zero_phase;

  static FilterSpec lowpass(Scalar cutoff_hz, int order,
                            FilterPhase phase = FilterPhase::zero_phase) {
    return {FilterKind::lowpass, 0.0, cutoff_hz, order, phase};
  }
  static FilterSpec bandpass(Scalar lo_hz, Scalar hi_hz, int order,
                             FilterPhase phase = FilterPhase::zero_phase) {
    return {FilterKind::bandpass, lo_hz, hi_hz, order, phase};
  }
  static FilterSpec highpass(Scalar cutoff_hz, int order,
                             FilterPhase phase = FilterPhase::causal);
};

// Normalized second-order section (a0 == 1).
struct Biquad {
  Scalar b0, b1, b2, a1, a2;
};

std::vector<Biquad> design_butterworth(const FilterSpec& spec, Scalar rate_hz);

// Applies `spec` to `x`. Zero-phase runs the cascade forward and backward
// over an odd-reflection padded copy; causal runs a single forward pass.
Vec apply_filter(const Vec& x, Scalar rate_hz, const FilterSpec& spec);

// Incremental single-sample runner for causal cascades; shared by the
// streaming detector and the offline causal feature path.
class CausalFilter {
 public:
  CausalFilter() = default;
  CausalFilter(const FilterSpec& spec, Scalar rate_hz);

  Scalar push(Scalar x);
  void reset();

 private:
  std::vector<Biquad> sos_;
  std::vector<std::array<Scalar, 2>> state_;
};

// Sliding median with the window shrunk symmetrically at the edges, so every
// window has odd length. window_ms is rounded up to an odd sample count.
Vec median_filter(const Vec& x, Scalar rate_hz, Scalar window_ms);

// Running median over the trailing `window` samples (causal).
class CausalMedian {
 public:
  explicit CausalMedian(int window);
  Scalar push(Scalar x);
  void reset();

 private:
  int window_;
  std::vector<Scalar> buf_;    // ring of raw samples
  std::vector<Scalar> sorted_; // kept sorted
  std::size_t head_ = 0;
  std::size_t count_ = 0;
};

// Level-`level` approximation of a Daubechies-4 pyramid (the baseline), and
// the residual x - baseline. Signals shorter than 2^level are rejected.
Vec wavelet_baseline(const Vec& x, int level);
Vec wavelet_baseline_remove(const Vec& x, int level);

struct TimeFreqPower {
  Vec freqs_hz;
  Vec times_s;
  Mat power;  // freq x time, squared signal units
};

// Complex Morlet transform power at the given frequencies. Power is
// calibrated so a unit-amplitude sinusoid at a grid frequency reads ~1.
TimeFreqPower morlet_power(const Vec& x, Scalar rate_hz,
                           const std::vector<Scalar>& freqs_hz,
                           Scalar cycles);

// Per-sample mean Morlet power over [f_lo, f_hi], n_freqs log-spaced
// frequencies, normalized by the band's mean comb response so an in-band
// unit sinusoid reads ~1 independent of where it falls on the grid.
Vec morlet_band_power(const Vec& x, Scalar rate_hz, Scalar f_lo, Scalar f_hi,
                      int n_freqs = 20, Scalar cycles = 6.0);

// Instantaneous phase of the FFT analytic signal, wrapped to (-pi, pi].
Vec hilbert_phase(const Vec& x);
// Unwrap a wrapped phase series.
Vec unwrap_phase(const Vec& phase);

struct KMeansResult {
  std::vector<int> assignment;
  Mat centroids;  // k x d
  Scalar inertia = 0.0;
  int iterations = 0;
  int empty_repairs = 0;
  std::vector<Scalar> inertia_history;  // one entry per Lloyd iteration
};

// Lloyd iterations from a seeded k-means++ start. Assignment ties break to
// the lowest cluster index; an emptied cluster is reseeded from the point
// farthest from its centroid.
KMeansResult kmeans(const Mat& points, int k, std::uint64_t seed);

}  // namespace fog::dsp
