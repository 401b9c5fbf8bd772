#include "fog/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace fog::dsp {

namespace {

using Complex = std::complex<Scalar>;
constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

struct ZpkDesign {
  std::vector<Complex> poles;
  int zeros_at_plus1 = 0;
  int zeros_at_minus1 = 0;
};

// Bilinear transform with prewarped corners. Prototype poles are the usual
// unit-circle Butterworth left-half-plane set.
ZpkDesign digital_poles(const FilterSpec& spec, Scalar rate_hz) {
  const int n = spec.order;
  if (n < 1) throw ParamError("filter order must be >= 1");
  const Scalar nyq = rate_hz / 2.0;
  auto check_corner = [&](Scalar f) {
    if (!(f > 0.0) || !(f < nyq))
      throw ParamError("filter corner " + std::to_string(f) +
                       " Hz outside (0, " + std::to_string(nyq) + ") Hz");
  };

  std::vector<Complex> proto(n);
  for (int k = 0; k < n; ++k) {
    const Scalar theta = kPi * (2.0 * k + 1.0) / (2.0 * n) + kPi / 2.0;
    proto[k] = Complex(std::cos(theta), std::sin(theta));
  }

  const Scalar fs2 = 2.0 * rate_hz;
  auto bilinear = [&](Complex s) { return (fs2 + s) / (fs2 - s); };

  ZpkDesign out;
  switch (spec.kind) {
    case FilterKind::lowpass: {
      check_corner(spec.hi_hz);
      const Scalar wc = fs2 * std::tan(kPi * spec.hi_hz / rate_hz);
      for (const auto& p : proto) out.poles.push_back(bilinear(p * wc));
      out.zeros_at_minus1 = n;
      break;
    }
    case FilterKind::bandpass: {
      check_corner(spec.lo_hz);
      check_corner(spec.hi_hz);
      if (!(spec.lo_hz < spec.hi_hz))
        throw ParamError("bandpass corners must satisfy lo < hi");
      const Scalar w1 = fs2 * std::tan(kPi * spec.lo_hz / rate_hz);
      const Scalar w2 = fs2 * std::tan(kPi * spec.hi_hz / rate_hz);
      const Scalar bw = w2 - w1;
      const Scalar w0sq = w1 * w2;
      for (const auto& p : proto) {
        const Complex bp = bw * p * 0.5;
        const Complex disc = std::sqrt(bp * bp - w0sq);
        out.poles.push_back(bilinear(bp + disc));
        out.poles.push_back(bilinear(bp - disc));
      }
      out.zeros_at_plus1 = n;
      out.zeros_at_minus1 = n;
      break;
    }
  }
  return out;
}

Complex eval_biquad(const Biquad& s, Complex z1) {
  // z1 = z^-1
  const Complex z2 = z1 * z1;
  return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

}  // namespace

FilterSpec FilterSpec::highpass(Scalar cutoff_hz, int order,
                                FilterPhase phase) {
  FilterSpec s;
  s.kind = FilterKind::lowpass;  // placeholder, fixed up by design
  s.lo_hz = cutoff_hz;
  s.hi_hz = -1.0;  // sentinel: highpass
  s.order = order;
  s.phase = phase;
  return s;
}

std::vector<Biquad> design_butterworth(const FilterSpec& spec,
                                       Scalar rate_hz) {
  if (!(rate_hz > 0.0)) throw ParamError("rate_hz must be positive");

  // Highpass rides through the lowpass spec with hi_hz < 0 as a marker.
  const bool highpass = spec.kind == FilterKind::lowpass && spec.hi_hz < 0.0;

  ZpkDesign zpk;
  if (highpass) {
    const int n = spec.order;
    const Scalar nyq = rate_hz / 2.0;
    if (!(spec.lo_hz > 0.0) || !(spec.lo_hz < nyq))
      throw ParamError("highpass corner outside (0, Nyquist)");
    const Scalar fs2 = 2.0 * rate_hz;
    const Scalar wc = fs2 * std::tan(kPi * spec.lo_hz / rate_hz);
    for (int k = 0; k < n; ++k) {
      const Scalar theta = kPi * (2.0 * k + 1.0) / (2.0 * n) + kPi / 2.0;
      const Complex p = Complex(std::cos(theta), std::sin(theta));
      const Complex hp = wc / p;
      zpk.poles.push_back((fs2 + hp) / (fs2 - hp));
    }
    zpk.zeros_at_plus1 = n;
  } else {
    zpk = digital_poles(spec, rate_hz);
  }

  // Pair conjugate poles into sections; real poles pair among themselves.
  std::vector<Complex> cplx;
  std::vector<Scalar> real;
  for (const auto& p : zpk.poles) {
    if (std::abs(p.imag()) > 1e-12) {
      if (p.imag() > 0.0) cplx.push_back(p);
    } else {
      real.push_back(p.real());
    }
  }
  std::sort(cplx.begin(), cplx.end(), [](const Complex& a, const Complex& b) {
    return std::abs(a) > std::abs(b);
  });
  std::sort(real.begin(), real.end());

  std::vector<Biquad> sos;
  for (const auto& p : cplx)
    sos.push_back({1.0, 0.0, 0.0, -2.0 * p.real(), std::norm(p)});
  for (std::size_t i = 0; i + 1 < real.size(); i += 2)
    sos.push_back(
        {1.0, 0.0, 0.0, -(real[i] + real[i + 1]), real[i] * real[i + 1]});
  if (real.size() % 2 == 1) sos.push_back({1.0, 0.0, 0.0, -real.back(), 0.0});

  // Distribute the zeros at z = +/-1 over the sections.
  int zp = zpk.zeros_at_plus1, zm = zpk.zeros_at_minus1;
  for (auto& s : sos) {
    int got = 0;
    Scalar r1 = 0.0, r2 = 0.0;
    if (zp > 0) { r1 = 1.0; --zp; ++got; }
    if (got < 2 && zm > 0) { (got == 0 ? r1 : r2) = -1.0; --zm; ++got; }
    if (got < 2 && zp > 0) { r2 = 1.0; --zp; ++got; }
    if (got == 2) {
      s.b0 = 1.0; s.b1 = -(r1 + r2); s.b2 = r1 * r2;
    } else if (got == 1) {
      s.b0 = 1.0; s.b1 = -r1; s.b2 = 0.0;
    }
  }

  // Normalize gain at the natural reference frequency.
  Scalar ref_hz;
  if (highpass) ref_hz = rate_hz / 2.0;
  else if (spec.kind == FilterKind::lowpass) ref_hz = 0.0;
  else ref_hz = std::sqrt(spec.lo_hz * spec.hi_hz);

  const Complex z1 = std::polar(1.0, -2.0 * kPi * ref_hz / rate_hz);
  Complex h = 1.0;
  for (const auto& s : sos) h *= eval_biquad(s, z1);
  const Scalar mag = std::abs(h);
  if (!(mag > 0.0)) throw ParamError("degenerate filter design");
  const Scalar g = std::pow(1.0 / mag, 1.0 / static_cast<Scalar>(sos.size()));
  for (auto& s : sos) { s.b0 *= g; s.b1 *= g; s.b2 *= g; }
  return sos;
}

namespace {

// Direct form II transposed. With zi_init the state starts at the step
// steady state of the first sample, suppressing the start-up transient on
// the padded zero-phase path; the causal path starts from rest so the batch
// and incremental runners agree exactly.
void run_sos_forward(const std::vector<Biquad>& sos, Vec& x, bool zi_init) {
  const Index n = x.size();
  for (const auto& s : sos) {
    Scalar z1 = 0.0, z2 = 0.0;
    if (zi_init && n > 0) {
      const Scalar denom = 1.0 + s.a1 + s.a2;
      const Scalar hdc = (s.b0 + s.b1 + s.b2) / denom;
      const Scalar u0 = x[0];
      const Scalar y0 = hdc * u0;
      z1 = y0 - s.b0 * u0;
      z2 = s.b2 * u0 - s.a2 * y0;
    }
    for (Index i = 0; i < n; ++i) {
      const Scalar u = x[i];
      const Scalar y = s.b0 * u + z1;
      z1 = s.b1 * u - s.a1 * y + z2;
      z2 = s.b2 * u - s.a2 * y;
      x[i] = y;
    }
  }
}

Index pad_length(const FilterSpec& spec, Scalar rate_hz, Index n) {
  Scalar low_corner = spec.kind == FilterKind::bandpass ? spec.lo_hz
                                                        : std::abs(spec.hi_hz);
  if (spec.hi_hz < 0.0) low_corner = spec.lo_hz;  // highpass marker
  Index pad = static_cast<Index>(std::ceil(3.0 * rate_hz / low_corner));
  pad = std::max<Index>(pad, 12 * spec.order);
  return std::min(pad, n - 1);
}

}  // namespace

Vec apply_filter(const Vec& x, Scalar rate_hz, const FilterSpec& spec) {
  const Index n = x.size();
  if (n <= 3 * spec.order)
    throw ParamError("signal too short for filter order");
  const auto sos = design_butterworth(spec, rate_hz);

  if (spec.phase == FilterPhase::causal) {
    Vec y = x;
    run_sos_forward(sos, y, false);
    return y;
  }

  // Zero phase: odd-reflection pad, forward, reverse, forward, crop.
  const Index p = pad_length(spec, rate_hz, n);
  Vec ext(n + 2 * p);
  for (Index i = 0; i < p; ++i) ext[i] = 2.0 * x[0] - x[p - i];
  ext.segment(p, n) = x;
  for (Index i = 0; i < p; ++i)
    ext[p + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  run_sos_forward(sos, ext, true);
  ext.reverseInPlace();
  run_sos_forward(sos, ext, true);
  ext.reverseInPlace();
  return ext.segment(p, n);
}

CausalFilter::CausalFilter(const FilterSpec& spec, Scalar rate_hz)
    : sos_(design_butterworth(spec, rate_hz)),
      state_(sos_.size(), {0.0, 0.0}) {
  if (spec.phase != FilterPhase::causal)
    throw ParamError("CausalFilter requires a causal FilterSpec");
}

Scalar CausalFilter::push(Scalar x) {
  for (std::size_t k = 0; k < sos_.size(); ++k) {
    const auto& s = sos_[k];
    auto& st = state_[k];
    const Scalar y = s.b0 * x + st[0];
    st[0] = s.b1 * x - s.a1 * y + st[1];
    st[1] = s.b2 * x - s.a2 * y;
    x = y;
  }
  return x;
}

void CausalFilter::reset() {
  for (auto& st : state_) st = {0.0, 0.0};
}

Vec median_filter(const Vec& x, Scalar rate_hz, Scalar window_ms) {
  const Index n = x.size();
  Index w = static_cast<Index>(std::llround(window_ms * rate_hz / 1000.0));
  if (w < 1) w = 1;
  if (w % 2 == 0) ++w;  // round up to odd
  const Index h = w / 2;

  Vec out(n);
  std::vector<Scalar> scratch;
  scratch.reserve(static_cast<std::size_t>(w));
  for (Index i = 0; i < n; ++i) {
    const Index r = std::min({h, i, n - 1 - i});
    scratch.assign(x.data() + (i - r), x.data() + (i + r + 1));
    auto mid = scratch.begin() + r;
    std::nth_element(scratch.begin(), mid, scratch.end());
    out[i] = *mid;
  }
  return out;
}

CausalMedian::CausalMedian(int window) : window_(window) {
  if (window < 1) throw ParamError("median window must be >= 1");
  buf_.resize(static_cast<std::size_t>(window));
  sorted_.reserve(static_cast<std::size_t>(window));
}

Scalar CausalMedian::push(Scalar x) {
  if (count_ == static_cast<std::size_t>(window_)) {
    const Scalar old = buf_[head_];
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), old);
    sorted_.erase(it);
  } else {
    ++count_;
  }
  buf_[head_] = x;
  head_ = (head_ + 1) % static_cast<std::size_t>(window_);
  sorted_.insert(std::lower_bound(sorted_.begin(), sorted_.end(), x), x);
  return sorted_[(count_ - 1) / 2];
}

void CausalMedian::reset() {
  sorted_.clear();
  head_ = 0;
  count_ = 0;
}

// ---------------------------------------------------------------------------
// Daubechies-4 pyramid

namespace {

// Scaling (reconstruction lowpass) filter; sums to sqrt(2).
constexpr std::array<Scalar, 8> kDb4 = {
    0.230377813308855230,  0.714846570552541500, 0.630880767929590400,
    -0.027983769416983850, -0.187034811718881140, 0.030841381835986965,
    0.032883011666982945,  -0.010597401784997278};

std::array<Scalar, 8> db4_wavelet() {
  std::array<Scalar, 8> g{};
  for (int i = 0; i < 8; ++i)
    g[i] = ((i % 2 == 0) ? 1.0 : -1.0) * kDb4[7 - i];
  return g;
}

void dwt_step(const Vec& x, Vec& approx, Vec& detail) {
  static const std::array<Scalar, 8> g = db4_wavelet();
  const Index n = x.size();
  const Index half = n / 2;
  approx.resize(half);
  detail.resize(half);
  for (Index k = 0; k < half; ++k) {
    Scalar a = 0.0, d = 0.0;
    for (int t = 0; t < 8; ++t) {
      const Scalar v = x[(2 * k + t) % n];
      a += kDb4[t] * v;
      d += g[t] * v;
    }
    approx[k] = a;
    detail[k] = d;
  }
}

void idwt_step(const Vec& approx, const Vec& detail, Vec& x) {
  static const std::array<Scalar, 8> g = db4_wavelet();
  const Index half = approx.size();
  const Index n = 2 * half;
  x.setZero(n);
  for (Index k = 0; k < half; ++k) {
    const Scalar a = approx[k];
    const Scalar d = detail[k];
    for (int t = 0; t < 8; ++t) {
      const Index i = (2 * k + t) % n;
      x[i] += a * kDb4[t] + d * g[t];
    }
  }
}

// Least-squares line over the first (or last) `w` samples, for edge
// extrapolation.
std::pair<Scalar, Scalar> edge_line(const Vec& x, Index start, Index w) {
  Scalar sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (Index i = 0; i < w; ++i) {
    const Scalar xi = static_cast<Scalar>(i);
    const Scalar yi = x[start + i];
    sx += xi; sy += yi; sxx += xi * xi; sxy += xi * yi;
  }
  const Scalar nw = static_cast<Scalar>(w);
  const Scalar denom = nw * sxx - sx * sx;
  const Scalar slope = denom != 0.0 ? (nw * sxy - sx * sy) / denom : 0.0;
  const Scalar intercept = (sy - slope * sx) / nw;
  return {intercept, slope};
}

}  // namespace

Vec wavelet_baseline(const Vec& x, int level) {
  const Index n = x.size();
  const Index block = Index{1} << level;
  if (n < block)
    throw ParamError("signal shorter than 2^level samples");

  // Pad with linearly extrapolated edges so the circular transform does not
  // fold the boundary jump into the analysis region; the wrap lives entirely
  // inside the padding.
  const Index support = (block - 1) * 7 + 1;
  const Index pad_left = support;
  Index total = n + 2 * support;
  total = ((total + block - 1) / block) * block;
  const Index pad_right = total - n - pad_left;

  const Index w = std::min<Index>(n, block);
  const auto [ic_l, sl_l] = edge_line(x, 0, w);
  const auto [ic_r, sl_r] = edge_line(x, n - w, w);

  Vec ext(total);
  for (Index i = 0; i < pad_left; ++i)
    ext[i] = ic_l + sl_l * static_cast<Scalar>(i - pad_left);
  ext.segment(pad_left, n) = x;
  for (Index i = 0; i < pad_right; ++i)
    ext[pad_left + n + i] =
        ic_r + sl_r * static_cast<Scalar>(w - 1 + i + 1);

  std::vector<Vec> details(static_cast<std::size_t>(level));
  Vec approx = ext, next, det;
  for (int l = 0; l < level; ++l) {
    dwt_step(approx, next, det);
    details[static_cast<std::size_t>(l)] = Vec::Zero(det.size());
    approx = next;
  }
  Vec rec = approx;
  for (int l = level - 1; l >= 0; --l) {
    idwt_step(rec, details[static_cast<std::size_t>(l)], next);
    rec = next;
  }
  return rec.segment(pad_left, n);
}

Vec wavelet_baseline_remove(const Vec& x, int level) {
  return x - wavelet_baseline(x, level);
}

// ---------------------------------------------------------------------------
// Morlet power

namespace {

Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

TimeFreqPower morlet_power(const Vec& x, Scalar rate_hz,
                           const std::vector<Scalar>& freqs_hz,
                           Scalar cycles) {
  const Index n = x.size();
  if (n < 4) throw ParamError("signal too short for wavelet transform");
  if (cycles < 3.0) throw ParamError("Morlet cycles must be >= 3");
  const Scalar nyq = rate_hz / 2.0;
  Scalar fmin = nyq;
  for (Scalar f : freqs_hz) {
    if (!(f > 0.0) || !(f < nyq))
      throw ParamError("wavelet frequency outside (0, Nyquist)");
    fmin = std::min(fmin, f);
  }

  // Reflect-pad by the widest kernel so edges see signal, not zeros.
  const Scalar smax = cycles / (2.0 * kPi * fmin);
  Index halfw = static_cast<Index>(std::ceil(4.0 * smax * rate_hz));
  halfw = std::min(halfw, n - 1);
  const Index m = n + 2 * halfw;
  const Index mfft = next_pow2(m);

  std::vector<Complex> ext(static_cast<std::size_t>(mfft), Complex(0, 0));
  for (Index i = 0; i < halfw; ++i) ext[i] = x[halfw - i];
  for (Index i = 0; i < n; ++i) ext[halfw + i] = x[i];
  for (Index i = 0; i < halfw; ++i) ext[halfw + n + i] = x[n - 2 - i];

  Eigen::FFT<Scalar> fft;
  std::vector<Complex> spectrum;
  fft.fwd(spectrum, ext);

  TimeFreqPower out;
  out.freqs_hz = Eigen::Map<const Vec>(freqs_hz.data(),
                                       static_cast<Index>(freqs_hz.size()));
  out.times_s = Vec::LinSpaced(n, 0.0, static_cast<Scalar>(n - 1) / rate_hz);
  out.power.resize(static_cast<Index>(freqs_hz.size()), n);

  std::vector<Complex> shaped(static_cast<std::size_t>(mfft));
  std::vector<Complex> z;
  const Scalar dw = 2.0 * kPi * rate_hz / static_cast<Scalar>(mfft);
  for (std::size_t fi = 0; fi < freqs_hz.size(); ++fi) {
    const Scalar w0 = 2.0 * kPi * freqs_hz[fi];
    const Scalar s = cycles / w0;
    shaped[0] = Complex(0, 0);
    for (Index j = 1; j <= mfft / 2; ++j) {
      const Scalar wj = dw * static_cast<Scalar>(j);
      const Scalar d = (wj - w0) * s;
      shaped[static_cast<std::size_t>(j)] =
          spectrum[static_cast<std::size_t>(j)] * (2.0 * std::exp(-0.5 * d * d));
    }
    for (Index j = mfft / 2 + 1; j < mfft; ++j)
      shaped[static_cast<std::size_t>(j)] = Complex(0, 0);
    fft.inv(z, shaped);
    for (Index i = 0; i < n; ++i)
      out.power(static_cast<Index>(fi), i) =
          std::norm(z[static_cast<std::size_t>(halfw + i)]);
  }
  return out;
}

Vec morlet_band_power(const Vec& x, Scalar rate_hz, Scalar f_lo, Scalar f_hi,
                      int n_freqs, Scalar cycles) {
  if (!(0.0 < f_lo && f_lo < f_hi && f_hi < rate_hz / 2.0))
    throw ParamError("band outside (0, Nyquist)");
  if (n_freqs < 1) throw ParamError("n_freqs must be >= 1");

  std::vector<Scalar> freqs(static_cast<std::size_t>(n_freqs));
  const Scalar ratio = f_hi / f_lo;
  for (int k = 0; k < n_freqs; ++k)
    freqs[static_cast<std::size_t>(k)] =
        n_freqs == 1
            ? std::sqrt(f_lo * f_hi)
            : f_lo * std::pow(ratio, static_cast<Scalar>(k) /
                                         static_cast<Scalar>(n_freqs - 1));

  const TimeFreqPower tf = morlet_power(x, rate_hz, freqs, cycles);
  Vec mean = tf.power.colwise().mean().transpose().array();

  // Comb response over the geometric middle of the band: a unit sinusoid in
  // the band interior should read ~1 regardless of where it lands between
  // grid frequencies. Response rolls off toward the band edges where the
  // Gaussian tails are cut by the band limits.
  const int grid = 512;
  Scalar acc = 0.0;
  for (int gidx = 0; gidx < grid; ++gidx) {
    const Scalar pos = 0.3 + 0.4 * (static_cast<Scalar>(gidx) + 0.5) /
                                 static_cast<Scalar>(grid);
    const Scalar f = f_lo * std::pow(ratio, pos);
    Scalar resp = 0.0;
    for (Scalar fk : freqs) {
      const Scalar s = cycles / (2.0 * kPi * fk);
      const Scalar d = 2.0 * kPi * (f - fk) * s;
      resp += std::exp(-d * d);
    }
    acc += resp / static_cast<Scalar>(n_freqs);
  }
  const Scalar comb = acc / static_cast<Scalar>(grid);
  return mean / comb;
}

Vec hilbert_phase(const Vec& x) {
  const Index n = x.size();
  if (n < 16) throw ParamError("signal too short for analytic phase");
  if (x.abs().maxCoeff() == 0.0)
    throw ParamError("analytic phase of identically zero signal");

  std::vector<Complex> in(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) in[static_cast<std::size_t>(i)] = x[i];
  Eigen::FFT<Scalar> fft;
  std::vector<Complex> spec;
  fft.fwd(spec, in);

  // One-sided analytic weighting (Marple): keep DC and Nyquist, double the
  // positive frequencies, zero the negative ones.
  const Index half = n / 2;
  for (Index k = 1; k < (n + 1) / 2; ++k) spec[static_cast<std::size_t>(k)] *= 2.0;
  for (Index k = half + 1; k < n; ++k) spec[static_cast<std::size_t>(k)] = Complex(0, 0);

  std::vector<Complex> z;
  fft.inv(z, spec);
  Vec phase(n);
  for (Index i = 0; i < n; ++i) {
    const auto& v = z[static_cast<std::size_t>(i)];
    phase[i] = std::atan2(v.imag(), v.real());
  }
  return phase;
}

Vec unwrap_phase(const Vec& phase) {
  Vec out = phase;
  Scalar offset = 0.0;
  for (Index i = 1; i < phase.size(); ++i) {
    const Scalar d = phase[i] - phase[i - 1];
    if (d > kPi) offset -= 2.0 * kPi;
    else if (d < -kPi) offset += 2.0 * kPi;
    out[i] = phase[i] + offset;
  }
  return out;
}

// ---------------------------------------------------------------------------
// k-means

namespace {

Scalar sq_dist(const Mat& pts, Index i, const Mat& c, Index j) {
  return (pts.row(i) - c.row(j)).squaredNorm();
}

}  // namespace

KMeansResult kmeans(const Mat& points, int k, std::uint64_t seed) {
  const Index n = points.rows();
  const Index d = points.cols();
  if (k < 1) throw ParamError("k must be >= 1");
  if (n < k) throw ParamError("fewer points than clusters");

  Rng rng(seed);
  Mat centroids(k, d);

  // k-means++ seeding
  centroids.row(0) = points.row(static_cast<Index>(rng.uniform_index(
      static_cast<std::uint64_t>(n))));
  Vec dist2 = Vec::Constant(n, std::numeric_limits<Scalar>::max());
  for (int c = 1; c < k; ++c) {
    for (Index i = 0; i < n; ++i)
      dist2[i] = std::min(dist2[i], sq_dist(points, i, centroids, c - 1));
    const Scalar total = dist2.sum();
    Index pick = 0;
    if (total > 0.0) {
      Scalar r = rng.uniform() * total;
      for (Index i = 0; i < n; ++i) {
        r -= dist2[i];
        if (r <= 0.0) { pick = i; break; }
        pick = i;
      }
    } else {
      pick = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = points.row(pick);
  }

  KMeansResult res;
  res.assignment.assign(static_cast<std::size_t>(n), 0);
  res.centroids = centroids;

  const int max_iter = 300;
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    Scalar inertia = 0.0;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      Scalar bestd = sq_dist(points, i, res.centroids, 0);
      for (int c = 1; c < k; ++c) {
        const Scalar dd = sq_dist(points, i, res.centroids, c);
        if (dd < bestd) { bestd = dd; best = c; }
      }
      if (res.assignment[static_cast<std::size_t>(i)] != best) {
        res.assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
      inertia += bestd;
    }
    res.inertia_history.push_back(inertia);
    res.inertia = inertia;
    res.iterations = iter + 1;
    if (!changed && iter > 0) break;

    Mat sums = Mat::Zero(k, d);
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      const int c = res.assignment[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        res.centroids.row(c) =
            sums.row(c) / static_cast<Scalar>(counts[static_cast<std::size_t>(c)]);
      } else {
        // reseed from the point farthest from its own centroid
        Index far = 0;
        Scalar fard = -1.0;
        for (Index i = 0; i < n; ++i) {
          const Scalar dd = sq_dist(points, i, res.centroids,
                                    res.assignment[static_cast<std::size_t>(i)]);
          if (dd > fard) { fard = dd; far = i; }
        }
        res.centroids.row(c) = points.row(far);
        ++res.empty_repairs;
      }
    }
  }
  return res;
}

}  // namespace fog::dsp
