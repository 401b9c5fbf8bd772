#include "fog/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include "fog/dsp.hpp"

namespace fog::stats {

namespace {

constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

Scalar wrap_angle(Scalar a) {
  while (a <= -kPi) a += 2.0 * kPi;
  while (a > kPi) a -= 2.0 * kPi;
  return a;
}

bool window_has_fog(const io::AnnotationTrack& ann, Scalar lo, Scalar hi,
                    const io::Episode* except = nullptr) {
  for (const auto& e : ann.episodes) {
    if (e.label != io::EpisodeLabel::FOG) continue;
    if (except && e.onset_s == except->onset_s && e.offset_s == except->offset_s)
      continue;
    if (e.onset_s < hi && e.offset_s > lo) return true;
  }
  return false;
}

}  // namespace

std::vector<Segment> extract_freezing_segments(
    const features::FeatureSeries& fs, const io::AnnotationTrack& ann,
    const std::string& subject_id, const SegmentSpec& spec) {
  ann.validate();
  const Scalar rate = fs.rate_hz;
  const Index len =
      static_cast<Index>(std::llround((spec.pre_s + spec.post_s) * rate)) + 1;
  const Index n = fs.size();

  std::vector<const io::Episode*> fog_eps;
  for (const auto& e : ann.episodes)
    if (e.label == io::EpisodeLabel::FOG) fog_eps.push_back(&e);

  // A segment survives only when its window is clear of every other episode
  // and of every other episode's window, so neighboring episodes knock each
  // other out pairwise.
  std::vector<Segment> out;
  for (const auto* ep : fog_eps) {
    const auto& e = *ep;
    const Scalar lo = e.onset_s - spec.pre_s;
    const Scalar hi = e.onset_s + spec.post_s;
    const Index start = static_cast<Index>(std::llround(lo * rate));
    if (start < 0 || start + len > n) continue;
    if (window_has_fog(ann, lo, hi, &e)) continue;
    bool window_clash = false;
    for (const auto* other : fog_eps) {
      if (other == ep) continue;
      const Scalar olo = other->onset_s - spec.pre_s;
      const Scalar ohi = other->onset_s + spec.post_s;
      if (olo < hi && ohi > lo) { window_clash = true; break; }
    }
    if (window_clash) continue;

    Segment s;
    s.group = SegmentGroup::FREEZING;
    s.feature_name = fs.name;
    s.subject_id = subject_id;
    s.rate_hz = rate;
    s.anchor_s = e.onset_s;
    s.pre_s = spec.pre_s;
    s.values = fs.values.segment(start, len);
    out.push_back(std::move(s));
  }
  return out;
}

Vec turning_phase(const Vec& spv_unmerged, Scalar rate_hz) {
  const Index n = spv_unmerged.size();
  Vec filled(n);

  // linear interpolation across missing stretches, nearest at the ends
  Index prev = -1;
  for (Index i = 0; i < n; ++i) {
    if (is_missing(spv_unmerged[i])) continue;
    if (prev < 0) {
      for (Index j = 0; j <= i; ++j) filled[j] = spv_unmerged[i];
    } else {
      for (Index j = prev + 1; j <= i; ++j) {
        const Scalar t = static_cast<Scalar>(j - prev) /
                         static_cast<Scalar>(i - prev);
        filled[j] = (1.0 - t) * spv_unmerged[prev] + t * spv_unmerged[i];
      }
    }
    prev = i;
  }
  if (prev < 0) return Vec::Zero(n);  // nothing retained anywhere
  for (Index j = prev + 1; j < n; ++j) filled[j] = spv_unmerged[prev];

  filled -= filled.mean();
  if (filled.abs().maxCoeff() == 0.0) return Vec::Zero(n);
  const Vec smooth = dsp::apply_filter(
      filled, rate_hz, dsp::FilterSpec::lowpass(1.0, 4));
  if (smooth.abs().maxCoeff() == 0.0) return Vec::Zero(n);
  return dsp::hilbert_phase(smooth);
}

ControlMatchResult match_control_segments(const features::FeatureSeries& fs,
                                          const Vec& phase,
                                          const std::vector<Segment>& freezing,
                                          const io::AnnotationTrack& ann,
                                          Scalar tol_rad,
                                          const SegmentSpec& spec) {
  const Scalar rate = fs.rate_hz;
  const Index len =
      static_cast<Index>(std::llround((spec.pre_s + spec.post_s) * rate)) + 1;
  const Index n = fs.size();
  if (phase.size() != n)
    throw ValidationError("phase series is not aligned with the feature");

  ControlMatchResult res;
  std::vector<bool> used(static_cast<std::size_t>(n), false);

  for (std::size_t fi = 0; fi < freezing.size(); ++fi) {
    const auto& fseg = freezing[fi];
    const Index fstart =
        static_cast<Index>(std::llround((fseg.anchor_s - spec.pre_s) * rate));
    const Scalar target = phase[fstart];

    Index best = -1;
    Scalar best_err = tol_rad;
    Scalar best_dist = std::numeric_limits<Scalar>::max();
    for (Index c = 0; c + len <= n; ++c) {
      const Scalar err = std::abs(wrap_angle(phase[c] - target));
      if (err > tol_rad) continue;
      const Scalar lo = static_cast<Scalar>(c) / rate;
      if (window_has_fog(ann, lo, lo + spec.pre_s + spec.post_s)) continue;
      if (used[static_cast<std::size_t>(c)]) continue;
      const Scalar dist = std::abs(static_cast<Scalar>(c - fstart));
      if (err < best_err - 1e-12 ||
          (std::abs(err - best_err) <= 1e-12 && dist < best_dist)) {
        best = c;
        best_err = err;
        best_dist = dist;
      }
    }
    if (best < 0) {
      res.unmatched.push_back(fi);
      continue;
    }
    used[static_cast<std::size_t>(best)] = true;

    Segment s;
    s.group = SegmentGroup::NORMAL_TURNING;
    s.feature_name = fseg.feature_name;
    s.subject_id = fseg.subject_id;
    s.rate_hz = rate;
    s.anchor_s = static_cast<Scalar>(best) / rate + spec.pre_s;
    s.pre_s = spec.pre_s;
    s.values = fs.values.segment(best, len);
    res.controls.push_back(std::move(s));
  }
  return res;
}

std::vector<Segment> normalize_segments(std::vector<Segment> segments) {
  if (segments.size() < 2)
    throw ParamError("normalization needs at least 2 segments");

  std::map<std::pair<std::string, std::string>, std::pair<Scalar, Scalar>> stats;
  std::map<std::pair<std::string, std::string>, std::vector<Segment*>> groups;
  for (auto& s : segments)
    groups[{s.subject_id, s.feature_name}].push_back(&s);

  for (auto& [key, segs] : groups) {
    Scalar sum = 0.0, sum2 = 0.0;
    long count = 0;
    for (const auto* s : segs)
      for (Index i = 0; i < s->values.size(); ++i) {
        if (is_missing(s->values[i])) continue;
        sum += s->values[i];
        sum2 += s->values[i] * s->values[i];
        ++count;
      }
    if (count == 0) {
      for (auto* s : segs) s->constant_flag = true;
      continue;
    }
    const Scalar mean = sum / static_cast<Scalar>(count);
    const Scalar var = sum2 / static_cast<Scalar>(count) - mean * mean;
    const Scalar sd = var > 0.0 ? std::sqrt(var) : 0.0;
    for (auto* s : segs) {
      if (sd == 0.0) {
        s->constant_flag = true;
        for (Index i = 0; i < s->values.size(); ++i)
          if (!is_missing(s->values[i])) s->values[i] = 0.0;
      } else {
        for (Index i = 0; i < s->values.size(); ++i)
          if (!is_missing(s->values[i]))
            s->values[i] = (s->values[i] - mean) / sd;
      }
    }
  }
  return segments;
}

// ---------------------------------------------------------------------------
// t distribution via the regularized incomplete beta function

namespace {

Scalar betacf(Scalar a, Scalar b, Scalar x) {
  const int max_iter = 300;
  const Scalar eps = 1e-14, fpmin = 1e-300;
  const Scalar qab = a + b, qap = a + 1.0, qam = a - 1.0;
  Scalar c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  Scalar h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const Scalar m2 = 2.0 * m;
    Scalar aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const Scalar del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

Scalar reg_inc_beta(Scalar a, Scalar b, Scalar x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const Scalar ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x);
  const Scalar bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0))
    return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

Scalar student_t_two_sided_p(Scalar t, Scalar dof) {
  if (!(dof > 0.0)) return 1.0;
  if (!std::isfinite(t)) return 0.0;
  const Scalar x = dof / (dof + t * t);
  return std::clamp(reg_inc_beta(dof / 2.0, 0.5, x), 0.0, 1.0);
}

Scalar normal_cdf(Scalar z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

TTestBand pointwise_ttest(const std::vector<Segment>& group_a,
                          const std::vector<Segment>& group_b) {
  if (group_a.size() < 2 || group_b.size() < 2)
    throw ParamError("pointwise t-test needs at least 2 segments per group");
  const Index len = group_a[0].values.size();
  const Scalar rate = group_a[0].rate_hz;
  for (const auto* g : {&group_a, &group_b})
    for (const auto& s : *g)
      if (s.values.size() != len)
        throw ValidationError("segments have mismatched lengths");

  TTestBand band;
  band.rel_time_s = Vec(len);
  for (auto* v : {&band.mean_a, &band.lo_a, &band.hi_a, &band.mean_b,
                  &band.lo_b, &band.hi_b, &band.p})
    *v = Vec::Constant(len, kMissing);

  for (Index i = 0; i < len; ++i)
    band.rel_time_s[i] = static_cast<Scalar>(i) / rate - group_a[0].pre_s;

  auto moments = [](const std::vector<Segment>& g, Index i) {
    Scalar sum = 0.0, sum2 = 0.0;
    long n = 0;
    for (const auto& s : g) {
      const Scalar v = s.values[i];
      if (is_missing(v)) continue;
      sum += v;
      sum2 += v * v;
      ++n;
    }
    if (n == 0) return std::tuple<Scalar, Scalar, long>(kMissing, kMissing, 0L);
    const Scalar mean = sum / static_cast<Scalar>(n);
    Scalar var = 0.0;
    if (n > 1) var = std::max(0.0, (sum2 - static_cast<Scalar>(n) * mean * mean) /
                                        static_cast<Scalar>(n - 1));
    return std::tuple<Scalar, Scalar, long>(mean, var, n);
  };

  for (Index i = 0; i < len; ++i) {
    const auto [ma, va, na] = moments(group_a, i);
    const auto [mb, vb, nb] = moments(group_b, i);
    if (na >= 1) {
      const Scalar se = na > 1 ? std::sqrt(va / static_cast<Scalar>(na)) : 0.0;
      band.mean_a[i] = ma;
      band.lo_a[i] = ma - 1.96 * se;
      band.hi_a[i] = ma + 1.96 * se;
    }
    if (nb >= 1) {
      const Scalar se = nb > 1 ? std::sqrt(vb / static_cast<Scalar>(nb)) : 0.0;
      band.mean_b[i] = mb;
      band.lo_b[i] = mb - 1.96 * se;
      band.hi_b[i] = mb + 1.96 * se;
    }
    if (na < 2 || nb < 2) {
      band.p[i] = 1.0;
      continue;
    }
    const Scalar qa = va / static_cast<Scalar>(na);
    const Scalar qb = vb / static_cast<Scalar>(nb);
    if (qa + qb <= 0.0) {
      band.p[i] = ma == mb ? 1.0 : 0.0;
      continue;
    }
    const Scalar t = (ma - mb) / std::sqrt(qa + qb);
    const Scalar dof =
        (qa + qb) * (qa + qb) /
        (qa * qa / static_cast<Scalar>(na - 1) + qb * qb / static_cast<Scalar>(nb - 1));
    band.p[i] = student_t_two_sided_p(t, dof);
  }

  std::vector<Scalar> ps(band.p.data(), band.p.data() + band.p.size());
  const auto adj = bonferroni(ps, static_cast<int>(ps.size()));
  band.p_adj = Eigen::Map<const Vec>(adj.data(), static_cast<Index>(adj.size()));
  return band;
}

Scalar wilcoxon_signed_rank(const std::vector<Scalar>& diffs) {
  std::vector<Scalar> mags;
  std::vector<int> signs;
  for (Scalar d : diffs) {
    if (d == 0.0) continue;
    mags.push_back(std::abs(d));
    signs.push_back(d > 0.0 ? 1 : -1);
  }
  const std::size_t n = mags.size();
  if (n == 0) return 1.0;  // all differences zero
  if (n < 5) throw ParamError("fewer than 5 non-zero differences");

  // midranks, doubled so they stay integral under ties
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return mags[a] < mags[b]; });
  std::vector<long> rank2(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && mags[order[j + 1]] == mags[order[i]]) ++j;
    const long mid2 = static_cast<long>(i + j) + 2;  // 2 * midrank
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = mid2;
    i = j + 1;
  }

  long w2 = 0, total2 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    total2 += rank2[k];
    if (signs[k] > 0) w2 += rank2[k];
  }

  if (n <= 20) {
    // exact null distribution over all sign patterns
    const long max2 = total2;
    std::vector<Scalar> count(static_cast<std::size_t>(max2) + 1, 0.0);
    count[0] = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const long r = rank2[k];
      for (long s = max2; s >= r; --s)
        count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];
    }
    Scalar le = 0.0, ge = 0.0, all = 0.0;
    for (long s = 0; s <= max2; ++s) {
      all += count[static_cast<std::size_t>(s)];
      if (s <= w2) le += count[static_cast<std::size_t>(s)];
      if (s >= w2) ge += count[static_cast<std::size_t>(s)];
    }
    return std::min(1.0, 2.0 * std::min(le, ge) / all);
  }

  // normal approximation: W+ is a sum of rank * Bernoulli(1/2)
  Scalar mean2 = 0.0, var4 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mean2 += static_cast<Scalar>(rank2[k]) / 2.0;
    var4 += static_cast<Scalar>(rank2[k]) * static_cast<Scalar>(rank2[k]) / 4.0;
  }
  const Scalar sd2 = std::sqrt(var4);
  Scalar z;
  if (static_cast<Scalar>(w2) > mean2)
    z = (static_cast<Scalar>(w2) - mean2 - 1.0) / sd2;  // continuity: 0.5 on rank scale
  else
    z = (static_cast<Scalar>(w2) - mean2 + 1.0) / sd2;
  const Scalar p = 2.0 * (1.0 - normal_cdf(std::abs(z)));
  return std::min(1.0, p);
}

std::vector<Scalar> bonferroni(const std::vector<Scalar>& p_values, int m) {
  if (m < static_cast<int>(p_values.size()))
    throw ParamError("Bonferroni m must cover the number of comparisons");
  std::vector<Scalar> out;
  out.reserve(p_values.size());
  for (Scalar p : p_values)
    out.push_back(std::min(1.0, p * static_cast<Scalar>(m)));
  return out;
}

void write_band_csv(const TTestBand& band, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "relative_time_s,meanA,loA,hiA,meanB,loB,hiB,p,p_adj\n";
  char buf[40];
  auto cell = [&](Scalar v) {
    if (is_missing(v)) return std::string();
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (Index i = 0; i < band.rel_time_s.size(); ++i) {
    out << cell(band.rel_time_s[i]) << "," << cell(band.mean_a[i]) << ","
        << cell(band.lo_a[i]) << "," << cell(band.hi_a[i]) << ","
        << cell(band.mean_b[i]) << "," << cell(band.lo_b[i]) << ","
        << cell(band.hi_b[i]) << "," << cell(band.p[i]) << ","
        << cell(band.p_adj[i]) << "\n";
  }
}

}  // namespace fog::stats
