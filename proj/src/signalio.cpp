#include "fog/signalio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace fog::io {

namespace {

using nlohmann::json;

std::string format_full(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FormatError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::EEG: return "EEG";
    case ChannelKind::EOG: return "EOG";
    case ChannelKind::ECG: return "ECG";
    case ChannelKind::ACCEL: return "ACCEL";
    case ChannelKind::FOOTSWITCH: return "FOOTSWITCH";
  }
  return "?";
}

ChannelKind channel_kind_from_string(const std::string& s) {
  if (s == "EEG") return ChannelKind::EEG;
  if (s == "EOG") return ChannelKind::EOG;
  if (s == "ECG") return ChannelKind::ECG;
  if (s == "ACCEL") return ChannelKind::ACCEL;
  if (s == "FOOTSWITCH") return ChannelKind::FOOTSWITCH;
  throw FormatError("unknown channel kind: " + s);
}

const Channel* Recording::find(const std::string& label) const {
  for (const auto& c : channels)
    if (c.label == label) return &c;
  return nullptr;
}

const Channel& Recording::get(const std::string& label) const {
  const Channel* c = find(label);
  if (!c) throw ValidationError("no channel labeled " + label);
  return *c;
}

std::vector<const Channel*> Recording::find_kind(ChannelKind kind) const {
  std::vector<const Channel*> out;
  for (const auto& c : channels)
    if (c.kind == kind) out.push_back(&c);
  return out;
}

void Recording::validate() const {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const auto& c = channels[i];
    if (!(c.rate_hz > 0.0))
      throw ValidationError("channel " + c.label + ": rate must be positive");
    for (std::size_t j = i + 1; j < channels.size(); ++j)
      if (channels[j].label == c.label)
        throw ValidationError("duplicate channel label " + c.label);
    const auto expected = std::llround(duration_s * c.rate_hz);
    if (std::llabs(expected - c.samples.size()) > 1)
      throw ValidationError(
          "channel " + c.label + ": sample count " +
          std::to_string(c.samples.size()) + " inconsistent with duration " +
          std::to_string(duration_s) + " s at " + std::to_string(c.rate_hz) +
          " Hz");
    for (Index k = 0; k < c.samples.size(); ++k)
      if (!std::isfinite(c.samples[k]))
        throw ValidationError("channel " + c.label +
                              ": non-finite sample at index " +
                              std::to_string(k));
  }
}

void AnnotationTrack::validate() const {
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& e = episodes[i];
    if (!(e.onset_s < e.offset_s))
      throw ValidationError("episode " + std::to_string(i) +
                            ": onset must precede offset");
    if (i > 0 && episodes[i - 1].offset_s > e.onset_s)
      throw ValidationError("episodes overlap or are unsorted at index " +
                            std::to_string(i));
  }
}

Scalar AnnotationTrack::span_end_s() const {
  Scalar end = 0.0;
  for (const auto& e : episodes) end = std::max(end, e.offset_s);
  return end;
}

// ---------------------------------------------------------------------------
// Recording CSV + sidecar

void write_recording(const Recording& rec,
                     const std::filesystem::path& csv_path,
                     const std::filesystem::path& sidecar_path) {
  rec.validate();

  json side;
  side["subject_id"] = rec.subject_id;
  side["duration_s"] = rec.duration_s;
  side["channels"] = json::array();
  for (const auto& c : rec.channels) {
    json jc;
    jc["label"] = c.label;
    jc["kind"] = to_string(c.kind);
    jc["rate_hz"] = c.rate_hz;
    switch (c.kind) {
      case ChannelKind::EEG: jc["electrode"] = c.electrode; break;
      case ChannelKind::EOG: jc["axis"] = c.axis; break;
      case ChannelKind::ECG: jc["lead"] = c.lead; break;
      case ChannelKind::ACCEL:
        jc["placement"] = c.placement;
        jc["axis"] = c.axis;
        break;
      case ChannelKind::FOOTSWITCH:
        jc["foot"] = c.foot;
        jc["switch_index"] = c.switch_index;
        break;
    }
    side["channels"].push_back(jc);
  }
  {
    std::ofstream out(sidecar_path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + sidecar_path.string());
    out << side.dump(2) << "\n";
  }

  Scalar max_rate = 0.0;
  Index max_rows = 0;
  for (const auto& c : rec.channels) {
    max_rate = std::max(max_rate, c.rate_hz);
    max_rows = std::max(max_rows, c.samples.size());
  }

  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + csv_path.string());
  out << "time_s";
  for (const auto& c : rec.channels) out << "," << c.label;
  out << "\n";
  for (Index i = 0; i < max_rows; ++i) {
    out << format_full(static_cast<Scalar>(i) / max_rate);
    for (const auto& c : rec.channels) {
      out << ",";
      if (i < c.samples.size()) out << format_full(c.samples[i]);
    }
    out << "\n";
  }
}

Recording load_recording(const std::filesystem::path& csv_path,
                         const std::filesystem::path& sidecar_path) {
  json side;
  try {
    side = json::parse(read_file(sidecar_path));
  } catch (const json::exception& e) {
    throw FormatError("sidecar " + sidecar_path.string() + ": " + e.what());
  }

  Recording rec;
  try {
    rec.subject_id = side.at("subject_id").get<std::string>();
    rec.duration_s = side.at("duration_s").get<Scalar>();
    for (const auto& jc : side.at("channels")) {
      Channel c;
      c.label = jc.at("label").get<std::string>();
      c.kind = channel_kind_from_string(jc.at("kind").get<std::string>());
      c.rate_hz = jc.at("rate_hz").get<Scalar>();
      if (jc.contains("electrode")) c.electrode = jc["electrode"];
      if (jc.contains("axis")) c.axis = jc["axis"];
      if (jc.contains("lead")) c.lead = jc["lead"];
      if (jc.contains("placement")) c.placement = jc["placement"];
      if (jc.contains("foot")) c.foot = jc["foot"];
      if (jc.contains("switch_index")) c.switch_index = jc["switch_index"];
      rec.channels.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw FormatError("sidecar " + sidecar_path.string() + ": " + e.what());
  }

  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV " + csv_path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header[0] != "time_s")
    throw FormatError(csv_path.string() + ": first column must be time_s");
  if (header.size() != rec.channels.size() + 1)
    throw FormatError(csv_path.string() + ": column count does not match sidecar");
  for (std::size_t i = 0; i < rec.channels.size(); ++i)
    if (header[i + 1] != rec.channels[i].label)
      throw FormatError(csv_path.string() + ": column " + header[i + 1] +
                        " does not match sidecar label " +
                        rec.channels[i].label);

  std::vector<std::vector<Scalar>> cols(rec.channels.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t start = 0, col = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      const std::size_t end = comma == std::string::npos ? line.size() : comma;
      if (col > 0) {
        const std::size_t ci = col - 1;
        if (ci >= cols.size())
          throw FormatError(csv_path.string() + ": too many cells in row " +
                            std::to_string(row));
        if (end > start) {
          const std::string cell = line.substr(start, end - start);
          char* endp = nullptr;
          const Scalar v = std::strtod(cell.c_str(), &endp);
          if (endp == cell.c_str())
            throw FormatError(csv_path.string() + ": bad number '" + cell +
                              "' in row " + std::to_string(row));
          if (!std::isfinite(v))
            throw ValidationError("channel " + rec.channels[ci].label +
                                  ": non-finite sample at index " +
                                  std::to_string(cols[ci].size()));
          if (cols[ci].size() != row)
            throw FormatError(csv_path.string() + ": channel " +
                              rec.channels[ci].label +
                              " has a gap before row " + std::to_string(row));
          cols[ci].push_back(v);
        }
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
      ++col;
    }
    ++row;
  }

  for (std::size_t i = 0; i < cols.size(); ++i) {
    rec.channels[i].samples =
        Eigen::Map<const Vec>(cols[i].data(), static_cast<Index>(cols[i].size()));
  }
  rec.validate();
  return rec;
}

Recording load_recording(const std::filesystem::path& base) {
  std::filesystem::path csv = base;
  csv += ".csv";
  std::filesystem::path side = base;
  side += ".json";
  return load_recording(csv, side);
}

// ---------------------------------------------------------------------------
// Annotations

std::vector<AnnotationTrack> load_annotations(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw FormatError("annotations " + path.string() + ": " + e.what());
  }
  std::vector<AnnotationTrack> tracks;
  try {
    for (const auto& jt : j) {
      AnnotationTrack t;
      t.rater_id = jt.at("rater_id").get<std::string>();
      for (const auto& je : jt.at("episodes")) {
        Episode e;
        e.onset_s = je.at("onset_s").get<Scalar>();
        e.offset_s = je.at("offset_s").get<Scalar>();
        const std::string lab = je.at("label").get<std::string>();
        if (lab == "FOG") e.label = EpisodeLabel::FOG;
        else if (lab == "OTHER_STOP") e.label = EpisodeLabel::OTHER_STOP;
        else throw FormatError("unknown episode label " + lab);
        t.episodes.push_back(e);
      }
      t.validate();
      tracks.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw FormatError("annotations " + path.string() + ": " + e.what());
  }
  return tracks;
}

void write_annotations(const std::vector<AnnotationTrack>& tracks,
                       const std::filesystem::path& path) {
  json j = json::array();
  for (const auto& t : tracks) {
    json jt;
    jt["rater_id"] = t.rater_id;
    jt["episodes"] = json::array();
    for (const auto& e : t.episodes) {
      json je;
      je["onset_s"] = e.onset_s;
      je["offset_s"] = e.offset_s;
      je["label"] = e.label == EpisodeLabel::FOG ? "FOG" : "OTHER_STOP";
      jt["episodes"].push_back(je);
    }
    j.push_back(jt);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Rational resampling

namespace {

Scalar bessel_i0(Scalar x) {
  Scalar sum = 1.0, term = 1.0;
  const Scalar q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<Scalar>(k) * static_cast<Scalar>(k));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

// Kaiser-windowed sinc lowpass at normalized cutoff nu_c (cycles/sample),
// 60 dB stopband.
std::vector<Scalar> kaiser_sinc(Scalar nu_c, Scalar nu_transition) {
  const Scalar atten_db = 60.0;
  const Scalar beta = 0.1102 * (atten_db - 8.7);
  int taps = static_cast<int>(std::ceil(
      (atten_db - 7.95) / (2.285 * 2.0 * std::numbers::pi * nu_transition)));
  if (taps % 2 == 0) ++taps;
  const int mid = taps / 2;
  std::vector<Scalar> h(static_cast<std::size_t>(taps));
  const Scalar denom = bessel_i0(beta);
  Scalar sum = 0.0;
  for (int i = 0; i < taps; ++i) {
    const Scalar m = static_cast<Scalar>(i - mid);
    const Scalar arg = 2.0 * std::numbers::pi * nu_c * m;
    const Scalar sinc = m == 0.0 ? 2.0 * nu_c
                                 : std::sin(arg) / (std::numbers::pi * m);
    const Scalar r = 2.0 * m / static_cast<Scalar>(taps - 1);
    const Scalar w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
    h[static_cast<std::size_t>(i)] = sinc * w;
    sum += h[static_cast<std::size_t>(i)];
  }
  for (auto& v : h) v /= sum;  // unity DC gain
  return h;
}

}  // namespace

Vec resample(const Vec& x, int up, int down) {
  if (up < 1 || down < 1) throw ParamError("resample factors must be >= 1");
  const int g = std::gcd(up, down);
  const int L = up / g, M = down / g;
  if (L == M) return x;
  if (L > M) throw ParamError("upsampling not supported");

  const Index n = x.size();
  if (n < 2) throw ParamError("signal too short to resample");

  // Anti-alias cutoff at 0.45x the output rate, expressed at the upsampled
  // rate; transition finishes at the output Nyquist.
  const Scalar nu_c = 0.45 / static_cast<Scalar>(M);
  const Scalar nu_tr = 0.05 / static_cast<Scalar>(M);
  const std::vector<Scalar> h = kaiser_sinc(nu_c, nu_tr);
  const Index taps = static_cast<Index>(h.size());
  const Index delay = taps / 2;

  const Index n_out =
      (n * static_cast<Index>(L) + static_cast<Index>(M) / 2) /
      static_cast<Index>(M);
  Vec y(n_out);
  const Scalar gain = static_cast<Scalar>(L);
  for (Index k = 0; k < n_out; ++k) {
    const Index u = k * M + delay;  // upsampled-domain index of tap 0
    // only taps hitting nonzero (inserted) samples contribute
    Index j = u % L;
    Scalar acc = 0.0;
    for (; j < taps; j += L) {
      Index src = (u - j) / L;
      if (src < 0) src = 0;
      else if (src >= n) src = n - 1;  // edge replication
      acc += h[static_cast<std::size_t>(j)] * x[src];
    }
    y[k] = gain * acc;
  }
  return y;
}

Channel resample_channel(const Channel& ch, Scalar target_hz) {
  if (!(target_hz > 0.0)) throw ParamError("target rate must be positive");
  if (target_hz > ch.rate_hz + 1e-9)
    throw ParamError("upsampling not supported: " + ch.label + " at " +
                     std::to_string(ch.rate_hz) + " Hz to " +
                     std::to_string(target_hz) + " Hz");
  const auto li = std::llround(target_hz);
  const auto mi = std::llround(ch.rate_hz);
  if (std::abs(target_hz - static_cast<Scalar>(li)) > 1e-9 ||
      std::abs(ch.rate_hz - static_cast<Scalar>(mi)) > 1e-9)
    throw ParamError("non-integer sample rates unsupported");
  if (li == mi) return ch;

  Channel out = ch;
  out.rate_hz = target_hz;
  out.samples = resample(ch.samples, static_cast<int>(li), static_cast<int>(mi));
  return out;
}

Recording resample_recording(const Recording& rec, Scalar target_hz) {
  Recording out;
  out.subject_id = rec.subject_id;
  out.duration_s = rec.duration_s;
  out.channels.reserve(rec.channels.size());
  for (const auto& c : rec.channels) out.channels.push_back(resample_channel(c, target_hz));
  return out;
}

// ---------------------------------------------------------------------------
// Inter-rater agreement

namespace {

enum FrameLabel : int { kNone = 0, kFog = 1, kOther = 2 };

std::vector<int> rasterize(const AnnotationTrack& t, Scalar frame_s,
                           Index n_frames) {
  std::vector<int> frames(static_cast<std::size_t>(n_frames), kNone);
  for (const auto& e : t.episodes) {
    const int lab = e.label == EpisodeLabel::FOG ? kFog : kOther;
    const Index first = static_cast<Index>(std::floor(e.onset_s / frame_s));
    const Index last = static_cast<Index>(std::ceil(e.offset_s / frame_s));
    for (Index f = std::max<Index>(first, 0); f < std::min(last, n_frames); ++f) {
      const Scalar lo = std::max(e.onset_s, static_cast<Scalar>(f) * frame_s);
      const Scalar hi =
          std::min(e.offset_s, static_cast<Scalar>(f + 1) * frame_s);
      if (hi - lo > frame_s / 2.0) frames[static_cast<std::size_t>(f)] = lab;
    }
  }
  return frames;
}

Index frame_count(const AnnotationTrack& a, const AnnotationTrack& b,
                  Scalar frame_s, const AnnotationTrack* c = nullptr) {
  Scalar end = std::max(a.span_end_s(), b.span_end_s());
  if (c) end = std::max(end, c->span_end_s());
  return static_cast<Index>(std::ceil(end / frame_s - 1e-9));
}

}  // namespace

AgreementStats interrater_stats(const AnnotationTrack& a,
                                const AnnotationTrack& b, Scalar frame_s) {
  if (!(frame_s > 0.0)) throw ParamError("frame_s must be positive");
  a.validate();
  b.validate();
  const Index n = frame_count(a, b, frame_s);
  if (n == 0) throw ParamError("empty annotation span");
  const auto fa = rasterize(a, frame_s, n);
  const auto fb = rasterize(b, frame_s, n);

  Index agree = 0, fog_a = 0, fog_b = 0;
  for (Index i = 0; i < n; ++i) {
    const bool xa = fa[static_cast<std::size_t>(i)] == kFog;
    const bool xb = fb[static_cast<std::size_t>(i)] == kFog;
    if (xa == xb) ++agree;
    if (xa) ++fog_a;
    if (xb) ++fog_b;
  }
  const Scalar po = static_cast<Scalar>(agree) / static_cast<Scalar>(n);
  const Scalar pa = static_cast<Scalar>(fog_a) / static_cast<Scalar>(n);
  const Scalar pb = static_cast<Scalar>(fog_b) / static_cast<Scalar>(n);
  const Scalar pe = pa * pb + (1.0 - pa) * (1.0 - pb);

  AgreementStats s;
  s.percent_agreement = po;
  if (1.0 - pe < 1e-12) {
    if (po >= 1.0 - 1e-12) s.kappa = 1.0;
    else
      throw ValidationError("degenerate marginals: chance agreement is 1");
  } else {
    s.kappa = (po - pe) / (1.0 - pe);
  }
  return s;
}

AnnotationTrack adjudicate(const AnnotationTrack& a, const AnnotationTrack& b,
                           const AnnotationTrack& tiebreak, Scalar frame_s) {
  if (!(frame_s > 0.0)) throw ParamError("frame_s must be positive");
  a.validate();
  b.validate();
  tiebreak.validate();
  const Index n = frame_count(a, b, frame_s, &tiebreak);
  const auto fa = rasterize(a, frame_s, n);
  const auto fb = rasterize(b, frame_s, n);
  const auto ft = rasterize(tiebreak, frame_s, n);

  AnnotationTrack out;
  out.rater_id = "adjudicated";
  int cur = kNone;
  Index start = 0;
  auto flush = [&](Index end_frame) {
    if (cur == kNone) return;
    Episode e;
    e.onset_s = static_cast<Scalar>(start) * frame_s;
    e.offset_s = static_cast<Scalar>(end_frame) * frame_s;
    e.label = cur == kFog ? EpisodeLabel::FOG : EpisodeLabel::OTHER_STOP;
    out.episodes.push_back(e);
  };
  for (Index i = 0; i < n; ++i) {
    const int la = fa[static_cast<std::size_t>(i)];
    const int lb = fb[static_cast<std::size_t>(i)];
    const int lab = la == lb ? la : ft[static_cast<std::size_t>(i)];
    if (lab != cur) {
      flush(i);
      cur = lab;
      start = i;
    }
  }
  flush(n);
  return out;
}

}  // namespace fog::io
