#include "fog/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <set>

#include "fog/characterize.hpp"
#include "fog/select.hpp"

namespace fog::eval {

model::EpochDataset epochize(const features::FeatureSet& fs,
                             const EpochParams& params) {
  if (!(params.window_s > 0.0) || !(params.overlap >= 0.0 && params.overlap < 1.0))
    throw ParamError("bad epoch window or overlap");
  const Scalar rate = fs.rate_hz;
  const Index n = fs.n_samples();
  const Index win = static_cast<Index>(std::llround(params.window_s * rate));
  const Index stride =
      static_cast<Index>(std::llround(params.window_s * (1.0 - params.overlap) * rate));
  if (stride < 1) throw ParamError("epoch stride underflows one sample");

  model::EpochDataset out;
  for (const auto& s : fs.series) out.feature_names.push_back(s.name);

  for (Index start = 0; start + win <= n; start += stride) {
    model::Epoch e;
    e.subject_id = fs.subject_id;
    e.start_s = static_cast<Scalar>(start) / rate;
    e.features = Vec::Constant(static_cast<Index>(fs.series.size()), kMissing);
    bool any = false;
    for (std::size_t f = 0; f < fs.series.size(); ++f) {
      const auto& vals = fs.series[f].values;
      Scalar sum = 0.0;
      Index cnt = 0;
      for (Index i = start; i < start + win; ++i) {
        if (is_missing(vals[i])) continue;
        sum += vals[i];
        ++cnt;
      }
      if (2 * cnt >= win) {
        e.features[static_cast<Index>(f)] = sum / static_cast<Scalar>(cnt);
        any = true;
      }
    }
    if (any) out.epochs.push_back(std::move(e));
  }
  return out;
}

model::EpochDataset label_epochs(const model::EpochDataset& data,
                                 const io::AnnotationTrack& ann,
                                 Scalar buffer_s, Scalar window_s) {
  ann.validate();
  model::EpochDataset out;
  out.feature_names = data.feature_names;
  for (const auto& e : data.epochs) {
    const Scalar lo = e.start_s, hi = e.start_s + window_s;
    bool fog = false, other = false;
    for (const auto& ep : ann.episodes) {
      if (ep.label == io::EpisodeLabel::FOG) {
        if (ep.onset_s - buffer_s < hi && ep.offset_s > lo) fog = true;
      } else {
        if (ep.onset_s < hi && ep.offset_s > lo) other = true;
      }
    }
    if (fog) {
      auto kept = e;
      kept.label = 1;
      out.epochs.push_back(std::move(kept));
    } else if (!other) {
      auto kept = e;
      kept.label = 0;
      out.epochs.push_back(std::move(kept));
    }
    // epochs touching OTHER_STOP regions are dropped from both classes
  }
  return out;
}

ConfusionCounts score_events(const std::vector<int>& predictions,
                             const model::EpochDataset& data,
                             const io::AnnotationTrack& ann, Scalar buffer_s,
                             Scalar window_s) {
  if (predictions.size() != data.epochs.size())
    throw ValidationError("predictions are not aligned with the epochs");

  ConfusionCounts c;
  for (const auto& ep : ann.episodes) {
    if (ep.label != io::EpisodeLabel::FOG) continue;
    bool detected = false;
    for (std::size_t i = 0; i < data.epochs.size(); ++i) {
      if (predictions[i] != 1) continue;
      const Scalar lo = data.epochs[i].start_s;
      const Scalar hi = lo + window_s;
      if (ep.onset_s - buffer_s < hi && ep.offset_s > lo) {
        detected = true;
        break;
      }
    }
    (detected ? c.tp_events : c.fn_events) += 1;
  }
  for (std::size_t i = 0; i < data.epochs.size(); ++i) {
    if (data.epochs[i].label != 0) continue;
    (predictions[i] == 1 ? c.fp_epochs : c.tn_epochs) += 1;
  }
  return c;
}

Metrics metrics(const ConfusionCounts& c) {
  Metrics m;
  auto rate = [&m](Scalar num, Scalar den) {
    if (den <= 0.0) {
      m.degenerate = true;
      return 0.0;
    }
    return num / den;
  };
  m.sensitivity = rate(static_cast<Scalar>(c.tp_events),
                       static_cast<Scalar>(c.tp_events + c.fn_events));
  m.specificity = rate(static_cast<Scalar>(c.tn_epochs),
                       static_cast<Scalar>(c.tn_epochs + c.fp_epochs));
  m.precision = rate(static_cast<Scalar>(c.tp_events),
                     static_cast<Scalar>(c.tp_events + c.fp_epochs));
  const Scalar tp = static_cast<Scalar>(c.tp_events);
  const Scalar fn = static_cast<Scalar>(c.fn_events);
  const Scalar tn = static_cast<Scalar>(c.tn_epochs);
  const Scalar fp = static_cast<Scalar>(c.fp_epochs);
  const Scalar denom =
      std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  if (denom > 0.0) {
    m.mcc = (tp * tn - fp * fn) / denom;
  } else {
    m.mcc = 0.0;
    m.degenerate = true;
  }
  return m;
}

PRCurve pr_curve_events(const Vec& scores, const std::vector<int>& truth,
                        const std::vector<std::vector<Index>>& episode_epochs) {
  const Index n = scores.size();
  if (static_cast<Index>(truth.size()) != n)
    throw ValidationError("scores and truth labels differ in length");
  const long n_episodes = static_cast<long>(episode_epochs.size());
  if (n_episodes == 0) throw ParamError("PR curve undefined with zero positive episodes");

  std::vector<Scalar> thresholds(scores.data(), scores.data() + n);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  struct RawPoint {
    long tp;
    Scalar fp;
  };
  std::vector<RawPoint> raw;
  for (Scalar tau : thresholds) {
    long tp = 0;
    for (const auto& members : episode_epochs) {
      for (Index i : members)
        if (scores[i] >= tau) {
          ++tp;
          break;
        }
    }
    Scalar fp = 0.0;
    for (Index i = 0; i < n; ++i)
      if (truth[static_cast<std::size_t>(i)] == 0 && scores[i] >= tau) fp += 1.0;
    if (!raw.empty() && raw.back().tp == tp && raw.back().fp == fp) continue;
    raw.push_back({tp, fp});
  }

  PRCurve out;
  const Scalar total = static_cast<Scalar>(n_episodes);
  auto precision_at = [](Scalar tp, Scalar fp) {
    return tp + fp > 0.0 ? tp / (tp + fp) : 1.0;
  };

  std::vector<std::pair<Scalar, Scalar>>& pts = out.points;
  bool first_positive_seen = false;
  RawPoint prev{0, 0.0};
  for (const auto& rp : raw) {
    if (rp.tp == 0) {
      prev = rp;
      continue;
    }
    if (!first_positive_seen) {
      // anchor the curve at zero recall with the first achievable precision
      pts.push_back({0.0, precision_at(static_cast<Scalar>(rp.tp), rp.fp)});
      first_positive_seen = true;
    } else if (rp.tp > prev.tp + 1) {
      // TP-parameterized interpolation between achievable points
      const Scalar slope = (rp.fp - prev.fp) / static_cast<Scalar>(rp.tp - prev.tp);
      for (long x = 1; x < rp.tp - prev.tp; ++x) {
        const Scalar tp = static_cast<Scalar>(prev.tp + x);
        const Scalar fp = prev.fp + slope * static_cast<Scalar>(x);
        pts.push_back({tp / total, precision_at(tp, fp)});
      }
    }
    pts.push_back({static_cast<Scalar>(rp.tp) / total,
                   precision_at(static_cast<Scalar>(rp.tp), rp.fp)});
    prev = rp;
  }
  if (pts.empty()) pts.push_back({0.0, 1.0});

  Scalar auc = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    auc += (pts[i].first - pts[i - 1].first) *
           (pts[i].second + pts[i - 1].second) / 2.0;
  out.auc = auc;
  return out;
}

PRCurve pr_curve(const Vec& scores, const model::EpochDataset& data,
                 const io::AnnotationTrack& ann, Scalar buffer_s,
                 Scalar window_s) {
  std::vector<std::vector<Index>> members;
  for (const auto& ep : ann.episodes) {
    if (ep.label != io::EpisodeLabel::FOG) continue;
    std::vector<Index> list;
    for (std::size_t i = 0; i < data.epochs.size(); ++i) {
      const Scalar lo = data.epochs[i].start_s;
      const Scalar hi = lo + window_s;
      if (ep.onset_s - buffer_s < hi && ep.offset_s > lo)
        list.push_back(static_cast<Index>(i));
    }
    members.push_back(std::move(list));
  }
  std::vector<int> truth;
  truth.reserve(data.epochs.size());
  for (const auto& e : data.epochs) truth.push_back(e.label);
  return pr_curve_events(scores, truth, members);
}

namespace {

SubjectResult run_fold(const std::vector<SubjectEpochs>& subjects,
                       std::size_t held_out, const LosoParams& params,
                       const std::vector<int>& global_selection,
                       model::DetectorModel* out_model,
                       std::vector<std::string>* log) {
  const auto& held = subjects[held_out];

  model::EpochDataset train;
  train.feature_names = held.labeled.feature_names;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    if (s == held_out) continue;
    for (const auto& e : subjects[s].labeled.epochs) train.epochs.push_back(e);
  }

  std::vector<int> selection = params.feature_subset;
  if (selection.empty()) {
    if (!params.per_fold_selection) {
      selection = global_selection;
    } else {
      Mat x(static_cast<Index>(train.epochs.size()), train.n_features());
      std::vector<int> y;
      for (std::size_t i = 0; i < train.epochs.size(); ++i) {
        x.row(static_cast<Index>(i)) = train.epochs[i].features.matrix().transpose();
        y.push_back(train.epochs[i].label);
      }
      selection =
          select::fcbf(x, y, params.su_threshold, params.su_bins).selected;
    }
    if (selection.empty()) {
      if (log)
        log->push_back("fold " + held.subject_id +
                       ": FCBF selected nothing at threshold " +
                       std::to_string(params.su_threshold) +
                       "; using all features");
      selection.resize(static_cast<std::size_t>(train.n_features()));
      std::iota(selection.begin(), selection.end(), 0);
    }
  }

  auto boost = params.boost;
  boost.seed = params.boost.seed + held_out;
  const auto model = model::train_rusboost(train, boost, selection);
  if (out_model) *out_model = model;

  const Vec scores = model::predict_scores(model, held.labeled);
  std::vector<int> pred;
  pred.reserve(held.labeled.epochs.size());
  for (Index i = 0; i < scores.size(); ++i)
    pred.push_back(scores[i] >= params.tau ? 1 : 0);

  SubjectResult r;
  r.subject_id = held.subject_id;
  r.selected_features = selection;
  r.counts = score_events(pred, held.labeled, held.ann, params.buffer_s,
                          params.epoch.window_s);
  r.metrics = metrics(r.counts);
  r.pr = pr_curve(scores, held.labeled, held.ann, params.buffer_s,
                  params.epoch.window_s);
  return r;
}

}  // namespace

MetricsReport loso_cv(const std::vector<SubjectEpochs>& subjects,
                      const LosoParams& params,
                      std::vector<model::DetectorModel>* fold_models) {
  if (subjects.size() < 2)
    throw ParamError("LOSO needs at least two subjects");

  MetricsReport report;
  std::vector<std::size_t> eligible;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    long fog = 0;
    for (const auto& ep : subjects[s].ann.episodes)
      if (ep.label == io::EpisodeLabel::FOG) ++fog;
    if (fog == 0) {
      report.log.push_back("subject " + subjects[s].subject_id +
                           " skipped: no FOG episodes");
      continue;
    }
    eligible.push_back(s);
  }

  std::vector<int> global_selection;
  if (!params.per_fold_selection && params.feature_subset.empty()) {
    model::EpochDataset all;
    all.feature_names = subjects[0].labeled.feature_names;
    for (const auto& s : subjects)
      for (const auto& e : s.labeled.epochs) all.epochs.push_back(e);
    Mat x(static_cast<Index>(all.epochs.size()), all.n_features());
    std::vector<int> y;
    for (std::size_t i = 0; i < all.epochs.size(); ++i) {
      x.row(static_cast<Index>(i)) = all.epochs[i].features.matrix().transpose();
      y.push_back(all.epochs[i].label);
    }
    global_selection =
        select::fcbf(x, y, params.su_threshold, params.su_bins).selected;
  }

  if (fold_models) fold_models->resize(eligible.size());
  report.per_subject.resize(eligible.size());
  std::vector<std::vector<std::string>> fold_logs(eligible.size());

  auto run_one = [&](std::size_t k) {
    report.per_subject[k] =
        run_fold(subjects, eligible[k], params, global_selection,
                 fold_models ? &(*fold_models)[k] : nullptr, &fold_logs[k]);
  };

  if (params.parallel_folds && eligible.size() > 1) {
    std::vector<std::future<void>> futs;
    for (std::size_t k = 0; k < eligible.size(); ++k)
      futs.push_back(std::async(std::launch::async, run_one, k));
    for (auto& f : futs) f.get();
  } else {
    for (std::size_t k = 0; k < eligible.size(); ++k) run_one(k);
  }
  for (auto& fl : fold_logs)
    report.log.insert(report.log.end(), fl.begin(), fl.end());

  auto accumulate = [&](auto getter, Scalar& mean, Scalar& sd) {
    const Scalar n = static_cast<Scalar>(report.per_subject.size());
    Scalar sum = 0.0, sum2 = 0.0;
    for (const auto& r : report.per_subject) {
      const Scalar v = getter(r);
      sum += v;
      sum2 += v * v;
    }
    mean = sum / n;
    sd = n > 1 ? std::sqrt(std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0)))
               : 0.0;
  };
  accumulate([](const SubjectResult& r) { return r.metrics.sensitivity; },
             report.mean.sensitivity, report.sd.sensitivity);
  accumulate([](const SubjectResult& r) { return r.metrics.specificity; },
             report.mean.specificity, report.sd.specificity);
  accumulate([](const SubjectResult& r) { return r.metrics.precision; },
             report.mean.precision, report.sd.precision);
  accumulate([](const SubjectResult& r) { return r.metrics.mcc; },
             report.mean.mcc, report.sd.mcc);
  accumulate([](const SubjectResult& r) { return r.pr.auc; }, report.mean_auc,
             report.sd_auc);
  return report;
}

SystemComparison compare_systems(
    const std::vector<Scalar>& mcc_multi,
    const std::vector<std::vector<Scalar>>& mcc_singles) {
  SystemComparison out;
  const int m = static_cast<int>(mcc_singles.size());
  for (const auto& single : mcc_singles) {
    if (single.size() != mcc_multi.size())
      throw ValidationError("per-subject MCC vectors differ in length");
    std::vector<Scalar> diffs;
    for (std::size_t i = 0; i < single.size(); ++i)
      diffs.push_back(mcc_multi[i] - single[i]);
    try {
      out.p_raw.push_back(stats::wilcoxon_signed_rank(diffs));
      out.valid.push_back(true);
    } catch (const ParamError&) {
      out.p_raw.push_back(kMissing);
      out.valid.push_back(false);
    }
  }
  for (Scalar p : out.p_raw)
    out.p_adj.push_back(is_missing(p) ? kMissing
                                      : std::min(1.0, p * static_cast<Scalar>(m)));
  return out;
}

void write_metrics_csv(const MetricsReport& report,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  char buf[40];
  auto cell = [&](Scalar v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "subject,tp_events,fn_events,tn_epochs,fp_epochs,sensitivity,"
         "specificity,precision,mcc,pr_auc\n";
  for (const auto& r : report.per_subject) {
    out << r.subject_id << "," << r.counts.tp_events << "," << r.counts.fn_events
        << "," << r.counts.tn_epochs << "," << r.counts.fp_epochs << ","
        << cell(r.metrics.sensitivity) << "," << cell(r.metrics.specificity)
        << "," << cell(r.metrics.precision) << "," << cell(r.metrics.mcc) << ","
        << cell(r.pr.auc) << "\n";
  }
  out << "mean,,,,," << cell(report.mean.sensitivity) << ","
      << cell(report.mean.specificity) << "," << cell(report.mean.precision)
      << "," << cell(report.mean.mcc) << "," << cell(report.mean_auc) << "\n";
  out << "sd,,,,," << cell(report.sd.sensitivity) << ","
      << cell(report.sd.specificity) << "," << cell(report.sd.precision) << ","
      << cell(report.sd.mcc) << "," << cell(report.sd_auc) << "\n";
}

void write_pr_csv(const PRCurve& pr, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  char buf[40];
  auto cell = [&](Scalar v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "recall,precision\n";
  for (const auto& [r, p] : pr.points) out << cell(r) << "," << cell(p) << "\n";
  out << "# auc," << cell(pr.auc) << "\n";
}

}  // namespace fog::eval
