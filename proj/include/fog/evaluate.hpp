#pragma once

#include <string>
#include <vector>

#include "fog/features.hpp"
#include "fog/model.hpp"
#include "fog/signalio.hpp"
#include "fog/types.hpp"

namespace fog::eval {

struct EpochParams {
  Scalar window_s = 2.56;
  Scalar overlap = 0.5;  // fraction of the window shared by neighbors
};

// Per-epoch feature vector = mean of the per-sample values inside the
// window, missing samples excluded; a feature with under half its samples
// present is missing for that epoch. Epochs with every feature missing are
// dropped.
model::EpochDataset epochize(const features::FeatureSet& fs,
                             const EpochParams& params = {});

// FOG when the epoch window intersects any [onset - buffer, offset]; epochs
// touching OTHER_STOP regions are removed; NORMAL otherwise.
model::EpochDataset label_epochs(const model::EpochDataset& data,
                                 const io::AnnotationTrack& ann,
                                 Scalar buffer_s = 3.0,
                                 Scalar window_s = 2.56);

struct ConfusionCounts {
  long tp_events = 0;
  long fn_events = 0;
  long tn_epochs = 0;
  long fp_epochs = 0;
};

// Events at the episode level (any positive epoch within the buffered
// episode detects it), errors at the epoch level for the NORMAL class.
ConfusionCounts score_events(const std::vector<int>& predictions,
                             const model::EpochDataset& data,
                             const io::AnnotationTrack& ann,
                             Scalar buffer_s = 3.0, Scalar window_s = 2.56);

struct Metrics {
  Scalar sensitivity = 0.0;
  Scalar specificity = 0.0;
  Scalar precision = 0.0;
  Scalar mcc = 0.0;
  bool degenerate = false;  // some rate hit a 0/0 and was defined as 0
};

Metrics metrics(const ConfusionCounts& c);

struct PRCurve {
  std::vector<std::pair<Scalar, Scalar>> points;  // (recall, precision)
  Scalar auc = 0.0;
};

// Core sweep on precomputed episode membership: episode_epochs[e] lists the
// epoch indices whose detection counts for episode e. Interpolation between
// achievable points runs through intermediate integer TP counts with FP
// interpolated linearly; AUC is the composite trapezoid over the result.
PRCurve pr_curve_events(const Vec& scores, const std::vector<int>& truth,
                        const std::vector<std::vector<Index>>& episode_epochs);

// Convenience wrapper deriving membership from annotations.
PRCurve pr_curve(const Vec& scores, const model::EpochDataset& data,
                 const io::AnnotationTrack& ann, Scalar buffer_s = 3.0,
                 Scalar window_s = 2.56);

struct SubjectEpochs {
  std::string subject_id;
  model::EpochDataset labeled;  // output of label_epochs
  io::AnnotationTrack ann;
};

struct LosoParams {
  EpochParams epoch;
  Scalar buffer_s = 3.0;
  Scalar tau = 0.5;
  model::RusboostParams boost;
  Scalar su_threshold = 0.85;
  int su_bins = 10;
  bool per_fold_selection = true;  // false: one selection over all subjects
  std::vector<int> feature_subset; // non-empty bypasses FCBF entirely
  bool parallel_folds = true;
};

struct SubjectResult {
  std::string subject_id;
  ConfusionCounts counts;
  Metrics metrics;
  PRCurve pr;
  std::vector<int> selected_features;
};

struct MetricsReport {
  std::vector<SubjectResult> per_subject;
  Metrics mean, sd;
  Scalar mean_auc = 0.0, sd_auc = 0.0;
  std::vector<std::string> log;  // skipped subjects, selection fallbacks
};

MetricsReport loso_cv(const std::vector<SubjectEpochs>& subjects,
                      const LosoParams& params,
                      std::vector<model::DetectorModel>* fold_models = nullptr);

struct SystemComparison {
  std::vector<Scalar> p_raw;   // NaN when too few non-zero pairs
  std::vector<Scalar> p_adj;
  std::vector<bool> valid;
};

// Wilcoxon signed-rank on paired per-subject MCC differences against each
// single-modal system, Bonferroni over the number of comparisons.
SystemComparison compare_systems(
    const std::vector<Scalar>& mcc_multi,
    const std::vector<std::vector<Scalar>>& mcc_singles);

void write_metrics_csv(const MetricsReport& report,
                       const std::filesystem::path& path);
void write_pr_csv(const PRCurve& pr, const std::filesystem::path& path);

}  // namespace fog::eval
