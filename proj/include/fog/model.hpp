#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fog/types.hpp"

namespace fog::model {

struct Epoch {
  Vec features;  // raw values, NaN = missing
  int label = 0; // 1 = FOG, 0 = NORMAL
  std::string subject_id;
  Scalar start_s = 0.0;
};

struct EpochDataset {
  std::vector<std::string> feature_names;
  std::vector<Epoch> epochs;

  Index n_features() const {
    return static_cast<Index>(feature_names.size());
  }
  void validate() const;
};

struct TreeNode {
  int feature = -1;       // -1 marks a leaf
  Scalar threshold = 0.0; // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  int label = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int predict(const Vec& x) const;
};

struct RusboostParams {
  int n_rounds = 100;
  int max_depth = 3;
  // majority epochs kept per minority epoch each round; infinity disables
  // undersampling (plain AdaBoost)
  Scalar undersample_ratio = 1.0;
  std::uint64_t seed = 0;
};

struct TrainDiagnostics {
  std::vector<Scalar> round_errors;  // weighted error on the full set
  std::vector<Scalar> weight_sums;   // after each round's renormalization
  std::vector<Scalar> weight_mins;
  int discarded_rounds = 0;
  bool early_stopped = false;
};

struct DetectorModel {
  std::vector<std::string> feature_names;  // dataset order
  std::vector<int> selected_features;      // indices into dataset features
  Vec impute_medians;                      // per selected feature
  std::vector<Tree> learners;
  std::vector<Scalar> learner_weights;
  RusboostParams params;
  TrainDiagnostics diagnostics;  // not serialized

  // model input = selected values (imputed) followed by their missing masks
  Index input_dim() const {
    return 2 * static_cast<Index>(selected_features.size());
  }
};

// Boosted depth-limited trees: each round undersamples the majority class by
// boosting weight (without replacement), fits a tree on the round set, and
// computes its AdaBoost weight from the weighted error on the FULL set. A
// round with error >= 0.5 is discarded and resampled, at most 10 times.
DetectorModel train_rusboost(const EpochDataset& data,
                             const RusboostParams& params,
                             std::vector<int> feature_subset = {});

// Weighted vote for FOG, normalized to [0, 1].
Vec predict_scores(const DetectorModel& model, const EpochDataset& data);

std::string model_to_json(const DetectorModel& model);
DetectorModel model_from_json(const std::string& text);
void save_model(const DetectorModel& model, const std::filesystem::path& path);
DetectorModel load_model(const std::filesystem::path& path);

}  // namespace fog::model
