#include "fog/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace fog::model {

using nlohmann::json;

void EpochDataset::validate() const {
  for (const auto& e : epochs)
    if (e.features.size() != n_features())
      throw ValidationError("epoch feature vector length " +
                            std::to_string(e.features.size()) +
                            " does not match dataset width " +
                            std::to_string(n_features()));
}

int Tree::predict(const Vec& x) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = nodes[static_cast<std::size_t>(node)];
    node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(node)].label;
}

namespace {

// Weighted CART with deterministic tie-breaking: features in index order,
// thresholds at midpoints of consecutive distinct values, strictly better
// Gini decrease to switch.
class TreeBuilder {
 public:
  TreeBuilder(const Mat& x, const std::vector<int>& y,
              const std::vector<Scalar>& w, int max_depth)
      : x_(x), y_(y), w_(w), max_depth_(max_depth) {}

  Tree build(const std::vector<Index>& idx) {
    Tree t;
    grow(idx, 0, t);
    return t;
  }

 private:
  int grow(const std::vector<Index>& idx, int depth, Tree& t) {
    Scalar w0 = 0.0, w1 = 0.0;
    for (Index i : idx)
      (y_[static_cast<std::size_t>(i)] == 1 ? w1 : w0) +=
          w_[static_cast<std::size_t>(i)];
    const int node_id = static_cast<int>(t.nodes.size());
    t.nodes.push_back({});
    t.nodes[static_cast<std::size_t>(node_id)].label = w1 > w0 ? 1 : 0;

    const Scalar wt = w0 + w1;
    if (depth >= max_depth_ || idx.size() < 2 || w0 == 0.0 || w1 == 0.0 ||
        wt <= 0.0)
      return node_id;

    const Scalar parent_score = (w0 * w0 + w1 * w1) / wt;
    int best_f = -1;
    Scalar best_thr = 0.0, best_gain = 1e-12;

    std::vector<Index> order(idx);
    for (Index f = 0; f < x_.cols(); ++f) {
      std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        return x_(a, f) < x_(b, f);
      });
      Scalar l0 = 0.0, l1 = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const Index i = order[k];
        (y_[static_cast<std::size_t>(i)] == 1 ? l1 : l0) +=
            w_[static_cast<std::size_t>(i)];
        const Scalar xa = x_(i, f), xb = x_(order[k + 1], f);
        if (xa == xb) continue;
        const Scalar wl = l0 + l1, wr = wt - wl;
        if (wl <= 0.0 || wr <= 0.0) continue;
        const Scalar r0 = w0 - l0, r1 = w1 - l1;
        const Scalar score =
            (l0 * l0 + l1 * l1) / wl + (r0 * r0 + r1 * r1) / wr;
        const Scalar gain = score - parent_score;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_thr = xa + (xb - xa) / 2.0;
        }
      }
    }
    if (best_f < 0) return node_id;

    std::vector<Index> left, right;
    for (Index i : idx)
      (x_(i, best_f) <= best_thr ? left : right).push_back(i);
    if (left.empty() || right.empty()) return node_id;

    t.nodes[static_cast<std::size_t>(node_id)].feature = best_f;
    t.nodes[static_cast<std::size_t>(node_id)].threshold = best_thr;
    const int l = grow(left, depth + 1, t);
    t.nodes[static_cast<std::size_t>(node_id)].left = l;
    const int r = grow(right, depth + 1, t);
    t.nodes[static_cast<std::size_t>(node_id)].right = r;
    return node_id;
  }

  const Mat& x_;
  const std::vector<int>& y_;
  const std::vector<Scalar>& w_;
  int max_depth_;
};

// imputed values followed by missing-mask bits
Mat transform_features(const EpochDataset& data,
                       const std::vector<int>& selected,
                       const Vec& medians) {
  const Index n = static_cast<Index>(data.epochs.size());
  const Index m = static_cast<Index>(selected.size());
  Mat x(n, 2 * m);
  for (Index i = 0; i < n; ++i) {
    const auto& feats = data.epochs[static_cast<std::size_t>(i)].features;
    for (Index j = 0; j < m; ++j) {
      const Scalar v = feats[selected[static_cast<std::size_t>(j)]];
      if (is_missing(v)) {
        x(i, j) = medians[j];
        x(i, m + j) = 1.0;
      } else {
        x(i, j) = v;
        x(i, m + j) = 0.0;
      }
    }
  }
  return x;
}

Vec training_medians(const EpochDataset& data, const std::vector<int>& selected) {
  Vec medians(static_cast<Index>(selected.size()));
  std::vector<Scalar> vals;
  for (std::size_t j = 0; j < selected.size(); ++j) {
    vals.clear();
    for (const auto& e : data.epochs) {
      const Scalar v = e.features[selected[j]];
      if (!is_missing(v)) vals.push_back(v);
    }
    if (vals.empty()) {
      medians[static_cast<Index>(j)] = 0.0;
      continue;
    }
    std::sort(vals.begin(), vals.end());
    const std::size_t mid = vals.size() / 2;
    medians[static_cast<Index>(j)] =
        vals.size() % 2 == 1 ? vals[mid] : 0.5 * (vals[mid - 1] + vals[mid]);
  }
  return medians;
}

}  // namespace

DetectorModel train_rusboost(const EpochDataset& data,
                             const RusboostParams& params,
                             std::vector<int> feature_subset) {
  data.validate();
  if (params.n_rounds < 1) throw ParamError("n_rounds must be >= 1");
  if (params.max_depth < 1) throw ParamError("max_depth must be >= 1");

  if (feature_subset.empty()) {
    feature_subset.resize(static_cast<std::size_t>(data.n_features()));
    std::iota(feature_subset.begin(), feature_subset.end(), 0);
  }
  for (int f : feature_subset)
    if (f < 0 || f >= data.n_features())
      throw ParamError("feature subset index out of range");

  const Index n = static_cast<Index>(data.epochs.size());
  std::vector<int> y(static_cast<std::size_t>(n));
  Index n_pos = 0;
  for (Index i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = data.epochs[static_cast<std::size_t>(i)].label;
    if (y[static_cast<std::size_t>(i)] == 1) ++n_pos;
  }
  const Index n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw ParamError("class coverage: training data needs both classes");
  if (n_pos < 10 || n_neg < 10)
    throw ParamError("class coverage: need at least 10 epochs per class");

  DetectorModel model;
  model.feature_names = data.feature_names;
  model.selected_features = feature_subset;
  model.impute_medians = training_medians(data, feature_subset);
  model.params = params;

  const Mat x = transform_features(data, feature_subset, model.impute_medians);

  const int minority_label = n_pos <= n_neg ? 1 : 0;
  std::vector<Index> minority_idx, majority_idx;
  for (Index i = 0; i < n; ++i)
    (y[static_cast<std::size_t>(i)] == minority_label ? minority_idx
                                                      : majority_idx)
        .push_back(i);

  std::vector<Scalar> w(static_cast<std::size_t>(n),
                        1.0 / static_cast<Scalar>(n));
  Rng rng(params.seed);
  const bool no_undersample = std::isinf(params.undersample_ratio);

  for (int round = 0; round < params.n_rounds; ++round) {
    Tree tree;
    Scalar err = 0.0;
    std::vector<int> pred(static_cast<std::size_t>(n));
    bool round_ok = false;

    for (int attempt = 0; attempt <= 10; ++attempt) {
      std::vector<Index> round_set;
      if (no_undersample) {
        round_set.resize(static_cast<std::size_t>(n));
        std::iota(round_set.begin(), round_set.end(), Index{0});
      } else {
        round_set = minority_idx;
        const Index target = std::min<Index>(
            static_cast<Index>(majority_idx.size()),
            static_cast<Index>(std::llround(
                params.undersample_ratio *
                static_cast<Scalar>(minority_idx.size()))));
        // weighted sampling without replacement (Efraimidis-Spirakis keys)
        std::vector<std::pair<Scalar, Index>> keys;
        keys.reserve(majority_idx.size());
        for (Index i : majority_idx) {
          const Scalar u = rng.uniform();
          const Scalar wi = w[static_cast<std::size_t>(i)];
          const Scalar key = wi > 0.0 ? std::log(u) / wi
                                      : -std::numeric_limits<Scalar>::infinity();
          keys.push_back({key, i});
        }
        std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
          if (a.first != b.first) return a.first > b.first;
          return a.second < b.second;
        });
        for (Index k = 0; k < target; ++k)
          round_set.push_back(keys[static_cast<std::size_t>(k)].second);
        std::sort(round_set.begin(), round_set.end());
      }

      tree = TreeBuilder(x, y, w, params.max_depth).build(round_set);

      err = 0.0;
      for (Index i = 0; i < n; ++i) {
        pred[static_cast<std::size_t>(i)] = tree.predict(x.row(i).array());
        if (pred[static_cast<std::size_t>(i)] != y[static_cast<std::size_t>(i)])
          err += w[static_cast<std::size_t>(i)];
      }
      if (err < 0.5) {
        round_ok = true;
        break;
      }
      ++model.diagnostics.discarded_rounds;
      if (no_undersample) break;  // resampling cannot change anything
    }
    if (!round_ok) {
      model.diagnostics.early_stopped = true;
      break;
    }

    const Scalar err_floor = std::max(err, 1e-10);
    const Scalar alpha = 0.5 * std::log((1.0 - err_floor) / err_floor);

    Scalar sum = 0.0;
    for (Index i = 0; i < n; ++i) {
      const bool correct =
          pred[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(i)];
      w[static_cast<std::size_t>(i)] *= std::exp(correct ? -alpha : alpha);
      sum += w[static_cast<std::size_t>(i)];
    }
    Scalar wmin = std::numeric_limits<Scalar>::max();
    for (auto& wi : w) {
      wi /= sum;
      wmin = std::min(wmin, wi);
    }
    Scalar check = 0.0;
    for (Scalar wi : w) check += wi;

    model.learners.push_back(std::move(tree));
    model.learner_weights.push_back(alpha);
    model.diagnostics.round_errors.push_back(err);
    model.diagnostics.weight_sums.push_back(check);
    model.diagnostics.weight_mins.push_back(wmin);
  }
  return model;
}

Vec predict_scores(const DetectorModel& model, const EpochDataset& data) {
  data.validate();
  for (int f : model.selected_features)
    if (f >= data.n_features())
      throw ValidationError("dataset is narrower than the model's features");

  const Mat x = transform_features(data, model.selected_features,
                                   model.impute_medians);
  const Index n = x.rows();
  Vec scores(n);
  Scalar total = 0.0;
  for (Scalar a : model.learner_weights) total += a;
  for (Index i = 0; i < n; ++i) {
    if (total <= 0.0) {
      scores[i] = 0.5;
      continue;
    }
    Scalar vote = 0.0;
    const Vec row = x.row(i).array();
    for (std::size_t t = 0; t < model.learners.size(); ++t)
      if (model.learners[t].predict(row) == 1)
        vote += model.learner_weights[t];
    scores[i] = vote / total;
  }
  return scores;
}

// ---------------------------------------------------------------------------

std::string model_to_json(const DetectorModel& model) {
  json j;
  j["format"] = "fog-detector-model";
  j["version"] = 1;
  j["feature_names"] = model.feature_names;
  j["selected_features"] = model.selected_features;
  j["impute_medians"] = std::vector<Scalar>(
      model.impute_medians.data(),
      model.impute_medians.data() + model.impute_medians.size());
  j["learner_weights"] = model.learner_weights;
  j["params"] = {{"n_rounds", model.params.n_rounds},
                 {"max_depth", model.params.max_depth},
                 {"undersample_ratio",
                  std::isinf(model.params.undersample_ratio)
                      ? json("inf")
                      : json(model.params.undersample_ratio)},
                 {"seed", model.params.seed}};
  j["learners"] = json::array();
  for (const auto& t : model.learners) {
    json jt = json::array();
    for (const auto& nd : t.nodes)
      jt.push_back({{"f", nd.feature},
                    {"t", nd.threshold},
                    {"l", nd.left},
                    {"r", nd.right},
                    {"c", nd.label}});
    j["learners"].push_back(jt);
  }
  return j.dump(1);
}

DetectorModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model JSON: ") + e.what());
  }
  if (j.value("format", "") != "fog-detector-model" || j.value("version", 0) != 1)
    throw FormatError("not a version-1 detector model document");

  DetectorModel m;
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.selected_features = j.at("selected_features").get<std::vector<int>>();
  const auto med = j.at("impute_medians").get<std::vector<Scalar>>();
  m.impute_medians = Eigen::Map<const Vec>(med.data(), static_cast<Index>(med.size()));
  m.learner_weights = j.at("learner_weights").get<std::vector<Scalar>>();
  const auto& p = j.at("params");
  m.params.n_rounds = p.at("n_rounds").get<int>();
  m.params.max_depth = p.at("max_depth").get<int>();
  if (p.at("undersample_ratio").is_string())
    m.params.undersample_ratio = std::numeric_limits<Scalar>::infinity();
  else
    m.params.undersample_ratio = p.at("undersample_ratio").get<Scalar>();
  m.params.seed = p.at("seed").get<std::uint64_t>();
  for (const auto& jt : j.at("learners")) {
    Tree t;
    for (const auto& jn : jt) {
      TreeNode nd;
      nd.feature = jn.at("f").get<int>();
      nd.threshold = jn.at("t").get<Scalar>();
      nd.left = jn.at("l").get<int>();
      nd.right = jn.at("r").get<int>();
      nd.label = jn.at("c").get<int>();
      t.nodes.push_back(nd);
    }
    m.learners.push_back(std::move(t));
  }
  if (m.learners.size() != m.learner_weights.size())
    throw FormatError("model learners and weights disagree in count");
  return m;
}

void save_model(const DetectorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << model_to_json(model) << "\n";
}

DetectorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace fog::model
