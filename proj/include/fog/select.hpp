#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fog/types.hpp"

namespace fog::select {

// H-based symmetrical uncertainty 2*IG(x;y)/(H(x)+H(y)) on discrete series;
// 0 when either entropy vanishes.
Scalar symmetrical_uncertainty(const std::vector<int>& x,
                               const std::vector<int>& y);

// Equal-frequency binning for continuous inputs; missing values get their
// own category (bin index = bins).
std::vector<int> discretize_equal_frequency(const Vec& x, int bins = 10);

Scalar su_continuous(const Vec& x, const std::vector<int>& y, int bins = 10);

struct SUMatrix {
  Vec su_class;  // per feature, against the class labels
  Mat su_ff;     // feature-feature, symmetric with unit diagonal
};

SUMatrix compute_su_matrix(const Mat& features, const std::vector<int>& labels,
                           int bins = 10);

// FCBF rule application on precomputed SU values: keep threshold survivors
// in descending SU(f, class) order, dropping any feature more strongly tied
// (>=) to an already-kept feature than to the class.
std::vector<int> fcbf_rank(const std::vector<Scalar>& su_class,
                           const std::function<Scalar(int, int)>& su_ff,
                           Scalar threshold);

struct Selection {
  std::vector<int> selected;  // descending SU(f, class)
  Vec su_class;
};

Selection fcbf(const Mat& features, const std::vector<int>& labels,
               Scalar threshold, int bins = 10);

void write_su_report(const Selection& sel,
                     const std::vector<std::string>& feature_names,
                     const std::filesystem::path& path);

}  // namespace fog::select
