#include "fog/select.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace fog::select {

namespace {

Scalar entropy_bits(const std::map<int, long>& counts, long total) {
  Scalar h = 0.0;
  for (const auto& [_, c] : counts) {
    if (c == 0) continue;
    const Scalar p = static_cast<Scalar>(c) / static_cast<Scalar>(total);
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

Scalar symmetrical_uncertainty(const std::vector<int>& x,
                               const std::vector<int>& y) {
  if (x.size() != y.size())
    throw ValidationError("SU inputs have different lengths");
  const long n = static_cast<long>(x.size());
  if (n < 10) throw ParamError("SU needs at least 10 samples");

  std::map<int, long> cx, cy;
  std::map<std::pair<int, int>, long> cxy;
  for (long i = 0; i < n; ++i) {
    ++cx[x[static_cast<std::size_t>(i)]];
    ++cy[y[static_cast<std::size_t>(i)]];
    ++cxy[{x[static_cast<std::size_t>(i)], y[static_cast<std::size_t>(i)]}];
  }
  const Scalar hx = entropy_bits(cx, n);
  const Scalar hy = entropy_bits(cy, n);
  if (hx == 0.0 || hy == 0.0) return 0.0;

  Scalar hxy = 0.0;
  for (const auto& [_, c] : cxy) {
    const Scalar p = static_cast<Scalar>(c) / static_cast<Scalar>(n);
    hxy -= p * std::log2(p);
  }
  const Scalar ig = hx + hy - hxy;
  return std::clamp(2.0 * ig / (hx + hy), 0.0, 1.0);
}

std::vector<int> discretize_equal_frequency(const Vec& x, int bins) {
  if (bins < 2) throw ParamError("discretization needs at least 2 bins");
  std::vector<Scalar> sorted;
  sorted.reserve(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i)
    if (!is_missing(x[i])) sorted.push_back(x[i]);
  std::sort(sorted.begin(), sorted.end());

  std::vector<Scalar> edges;  // upper edges of the first bins-1 bins
  const std::size_t m = sorted.size();
  for (int b = 1; b < bins && m > 0; ++b) {
    const std::size_t idx =
        std::min(m - 1, static_cast<std::size_t>(
                            static_cast<Scalar>(b) * static_cast<Scalar>(m) /
                            static_cast<Scalar>(bins)));
    edges.push_back(sorted[idx]);
  }

  std::vector<int> out(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) {
    if (is_missing(x[i])) {
      out[static_cast<std::size_t>(i)] = bins;  // missing category
      continue;
    }
    const auto it = std::lower_bound(edges.begin(), edges.end(), x[i]);
    out[static_cast<std::size_t>(i)] = static_cast<int>(it - edges.begin());
  }
  return out;
}

Scalar su_continuous(const Vec& x, const std::vector<int>& y, int bins) {
  return symmetrical_uncertainty(discretize_equal_frequency(x, bins), y);
}

SUMatrix compute_su_matrix(const Mat& features, const std::vector<int>& labels,
                           int bins) {
  const Index f = features.cols();
  if (static_cast<Index>(labels.size()) != features.rows())
    throw ValidationError("labels are not aligned with the feature matrix");

  std::vector<std::vector<int>> disc(static_cast<std::size_t>(f));
  for (Index j = 0; j < f; ++j)
    disc[static_cast<std::size_t>(j)] =
        discretize_equal_frequency(features.col(j).array(), bins);

  SUMatrix su;
  su.su_class = Vec(f);
  su.su_ff = Mat::Identity(f, f);
  for (Index j = 0; j < f; ++j)
    su.su_class[j] =
        symmetrical_uncertainty(disc[static_cast<std::size_t>(j)], labels);
  for (Index a = 0; a < f; ++a)
    for (Index b = a + 1; b < f; ++b) {
      const Scalar v = symmetrical_uncertainty(disc[static_cast<std::size_t>(a)],
                                               disc[static_cast<std::size_t>(b)]);
      su.su_ff(a, b) = v;
      su.su_ff(b, a) = v;
    }
  return su;
}

std::vector<int> fcbf_rank(const std::vector<Scalar>& su_class,
                           const std::function<Scalar(int, int)>& su_ff,
                           Scalar threshold) {
  std::vector<int> order;
  for (int j = 0; j < static_cast<int>(su_class.size()); ++j)
    if (su_class[static_cast<std::size_t>(j)] > threshold) order.push_back(j);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return su_class[static_cast<std::size_t>(a)] >
           su_class[static_cast<std::size_t>(b)];
  });

  std::vector<int> kept;
  std::vector<bool> removed(su_class.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int fi = order[i];
    if (removed[static_cast<std::size_t>(fi)]) continue;
    kept.push_back(fi);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const int fj = order[j];
      if (removed[static_cast<std::size_t>(fj)]) continue;
      if (su_ff(fi, fj) >= su_class[static_cast<std::size_t>(fj)])
        removed[static_cast<std::size_t>(fj)] = true;
    }
  }
  return kept;
}

Selection fcbf(const Mat& features, const std::vector<int>& labels,
               Scalar threshold, int bins) {
  if (features.cols() < 1) throw ParamError("no features to select from");
  const SUMatrix su = compute_su_matrix(features, labels, bins);
  Selection sel;
  sel.su_class = su.su_class;
  std::vector<Scalar> suc(su.su_class.data(), su.su_class.data() + su.su_class.size());
  sel.selected = fcbf_rank(
      suc, [&](int a, int b) { return su.su_ff(a, b); }, threshold);
  return sel;
}

void write_su_report(const Selection& sel,
                     const std::vector<std::string>& feature_names,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "feature,su_class,selected_flag\n";
  char buf[40];
  for (Index j = 0; j < sel.su_class.size(); ++j) {
    const bool on = std::find(sel.selected.begin(), sel.selected.end(),
                              static_cast<int>(j)) != sel.selected.end();
    std::snprintf(buf, sizeof(buf), "%.17g", sel.su_class[j]);
    out << feature_names[static_cast<std::size_t>(j)] << "," << buf << ","
        << (on ? 1 : 0) << "\n";
  }
}

}  // namespace fog::select
