#include <algorithm>
#include <numeric>

#include "nodulemorph/error.hpp"
#include "nodulemorph/learn.hpp"
#include "nodulemorph/rng.hpp"

namespace nodulemorph {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// k nearest other rows for every row; ties broken by lower index.
std::vector<std::vector<std::size_t>> nearest_neighbors(const Matrix& rows, std::size_t k) {
  const std::size_t n = rows.rows();
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dist.emplace_back(squared_distance(rows.row(i), rows.row(j)), j);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t m = 0; m < k; ++m) out[i].push_back(dist[m].second);
  }
  return out;
}

}  // namespace

Matrix smote(const Matrix& minority, std::size_t k, std::size_t n_needed, std::uint64_t seed) {
  if (minority.rows() < 2)
    throw Error(ErrorKind::Resample, "SMOTE needs at least 2 minority rows, got " + std::to_string(minority.rows()));
  if (k < 1) throw Error(ErrorKind::Resample, "SMOTE needs k_neighbors >= 1");
  k = std::min(k, minority.rows() - 1);
  const auto neighbors = nearest_neighbors(minority, k);

  Rng rng(seed);
  Matrix out(n_needed, minority.cols());
  for (std::size_t s = 0; s < n_needed; ++s) {
    const std::size_t i = rng.below(minority.rows());
    const std::size_t j = neighbors[i][rng.below(k)];
    const double t = rng.uniform_closed();
    auto x = minority.row(i);
    auto nn = minority.row(j);
    auto dst = out.row(s);
    for (std::size_t c = 0; c < minority.cols(); ++c) dst[c] = x[c] + t * (nn[c] - x[c]);
  }
  return out;
}

Resampled balance_classes(const Matrix& rows, std::span<const ClassLabel> labels, const SmoteConfig& config) {
  if (rows.rows() != labels.size()) throw Error(ErrorKind::Shape, "row and label counts differ");
  std::vector<std::size_t> benign, malignant;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] == ClassLabel::Benign ? benign : malignant).push_back(i);

  Resampled out{rows, std::vector<ClassLabel>(labels.begin(), labels.end()), 0};
  if (benign.size() == malignant.size()) return out;
  const bool benign_minority = benign.size() < malignant.size();
  const auto& minority_idx = benign_minority ? benign : malignant;
  const std::size_t needed = (benign_minority ? malignant.size() : benign.size()) - minority_idx.size();
  const ClassLabel minority_label = benign_minority ? ClassLabel::Benign : ClassLabel::Malignant;

  const Matrix synthetic = smote(rows.select(minority_idx), config.k_neighbors, needed, config.seed);
  for (std::size_t s = 0; s < synthetic.rows(); ++s) {
    out.rows.push_row(synthetic.row(s));
    out.labels.push_back(minority_label);
  }
  out.synthetic_count = synthetic.rows();
  return out;
}

}  // namespace nodulemorph
