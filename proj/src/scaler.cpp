#include <algorithm>
#include <cmath>

#include "nodulemorph/error.hpp"
#include "nodulemorph/learn.hpp"

namespace nodulemorph {

void Matrix::push_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw Error(ErrorKind::Shape, "row width does not match matrix");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::select(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw Error(ErrorKind::Shape, "row index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * cols_), cols_,
                out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
  }
  return out;
}

ScalerParams fit_scaler(const Matrix& train) {
  if (train.empty()) throw Error(ErrorKind::Fit, "cannot fit scaler on zero rows");
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();
  ScalerParams p{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) p.mean[c] += train(r, c);
  for (auto& m : p.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = train(r, c) - p.mean[c];
      p.stddev[c] += dev * dev;
    }
  for (auto& s : p.stddev) s = std::max(std::sqrt(s / static_cast<double>(n)), kScalerStdFloor);
  return p;
}

Matrix apply_scaler(const ScalerParams& params, const Matrix& rows) {
  if (rows.cols() != params.mean.size())
    throw Error(ErrorKind::Shape, "scaler expects " + std::to_string(params.mean.size()) + " features, got " +
                                      std::to_string(rows.cols()));
  Matrix out(rows.rows(), rows.cols());
  for (std::size_t r = 0; r < rows.rows(); ++r)
    for (std::size_t c = 0; c < rows.cols(); ++c) out(r, c) = (rows(r, c) - params.mean[c]) / params.stddev[c];
  return out;
}

Matrix invert_scaler(const ScalerParams& params, const Matrix& rows) {
  if (rows.cols() != params.mean.size()) throw Error(ErrorKind::Shape, "scaler dimension mismatch");
  Matrix out(rows.rows(), rows.cols());
  for (std::size_t r = 0; r < rows.rows(); ++r)
    for (std::size_t c = 0; c < rows.cols(); ++c) out(r, c) = rows(r, c) * params.stddev[c] + params.mean[c];
  return out;
}

}  // namespace nodulemorph
