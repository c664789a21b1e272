#include "infomaxda/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "infomaxda/errors.hpp"

namespace infomaxda {

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw ValidationError("Tensor2D: " + std::to_string(values_.size()) + " values for shape " +
                          std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Tensor2D Tensor2D::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t d = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(n * d);
  for (const auto& r : rows) {
    if (r.size() != d) throw ValidationError("Tensor2D::from_rows: ragged rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Tensor2D(n, d, std::move(values));
}

bool Tensor2D::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor2D::require_finite(std::string_view what) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NumericalError(std::string(what) + ": non-finite entry at row " +
                           std::to_string(i / std::max<std::size_t>(cols_, 1)) + ", col " +
                           std::to_string(cols_ == 0 ? 0 : i % cols_));
    }
  }
}

Tensor2D concat_cols(const Tensor2D& a, const Tensor2D& b) {
  if (a.rows() != b.rows()) {
    throw ValidationError("concat_cols: row mismatch " + std::to_string(a.rows()) + " vs " +
                          std::to_string(b.rows()));
  }
  Tensor2D out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

Tensor2D concat_rows(const Tensor2D& a, const Tensor2D& b) {
  if (a.cols() != b.cols()) {
    throw ValidationError("concat_rows: column mismatch " + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.cols()));
  }
  std::vector<double> values(a.values().begin(), a.values().end());
  values.insert(values.end(), b.values().begin(), b.values().end());
  return Tensor2D(a.rows() + b.rows(), a.cols(), std::move(values));
}

Tensor2D slice_rows(const Tensor2D& t, std::size_t begin, std::size_t count) {
  if (begin + count > t.rows()) throw ValidationError("slice_rows: range out of bounds");
  const auto first = t.values().begin() + static_cast<std::ptrdiff_t>(begin * t.cols());
  return Tensor2D(count, t.cols(),
                  std::vector<double>(first, first + static_cast<std::ptrdiff_t>(count * t.cols())));
}

Tensor2D slice_cols(const Tensor2D& t, std::size_t begin, std::size_t count) {
  if (begin + count > t.cols()) throw ValidationError("slice_cols: range out of bounds");
  Tensor2D out(t.rows(), count);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = t(r, begin + c);
  }
  return out;
}

Tensor2D gather_rows(const Tensor2D& t, std::span<const std::size_t> index) {
  Tensor2D out(index.size(), t.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= t.rows()) throw ValidationError("gather_rows: index out of range");
    std::copy(t.row(index[i]).begin(), t.row(index[i]).end(), out.row(i).begin());
  }
  return out;
}

}  // namespace infomaxda
