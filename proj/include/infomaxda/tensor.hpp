#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace infomaxda {

// Dense row-major matrix of doubles. Carrier for inputs, latents and logits.
class Tensor2D {
 public:
  Tensor2D() = default;
  Tensor2D(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Tensor2D from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;
  // Throws NumericalError naming `what` if any entry is NaN or Inf.
  void require_finite(std::string_view what) const;

  bool operator==(const Tensor2D& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// [a | b] row by row; row counts must agree.
Tensor2D concat_cols(const Tensor2D& a, const Tensor2D& b);
// [a ; b] stacked vertically; column counts must agree.
Tensor2D concat_rows(const Tensor2D& a, const Tensor2D& b);
// Rows [begin, begin + count).
Tensor2D slice_rows(const Tensor2D& t, std::size_t begin, std::size_t count);
// Columns [begin, begin + count).
Tensor2D slice_cols(const Tensor2D& t, std::size_t begin, std::size_t count);
Tensor2D gather_rows(const Tensor2D& t, std::span<const std::size_t> index);

}  // namespace infomaxda
