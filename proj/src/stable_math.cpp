#include "infomaxda/stable_math.hpp"

#include <algorithm>
#include <cmath>

#include "infomaxda/errors.hpp"

namespace infomaxda {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw ValidationError("log_sum_exp: empty input");
  double hi = values[0];
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericalError("log_sum_exp: non-finite input");
    hi = std::max(hi, v);
  }
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

double log_mean_exp(std::span<const double> values) {
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

Tensor2D softmax(const Tensor2D& logits) {
  logits.require_finite("softmax logits");
  Tensor2D out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto p = out.row(r);
    const double hi = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      p[c] = std::exp(in[c] - hi);
      sum += p[c];
    }
    for (double& v : p) v /= sum;
  }
  return out;
}

}  // namespace infomaxda
