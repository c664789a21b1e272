#pragma once

#include <span>

#include "infomaxda/tensor.hpp"

namespace infomaxda {

// log(sum(exp(v))) computed as max + log(sum(exp(v - max))).
double log_sum_exp(std::span<const double> values);

// log((1/n) sum(exp(v))).
double log_mean_exp(std::span<const double> values);

// Row-wise softmax with max subtraction.
Tensor2D softmax(const Tensor2D& logits);

}  // namespace infomaxda
