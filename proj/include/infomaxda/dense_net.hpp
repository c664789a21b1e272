#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "infomaxda/rng.hpp"
#include "infomaxda/tensor.hpp"

namespace infomaxda {

enum class Activation { tanh, elu, relu, identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct DenseLayer {
  Tensor2D weights;  // fan_in x fan_out
  std::vector<double> bias;
  Tensor2D weight_grad;
  std::vector<double> bias_grad;
  Tensor2D weight_velocity;
  std::vector<double> bias_velocity;
  Activation activation = Activation::identity;
};

/// Fully connected feed-forward net with hand-written reverse pass.
///
/// Hidden layers use the configured activations, the output layer is linear.
/// `forward` caches what `backward` needs; `backward` consumes the cache, adds
/// the parameter gradients into the accumulators and returns d(loss)/d(input).
/// Only `sgd_step` changes parameter values.
///
/// Not thread-safe for mutation. `predict` does not touch the cache and may be
/// called concurrently on a net nobody is mutating.
class DenseNet {
 public:
  DenseNet() = default;
  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  DenseNet(std::vector<std::size_t> layer_sizes, std::vector<Activation> hidden, Rng& rng);
  DenseNet(std::vector<std::size_t> layer_sizes, Activation hidden, Rng& rng);
  /// All parameters zero.
  static DenseNet zeros(std::vector<std::size_t> layer_sizes, Activation hidden);

  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  std::size_t input_dim() const { return layer_sizes_.front(); }
  std::size_t output_dim() const { return layer_sizes_.back(); }
  std::size_t layer_count() const { return layers_.size(); }
  DenseLayer& layer(std::size_t k) { return layers_.at(k); }
  const DenseLayer& layer(std::size_t k) const { return layers_.at(k); }
  bool uses_activation(Activation a) const;

  Tensor2D forward(const Tensor2D& input);
  Tensor2D predict(const Tensor2D& input) const;
  Tensor2D backward(const Tensor2D& output_grad);
  bool has_pending_forward() const { return !cache_inputs_.empty(); }

  void zero_grad();
  /// p <- p - lr * v with v <- momentum * v + grad; gradients are zeroed after.
  /// Throws NumericalError (naming the layer) before touching anything if a
  /// gradient is non-finite.
  void sgd_step(double lr, double momentum = 0.0);

  // Flat view over parameters: per layer, weights row-major, then bias.
  std::size_t parameter_count() const;
  double& parameter(std::size_t i);
  double parameter(std::size_t i) const;
  double gradient(std::size_t i) const;

  double grad_norm_squared() const;
  void scale_gradients(double factor);

  /// FNV-1a over the raw bytes of every parameter.
  std::uint64_t checksum() const;

 private:
  Tensor2D run(const Tensor2D& input, bool keep_cache);
  std::pair<std::size_t, std::size_t> locate(std::size_t i) const;

  std::vector<std::size_t> layer_sizes_{1, 1};
  std::vector<DenseLayer> layers_;
  std::vector<Tensor2D> cache_inputs_;  // input to each layer
  std::vector<Tensor2D> cache_outputs_;  // post-activation output of each layer
};

/// Rescales the gradients of all nets together so their joint L2 norm is at
/// most `max_norm`. Returns the norm before clipping.
double clip_global_grad_norm(std::span<DenseNet* const> nets, double max_norm);

}  // namespace infomaxda
