#include "infomaxda/dense_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "infomaxda/errors.hpp"

namespace infomaxda {

namespace {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::tanh:
      return std::tanh(x);
    case Activation::elu:
      return x > 0.0 ? x : std::expm1(x);
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::identity:
      return x;
  }
  return x;
}

// Derivative expressed through the activation output y = f(x).
double activate_grad(Activation a, double y) {
  switch (a) {
    case Activation::tanh:
      return 1.0 - y * y;
    case Activation::elu:
      return y > 0.0 ? 1.0 : y + 1.0;
    case Activation::relu:
      return y > 0.0 ? 1.0 : 0.0;
    case Activation::identity:
      return 1.0;
  }
  return 1.0;
}

std::vector<Activation> per_layer(std::size_t layer_count, Activation hidden) {
  std::vector<Activation> acts(layer_count > 0 ? layer_count - 1 : 0, hidden);
  return acts;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh:
      return "tanh";
    case Activation::elu:
      return "elu";
    case Activation::relu:
      return "relu";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "elu") return Activation::elu;
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

DenseNet::DenseNet(std::vector<std::size_t> layer_sizes, std::vector<Activation> hidden, Rng& rng)
    : layer_sizes_(std::move(layer_sizes)) {
  if (layer_sizes_.size() < 2) throw ValidationError("DenseNet: need at least input and output sizes");
  for (std::size_t s : layer_sizes_) {
    if (s == 0) throw ValidationError("DenseNet: zero-width layer");
  }
  const std::size_t n_layers = layer_sizes_.size() - 1;
  if (hidden.size() != n_layers - 1) {
    throw ValidationError("DenseNet: " + std::to_string(hidden.size()) + " activations for " +
                          std::to_string(n_layers - 1) + " hidden layers");
  }
  layers_.resize(n_layers);
  for (std::size_t k = 0; k < n_layers; ++k) {
    const std::size_t fan_in = layer_sizes_[k];
    const std::size_t fan_out = layer_sizes_[k + 1];
    DenseLayer& l = layers_[k];
    l.weights = Tensor2D(fan_in, fan_out);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : l.weights.values()) w = rng.uniform(-bound, bound);
    l.bias.assign(fan_out, 0.0);
    l.weight_grad = Tensor2D(fan_in, fan_out);
    l.bias_grad.assign(fan_out, 0.0);
    l.weight_velocity = Tensor2D(fan_in, fan_out);
    l.bias_velocity.assign(fan_out, 0.0);
    l.activation = k + 1 < n_layers ? hidden[k] : Activation::identity;
  }
}

DenseNet::DenseNet(std::vector<std::size_t> layer_sizes, Activation hidden, Rng& rng)
    : DenseNet(layer_sizes, per_layer(layer_sizes.size() - 1, hidden), rng) {}

DenseNet DenseNet::zeros(std::vector<std::size_t> layer_sizes, Activation hidden) {
  Rng rng(0);
  DenseNet net(std::move(layer_sizes), hidden, rng);
  for (auto& l : net.layers_) {
    for (double& w : l.weights.values()) w = 0.0;
  }
  return net;
}

bool DenseNet::uses_activation(Activation a) const {
  for (const auto& l : layers_) {
    if (l.activation == a) return true;
  }
  return false;
}

Tensor2D DenseNet::run(const Tensor2D& input, bool keep_cache) {
  if (input.cols() != input_dim()) {
    throw ValidationError("DenseNet::forward: input has " + std::to_string(input.cols()) +
                          " columns, net expects " + std::to_string(input_dim()));
  }
  input.require_finite("DenseNet::forward input");
  if (keep_cache) {
    cache_inputs_.clear();
    cache_outputs_.clear();
  }
  Tensor2D current = input;
  for (const DenseLayer& l : layers_) {
    const std::size_t fan_in = l.weights.rows();
    const std::size_t fan_out = l.weights.cols();
    Tensor2D next(current.rows(), fan_out);
    for (std::size_t r = 0; r < current.rows(); ++r) {
      auto out = next.row(r);
      for (std::size_t j = 0; j < fan_out; ++j) out[j] = l.bias[j];
      auto in = current.row(r);
      for (std::size_t i = 0; i < fan_in; ++i) {
        const double xi = in[i];
        auto w = l.weights.row(i);
        for (std::size_t j = 0; j < fan_out; ++j) out[j] += xi * w[j];
      }
      for (std::size_t j = 0; j < fan_out; ++j) out[j] = activate(l.activation, out[j]);
    }
    if (keep_cache) {
      cache_inputs_.push_back(std::move(current));
      cache_outputs_.push_back(next);
    }
    current = std::move(next);
  }
  current.require_finite("DenseNet::forward output");
  return current;
}

Tensor2D DenseNet::forward(const Tensor2D& input) { return run(input, true); }

Tensor2D DenseNet::predict(const Tensor2D& input) const {
  return const_cast<DenseNet*>(this)->run(input, false);
}

Tensor2D DenseNet::backward(const Tensor2D& output_grad) {
  if (cache_inputs_.empty()) throw ValidationError("DenseNet::backward without a prior forward");
  const Tensor2D& out = cache_outputs_.back();
  if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols()) {
    throw ValidationError("DenseNet::backward: gradient shape " + std::to_string(output_grad.rows()) +
                          "x" + std::to_string(output_grad.cols()) + " does not match output " +
                          std::to_string(out.rows()) + "x" + std::to_string(out.cols()));
  }
  Tensor2D grad = output_grad;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    DenseLayer& l = layers_[k];
    const Tensor2D& x = cache_inputs_[k];
    const Tensor2D& y = cache_outputs_[k];
    const std::size_t fan_in = l.weights.rows();
    const std::size_t fan_out = l.weights.cols();
    // grad becomes d(loss)/d(pre-activation)
    if (l.activation != Activation::identity) {
      for (std::size_t r = 0; r < grad.rows(); ++r) {
        auto g = grad.row(r);
        auto yr = y.row(r);
        for (std::size_t j = 0; j < fan_out; ++j) g[j] *= activate_grad(l.activation, yr[j]);
      }
    }
    Tensor2D input_grad(grad.rows(), fan_in);
    for (std::size_t r = 0; r < grad.rows(); ++r) {
      auto g = grad.row(r);
      auto xr = x.row(r);
      auto gi = input_grad.row(r);
      for (std::size_t j = 0; j < fan_out; ++j) l.bias_grad[j] += g[j];
      for (std::size_t i = 0; i < fan_in; ++i) {
        auto w = l.weights.row(i);
        auto wg = l.weight_grad.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < fan_out; ++j) {
          wg[j] += xr[i] * g[j];
          acc += w[j] * g[j];
        }
        gi[i] = acc;
      }
    }
    grad = std::move(input_grad);
  }
  cache_inputs_.clear();
  cache_outputs_.clear();
  return grad;
}

void DenseNet::zero_grad() {
  for (auto& l : layers_) {
    for (double& g : l.weight_grad.values()) g = 0.0;
    std::fill(l.bias_grad.begin(), l.bias_grad.end(), 0.0);
  }
}

void DenseNet::sgd_step(double lr, double momentum) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("sgd_step: lr must be positive");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    bool finite = l.weight_grad.all_finite();
    for (double g : l.bias_grad) finite = finite && std::isfinite(g);
    if (!finite) throw NumericalError("sgd_step: non-finite gradient in layer " + std::to_string(k));
  }
  for (auto& l : layers_) {
    auto w = l.weights.values();
    auto wg = l.weight_grad.values();
    if (momentum == 0.0) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * wg[i];
      for (std::size_t j = 0; j < l.bias.size(); ++j) l.bias[j] -= lr * l.bias_grad[j];
    } else {
      auto wv = l.weight_velocity.values();
      for (std::size_t i = 0; i < w.size(); ++i) {
        wv[i] = momentum * wv[i] + wg[i];
        w[i] -= lr * wv[i];
      }
      for (std::size_t j = 0; j < l.bias.size(); ++j) {
        l.bias_velocity[j] = momentum * l.bias_velocity[j] + l.bias_grad[j];
        l.bias[j] -= lr * l.bias_velocity[j];
      }
    }
  }
  zero_grad();
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::pair<std::size_t, std::size_t> DenseNet::locate(std::size_t i) const {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const std::size_t span = layers_[k].weights.size() + layers_[k].bias.size();
    if (i < span) return {k, i};
    i -= span;
  }
  throw ValidationError("DenseNet: parameter index out of range");
}

double& DenseNet::parameter(std::size_t i) {
  auto [k, off] = locate(i);
  auto& l = layers_[k];
  return off < l.weights.size() ? l.weights.values()[off] : l.bias[off - l.weights.size()];
}

double DenseNet::parameter(std::size_t i) const { return const_cast<DenseNet*>(this)->parameter(i); }

double DenseNet::gradient(std::size_t i) const {
  auto [k, off] = locate(i);
  const auto& l = layers_[k];
  return off < l.weight_grad.size() ? l.weight_grad.values()[off] : l.bias_grad[off - l.weight_grad.size()];
}

double DenseNet::grad_norm_squared() const {
  double s = 0.0;
  for (const auto& l : layers_) {
    for (double g : l.weight_grad.values()) s += g * g;
    for (double g : l.bias_grad) s += g * g;
  }
  return s;
}

void DenseNet::scale_gradients(double factor) {
  for (auto& l : layers_) {
    for (double& g : l.weight_grad.values()) g *= factor;
    for (double& g : l.bias_grad) g *= factor;
  }
}

std::uint64_t DenseNet::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& l : layers_) {
    for (double w : l.weights.values()) feed(w);
    for (double b : l.bias) feed(b);
  }
  return h;
}

double clip_global_grad_norm(std::span<DenseNet* const> nets, double max_norm) {
  double sq = 0.0;
  for (const DenseNet* n : nets) sq += n->grad_norm_squared();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    for (DenseNet* n : nets) n->scale_gradients(max_norm / norm);
  }
  return norm;
}

}  // namespace infomaxda
