#pragma once

// Multilayer perceptrons with explicit forward/backward passes. Every layer
// owns its parameters together with gradient slots of the same shape; backward
// accumulates into those slots until reset_grads().

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "ndcore.hpp"

namespace gcvae {

enum class Activation : std::uint32_t { identity = 0, tanh = 1, relu = 2, sigmoid = 3 };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity" || s == "linear") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::tanh: {
      // One exp instead of libm tanh; exact to a few ulp away from zero.
      if (std::abs(x) < 0.02) return std::tanh(x);
      const double e = std::exp(-2.0 * std::abs(x));
      return std::copysign((1.0 - e) / (1.0 + e), x);
    }
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

/// Derivative expressed through the pre-activation x and output y.
/// ReLU's subgradient at 0 is 0.
inline double activate_deriv(Activation a, double x, double y) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return y * (1.0 - y);
  }
  return 1.0;
}

struct DenseLayer {
  Mat weight;  // out x in
  Vec bias;    // out
  Activation activation = Activation::identity;
  Mat grad_weight;
  Vec grad_bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out, Activation act)
      : weight(out, in), bias(out, 0.0), activation(act), grad_weight(out, in), grad_bias(out, 0.0) {}

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }
};

struct LayerSpec {
  std::size_t out = 0;
  Activation activation = Activation::tanh;
};

struct MlpSpec {
  std::size_t input = 0;
  std::vector<LayerSpec> layers;
};

/// Activations cached by Mlp::forward for the matching backward call.
class Tape {
 public:
  bool consumed() const noexcept { return consumed_; }
  std::span<const double> output() const { return outputs_.back(); }

 private:
  friend class Mlp;
  Vec input_;                     // network input; layer i>0 reads outputs_[i-1]
  std::vector<Vec> pre_;          // pre-activations
  std::vector<Vec> outputs_;      // post-activations
  std::uint64_t net_id_ = 0;
  bool consumed_ = false;
};

class Mlp {
 public:
  Mlp() = default;

  explicit Mlp(const MlpSpec& spec) {
    std::size_t in = spec.input;
    for (const auto& l : spec.layers) {
      layers_.emplace_back(in, l.out, l.activation);
      in = l.out;
    }
  }

  std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().in_dim(); }
  std::size_t output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().out_dim(); }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  std::size_t num_params() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  /// Parameter blocks in a fixed order: weight then bias, layer by layer.
  std::vector<std::span<double>> param_blocks() {
    std::vector<std::span<double>> out;
    for (auto& l : layers_) {
      out.push_back(l.weight.flat());
      out.push_back(l.bias);
    }
    return out;
  }

  std::vector<std::span<double>> grad_blocks() {
    std::vector<std::span<double>> out;
    for (auto& l : layers_) {
      out.push_back(l.grad_weight.flat());
      out.push_back(l.grad_bias);
    }
    return out;
  }

  void reset_grads() {
    for (auto& l : layers_) {
      std::fill(l.grad_weight.flat().begin(), l.grad_weight.flat().end(), 0.0);
      std::fill(l.grad_bias.begin(), l.grad_bias.end(), 0.0);
    }
  }

  Vec predict(std::span<const double> input) const {
    check_input(input);
    Vec x(input.begin(), input.end());
    for (const auto& l : layers_) x = apply_layer(l, x, nullptr);
    return x;
  }

  std::pair<Vec, Tape> forward(std::span<const double> input) const {
    check_input(input);
    Tape tape;
    tape.net_id_ = id();
    tape.input_.assign(input.begin(), input.end());
    tape.pre_.reserve(layers_.size());
    tape.outputs_.reserve(layers_.size());
    for (const auto& l : layers_) {
      const Vec& x = tape.outputs_.empty() ? tape.input_ : tape.outputs_.back();
      Vec pre;
      Vec y = apply_layer(l, x, &pre);
      tape.pre_.push_back(std::move(pre));
      tape.outputs_.push_back(std::move(y));
    }
    return {tape.outputs_.back(), std::move(tape)};
  }

  /// Accumulates parameter gradients for d(objective)/d(output) = out_grad and
  /// returns the gradient with respect to the network input.
  Vec backward(Tape& tape, std::span<const double> out_grad) {
    if (tape.consumed_) throw std::logic_error("Mlp::backward: tape already consumed");
    if (tape.net_id_ != id() || tape.pre_.size() != layers_.size())
      throw std::logic_error("Mlp::backward: tape was recorded on a different network");
    if (out_grad.size() != output_dim()) throw std::invalid_argument("Mlp::backward: output gradient length mismatch");
    tape.consumed_ = true;

    Vec g(out_grad.begin(), out_grad.end());
    for (std::size_t li = layers_.size(); li-- > 0;) {
      DenseLayer& l = layers_[li];
      const Vec& in = li == 0 ? tape.input_ : tape.outputs_[li - 1];
      const Vec& pre = tape.pre_[li];
      const Vec& out = tape.outputs_[li];
      for (std::size_t o = 0; o < g.size(); ++o) g[o] *= activate_deriv(l.activation, pre[o], out[o]);

      Vec in_grad(l.in_dim(), 0.0);
      const std::size_t n_in = in.size();
      const double* __restrict x = in.data();
      double* __restrict ig = in_grad.data();
      for (std::size_t o = 0; o < l.out_dim(); ++o) {
        const double go = g[o];
        if (go == 0.0) continue;
        l.grad_bias[o] += go;
        double* __restrict gw = l.grad_weight.row(o).data();
        const double* __restrict w = l.weight.row(o).data();
        for (std::size_t i = 0; i < n_in; ++i) gw[i] += go * x[i];
        for (std::size_t i = 0; i < n_in; ++i) ig[i] += go * w[i];
      }
      g = std::move(in_grad);
    }
    return g;
  }

 private:
  std::uint64_t id() const noexcept { return reinterpret_cast<std::uintptr_t>(this); }

  void check_input(std::span<const double> input) const {
    if (layers_.empty()) throw std::logic_error("Mlp: network has no layers");
    if (input.size() != input_dim())
      throw std::invalid_argument("Mlp::forward: expected input of length " + std::to_string(input_dim()) +
                                  ", got " + std::to_string(input.size()));
  }

  static Vec apply_layer(const DenseLayer& l, std::span<const double> x, Vec* pre_out) {
    Vec pre = matvec(l.weight, x);
    for (std::size_t o = 0; o < pre.size(); ++o) pre[o] += l.bias[o];
    if (l.activation == Activation::identity) {
      if (pre_out) *pre_out = pre;
      return pre;
    }
    Vec y(pre.size());
    for (std::size_t o = 0; o < pre.size(); ++o) y[o] = activate(l.activation, pre[o]);
    if (pre_out) *pre_out = std::move(pre);
    return y;
  }

  std::vector<DenseLayer> layers_;
};

/// Weights ~ U(-scale/sqrt(fan_in), +scale/sqrt(fan_in)), biases zero.
inline Mlp init_mlp(const MlpSpec& spec, Rng& rng, double scale) {
  if (scale < 0.0) throw std::invalid_argument("init_mlp: scale must be non-negative");
  Mlp net(spec);
  for (auto& l : net.layers()) {
    const double bound = scale / std::sqrt(static_cast<double>(l.in_dim()));
    for (auto& w : l.weight.flat()) w = bound * (2.0 * rng.uniform() - 1.0);
  }
  return net;
}

// Binary layout (little-endian):
//   char[4]  "MLP1"
//   u32      layer count L
//   L x { u32 in, u32 out, u32 activation }
//   L x { f64 weight[out*in] (row-major), f64 bias[out] }

namespace io {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("unexpected end of data");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline double read_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw FormatError("unexpected end of data");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  if (n > (1u << 20)) throw FormatError("string length out of range");
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n)) throw FormatError("unexpected end of data");
  return s;
}

}  // namespace io

inline void write_mlp(std::ostream& os, const Mlp& net) {
  os.write("MLP1", 4);
  io::write_u32(os, static_cast<std::uint32_t>(net.num_layers()));
  for (const auto& l : net.layers()) {
    io::write_u32(os, static_cast<std::uint32_t>(l.in_dim()));
    io::write_u32(os, static_cast<std::uint32_t>(l.out_dim()));
    io::write_u32(os, static_cast<std::uint32_t>(l.activation));
  }
  for (const auto& l : net.layers()) {
    for (double w : l.weight.flat()) io::write_f64(os, w);
    for (double b : l.bias) io::write_f64(os, b);
  }
}

inline Mlp read_mlp(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "MLP1", 4) != 0) throw FormatError("bad MLP block magic");
  const std::uint32_t n = io::read_u32(is);
  if (n == 0 || n > 64) throw FormatError("MLP layer count out of range");
  MlpSpec spec;
  std::size_t prev_out = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t in = io::read_u32(is);
    const std::uint32_t out = io::read_u32(is);
    const std::uint32_t act = io::read_u32(is);
    if (in == 0 || out == 0 || in > (1u << 16) || out > (1u << 16) || act > 3)
      throw FormatError("MLP layer header out of range");
    if (i == 0)
      spec.input = in;
    else if (in != prev_out)
      throw FormatError("MLP layer dimensions are not chained");
    spec.layers.push_back({out, static_cast<Activation>(act)});
    prev_out = out;
  }
  Mlp net(spec);
  for (auto& l : net.layers()) {
    for (auto& w : l.weight.flat()) w = io::read_f64(is);
    for (auto& b : l.bias) b = io::read_f64(is);
    if (!all_finite(l.weight.flat()) || !all_finite(l.bias)) throw FormatError("non-finite parameter in MLP block");
  }
  return net;
}

}  // namespace gcvae
