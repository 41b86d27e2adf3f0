#include "qkiter/dense.h"

#include <cmath>
#include <string>

#include "qkiter/error.h"
#include "qkiter/parallel.h"

namespace qkiter {

std::string_view activation_name(Activation activation) {
  switch (activation) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "unknown";
}

Activation activation_from_code(std::uint8_t code) {
  require(code <= 2, ErrorKind::kFormat,
          "unknown activation code " + std::to_string(code));
  return static_cast<Activation>(code);
}

void DenseLayer::validate() const {
  require(bias.size() == weight.rows(), ErrorKind::kInputShape,
          "layer weight has " + std::to_string(weight.rows()) + " rows but bias has " +
              std::to_string(bias.size()) + " entries");
  require(static_cast<std::uint8_t>(activation) <= 2, ErrorKind::kInputShape,
          "invalid activation tag");
}

double apply_activation(Activation activation, double z) {
  switch (activation) {
    case Activation::kIdentity: return z;
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kTanh: return std::tanh(z);
  }
  return z;
}

double activation_derivative(Activation activation, double z) {
  switch (activation) {
    case Activation::kIdentity: return 1.0;
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

namespace {

void check_input(const DenseLayer& layer, std::size_t n) {
  require(n == layer.in_dim(), ErrorKind::kInputShape,
          "layer expects input of length " + std::to_string(layer.in_dim()) + ", got " +
              std::to_string(n));
}

void affine(const DenseLayer& layer, std::span<const double> x, std::span<double> z) {
  const std::size_t in = layer.in_dim();
  for (std::size_t o = 0; o < layer.out_dim(); ++o) {
    const double* w = layer.weight.data() + o * in;
    double acc = layer.bias[o];
    for (std::size_t i = 0; i < in; ++i) acc += w[i] * x[i];
    z[o] = acc;
  }
}

}  // namespace

Vector dense_forward(const DenseLayer& layer, std::span<const double> x) {
  check_input(layer, x.size());
  Vector y(layer.out_dim());
  affine(layer, x, y);
  for (double& v : y) v = apply_activation(layer.activation, v);
  return y;
}

Vector dense_forward(const DenseLayer& layer, std::span<const double> x,
                     DenseCache& cache) {
  check_input(layer, x.size());
  cache.input.assign(x.begin(), x.end());
  cache.pre_activation.resize(layer.out_dim());
  affine(layer, x, cache.pre_activation);
  Vector y(layer.out_dim());
  for (std::size_t o = 0; o < y.size(); ++o) {
    y[o] = apply_activation(layer.activation, cache.pre_activation[o]);
  }
  return y;
}

Matrix dense_forward_rows(const DenseLayer& layer, MatrixView x, std::size_t workers) {
  check_input(layer, x.cols());
  const std::size_t in = layer.in_dim();
  const std::size_t out = layer.out_dim();
  // Transposed weights turn the inner loop into an axpy over outputs, which
  // vectorises without reassociating any output's sum.
  Vector wt(in * out);
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t i = 0; i < in; ++i) wt[i * out + o] = layer.weight(o, i);
  }
  Matrix y(x.rows(), out);
  parallel_for(x.rows(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const double* xr = x.data() + r * in;
      double* yr = y.data() + r * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] = layer.bias[o];
      for (std::size_t i = 0; i < in; ++i) {
        const double xi = xr[i];
        const double* w = wt.data() + i * out;
        for (std::size_t o = 0; o < out; ++o) yr[o] += w[o] * xi;
      }
      for (std::size_t o = 0; o < out; ++o) yr[o] = apply_activation(layer.activation, yr[o]);
    }
  });
  return y;
}

DenseBackward dense_backward(const DenseLayer& layer, std::span<const double> x,
                             std::span<const double> pre_activation,
                             std::span<const double> grad_out) {
  check_input(layer, x.size());
  const std::size_t out = layer.out_dim();
  const std::size_t in = layer.in_dim();
  require(pre_activation.size() == out && grad_out.size() == out, ErrorKind::kInputShape,
          "backward expects " + std::to_string(out) + " outputs, got pre-activation " +
              std::to_string(pre_activation.size()) + " and gradient " +
              std::to_string(grad_out.size()));
  DenseBackward result;
  result.grad.weight = Matrix(out, in);
  result.grad.bias.resize(out);
  result.grad_input.assign(in, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double gz = grad_out[o] * activation_derivative(layer.activation, pre_activation[o]);
    result.grad.bias[o] = gz;
    double* gw = result.grad.weight.data() + o * in;
    const double* w = layer.weight.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) {
      gw[i] = gz * x[i];
      result.grad_input[i] += w[i] * gz;
    }
  }
  return result;
}

DenseBackward dense_backward(const DenseLayer& layer, const DenseCache& cache,
                             std::span<const double> grad_out) {
  return dense_backward(layer, cache.input, cache.pre_activation, grad_out);
}

DenseGrad zero_grad_like(const DenseLayer& layer) {
  return {Matrix(layer.out_dim(), layer.in_dim()), Vector(layer.out_dim(), 0.0)};
}

void accumulate(DenseGrad& into, const DenseGrad& grad) {
  require(into.weight.rows() == grad.weight.rows() &&
              into.weight.cols() == grad.weight.cols() &&
              into.bias.size() == grad.bias.size(),
          ErrorKind::kInternal, "gradient shapes differ during accumulation");
  auto dst = into.weight.values();
  auto src = grad.weight.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  for (std::size_t i = 0; i < into.bias.size(); ++i) into.bias[i] += grad.bias[i];
}

}  // namespace qkiter
