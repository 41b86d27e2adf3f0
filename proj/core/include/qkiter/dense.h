#ifndef QKITER_DENSE_H_
#define QKITER_DENSE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "qkiter/matrix.h"

namespace qkiter {

enum class Activation : std::uint8_t { kIdentity = 0, kRelu = 1, kTanh = 2 };

std::string_view activation_name(Activation activation);
Activation activation_from_code(std::uint8_t code);

// Fully connected layer: activation(weight * x + bias), weight is out x in.
struct DenseLayer {
  Matrix weight;
  Vector bias;
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  // Throws kInputShape when weight and bias disagree.
  void validate() const;

  bool operator==(const DenseLayer& other) const = default;
};

struct DenseCache {
  Vector input;
  Vector pre_activation;
};

struct DenseGrad {
  Matrix weight;
  Vector bias;
};

struct DenseBackward {
  DenseGrad grad;
  Vector grad_input;
};

// Each output accumulates bias[o] + w[o][0]*x[0] + w[o][1]*x[1] + ... in
// that order, in every overload below. Keeping one summation order is what
// makes the single-row and batched paths bitwise interchangeable.
Vector dense_forward(const DenseLayer& layer, std::span<const double> x);
Vector dense_forward(const DenseLayer& layer, std::span<const double> x,
                     DenseCache& cache);

// Applies the layer to every row of `x`. Rows are independent, so the
// result does not depend on how rows are split across workers.
Matrix dense_forward_rows(const DenseLayer& layer, MatrixView x,
                          std::size_t workers = 1);

DenseBackward dense_backward(const DenseLayer& layer, std::span<const double> x,
                             std::span<const double> pre_activation,
                             std::span<const double> grad_out);
DenseBackward dense_backward(const DenseLayer& layer, const DenseCache& cache,
                             std::span<const double> grad_out);

double apply_activation(Activation activation, double z);
double activation_derivative(Activation activation, double z);

// Zero-filled gradient shaped like `layer`.
DenseGrad zero_grad_like(const DenseLayer& layer);
void accumulate(DenseGrad& into, const DenseGrad& grad);

}  // namespace qkiter

#endif  // QKITER_DENSE_H_
