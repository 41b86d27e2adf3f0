#ifndef QKITER_PCA_H_
#define QKITER_PCA_H_

#include <cstddef>
#include <span>

#include "qkiter/matrix.h"

namespace qkiter {

// Principal components, no whitening: transform(x) = components * (x - mean).
struct PcaModel {
  Vector mean;
  Matrix components;  // d_out x d_in, orthonormal rows
  Vector eigenvalues;  // variance along each component, descending

  std::size_t in_dim() const { return components.cols(); }
  std::size_t out_dim() const { return components.rows(); }

  bool operator==(const PcaModel& other) const = default;
};

// Mean-centred covariance eigendecomposition. Components are ordered by
// descending eigenvalue; each row's largest-magnitude entry is positive.
// Throws kRank when fewer than `out_dim` directions carry variance.
PcaModel pca_fit(MatrixView data, std::size_t out_dim);

Vector pca_transform(const PcaModel& model, std::span<const double> x);
// components^T * y + mean.
Vector pca_reconstruct(const PcaModel& model, std::span<const double> y);

}  // namespace qkiter

#endif  // QKITER_PCA_H_
