#include "qkiter/pca.h"

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "qkiter/error.h"

namespace qkiter {

PcaModel pca_fit(MatrixView data, std::size_t out_dim) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  require(out_dim >= 1 && out_dim <= d, ErrorKind::kRank,
          "cannot keep " + std::to_string(out_dim) + " components of " +
              std::to_string(d) + "-dimensional data");
  require(n >= out_dim && n >= 2, ErrorKind::kRank,
          std::to_string(n) + " rows cannot span " + std::to_string(out_dim) + " components");

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) model.mean[c] += data(r, c);
  }
  for (double& m : model.mean) m /= static_cast<double>(n);

  Eigen::MatrixXd centered(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) centered(r, c) = data(r, c) - model.mean[c];
  }
  const Eigen::MatrixXd covariance =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  require(solver.info() == Eigen::Success, ErrorKind::kNumeric,
          "covariance eigendecomposition did not converge");

  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd& values = solver.eigenvalues();
  const double largest = std::max(values(d - 1), 0.0);
  const double tolerance = largest * static_cast<double>(d) * 1e-12;
  std::size_t rank = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (values(i) > tolerance && largest > 0.0) ++rank;
  }
  require(out_dim <= rank, ErrorKind::kRank,
          "requested " + std::to_string(out_dim) + " components but the data has rank " +
              std::to_string(rank));

  model.components = Matrix(out_dim, d);
  model.eigenvalues.resize(out_dim);
  for (std::size_t k = 0; k < out_dim; ++k) {
    const Eigen::Index column = static_cast<Eigen::Index>(d - 1 - k);
    Eigen::VectorXd v = solver.eigenvectors().col(column);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    for (std::size_t c = 0; c < d; ++c) model.components(k, c) = v(static_cast<Eigen::Index>(c));
    model.eigenvalues[k] = values(column);
  }
  return model;
}

Vector pca_transform(const PcaModel& model, std::span<const double> x) {
  require(x.size() == model.in_dim(), ErrorKind::kInputShape,
          "PCA expects input of length " + std::to_string(model.in_dim()) + ", got " +
              std::to_string(x.size()));
  Vector out(model.out_dim(), 0.0);
  for (std::size_t k = 0; k < model.out_dim(); ++k) {
    const auto component = model.components.row(k);
    double acc = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) acc += component[c] * (x[c] - model.mean[c]);
    out[k] = acc;
  }
  return out;
}

Vector pca_reconstruct(const PcaModel& model, std::span<const double> y) {
  require(y.size() == model.out_dim(), ErrorKind::kInputShape,
          "PCA reconstruction expects " + std::to_string(model.out_dim()) + " coordinates");
  Vector out(model.mean);
  for (std::size_t k = 0; k < model.out_dim(); ++k) {
    const auto component = model.components.row(k);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += y[k] * component[c];
  }
  return out;
}

}  // namespace qkiter
