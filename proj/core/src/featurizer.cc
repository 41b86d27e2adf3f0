#include "qkiter/featurizer.h"

#include <cmath>
#include <random>
#include <string>

#include "qkiter/error.h"
#include "qkiter/parallel.h"

namespace qkiter {

void FeaturizerSpec::validate() const {
  require(in_dim >= 1 && raw_dim >= 1 && out_dim >= 1, ErrorKind::kValidation,
          "featurizer dimensions must be positive");
  require(out_dim <= raw_dim, ErrorKind::kValidation,
          "featurizer output (" + std::to_string(out_dim) + ") exceeds projection width (" +
              std::to_string(raw_dim) + ")");
  require(projection_scale > 0.0 && std::isfinite(projection_scale), ErrorKind::kValidation,
          "featurizer projection_scale must be positive");
}

DenseLayer make_projection(const FeaturizerSpec& spec) {
  spec.validate();
  DenseLayer layer;
  layer.weight = Matrix(spec.raw_dim, spec.in_dim);
  layer.bias.assign(spec.raw_dim, 0.0);
  layer.activation = Activation::kTanh;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = spec.projection_scale / std::sqrt(static_cast<double>(spec.in_dim));
  for (double& w : layer.weight.values()) w = scale * normal(rng);
  return layer;
}

BaselineFeaturizer BaselineFeaturizer::fit(const FeaturizerSpec& spec, MatrixView fit_inputs) {
  require(fit_inputs.cols() == spec.in_dim, ErrorKind::kInputShape,
          "featurizer fit data has " + std::to_string(fit_inputs.cols()) +
              " columns, expected " + std::to_string(spec.in_dim));
  BaselineFeaturizer f;
  f.spec_ = spec;
  f.projection_ = make_projection(spec);
  const Matrix raw = dense_forward_rows(f.projection_, fit_inputs);
  f.pca_ = pca_fit(raw, spec.out_dim);
  return f;
}

BaselineFeaturizer BaselineFeaturizer::from_parts(const FeaturizerSpec& spec, PcaModel pca) {
  require(pca.in_dim() == spec.raw_dim && pca.out_dim() == spec.out_dim &&
              pca.mean.size() == spec.raw_dim,
          ErrorKind::kFormat, "PCA shape does not match the featurizer spec");
  BaselineFeaturizer f;
  f.spec_ = spec;
  f.projection_ = make_projection(spec);
  f.pca_ = std::move(pca);
  return f;
}

Vector baseline_featurize(const BaselineFeaturizer& featurizer, std::span<const double> x) {
  return pca_transform(featurizer.pca(), dense_forward(featurizer.projection(), x));
}

Matrix baseline_featurize_rows(const BaselineFeaturizer& featurizer, MatrixView x,
                               std::size_t workers) {
  const Matrix raw = dense_forward_rows(featurizer.projection(), x, workers);
  Matrix out(x.rows(), featurizer.out_dim());
  parallel_for(x.rows(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      out.set_row(r, pca_transform(featurizer.pca(), raw.row(r)));
    }
  });
  return out;
}

}  // namespace qkiter
