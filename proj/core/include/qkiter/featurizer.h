#ifndef QKITER_FEATURIZER_H_
#define QKITER_FEATURIZER_H_

#include <cstddef>
#include <cstdint>
#include <span>

#include "qkiter/dense.h"
#include "qkiter/matrix.h"
#include "qkiter/pca.h"

namespace qkiter {

struct FeaturizerSpec {
  std::uint64_t seed = 0;
  std::size_t in_dim = 0;
  std::size_t raw_dim = 0;   // width of the random tanh projection
  std::size_t out_dim = 0;   // PCA output, equals the descriptor size
  double projection_scale = 1.0;

  void validate() const;
  bool operator==(const FeaturizerSpec& other) const = default;
};

// Fixed stand-in for a hand-crafted global descriptor:
// pca(tanh(projection * x)). The projection is regenerated from the seed;
// only the PCA needs data. Never trained, shared by both encoders.
class BaselineFeaturizer {
 public:
  BaselineFeaturizer() = default;

  // Fits the PCA on the projected rows of `fit_inputs`.
  static BaselineFeaturizer fit(const FeaturizerSpec& spec, MatrixView fit_inputs);
  static BaselineFeaturizer from_parts(const FeaturizerSpec& spec, PcaModel pca);

  const FeaturizerSpec& spec() const { return spec_; }
  const DenseLayer& projection() const { return projection_; }
  const PcaModel& pca() const { return pca_; }
  std::size_t in_dim() const { return spec_.in_dim; }
  std::size_t out_dim() const { return spec_.out_dim; }

  bool operator==(const BaselineFeaturizer& other) const = default;

 private:
  FeaturizerSpec spec_;
  DenseLayer projection_;
  PcaModel pca_;
};

DenseLayer make_projection(const FeaturizerSpec& spec);

Vector baseline_featurize(const BaselineFeaturizer& featurizer,
                          std::span<const double> x);
Matrix baseline_featurize_rows(const BaselineFeaturizer& featurizer, MatrixView x,
                               std::size_t workers = 1);

}  // namespace qkiter

#endif  // QKITER_FEATURIZER_H_
