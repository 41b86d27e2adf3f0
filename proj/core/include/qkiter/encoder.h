#ifndef QKITER_ENCODER_H_
#define QKITER_ENCODER_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qkiter/dense.h"
#include "qkiter/featurizer.h"
#include "qkiter/matrix.h"

namespace qkiter {

enum class Role : std::uint8_t { kQuery = 0, kKey = 1 };

std::string_view role_name(Role role);
Role other_role(Role role);

// Which side is being trained with its backbone unfrozen.
enum class Phase { kQuery, kKey };

// The baseline descriptor enters the output with weight 1 and the learned
// head with this factor, so a zero head reproduces the baseline exactly.
inline constexpr double kHeadResidualScale = 0.01;

// Per-feature standardisation frozen at initialisation. Stands in for batch
// normalisation layers whose statistics are not trained.
struct NormStats {
  Vector mean;
  Vector variance;

  static NormStats fit(MatrixView data);
  static NormStats identity(std::size_t dim);

  std::size_t dim() const { return mean.size(); }
  void standardize(std::span<const double> x, std::span<double> out) const;

  bool operator==(const NormStats& other) const = default;
};

struct EncoderDims {
  std::size_t input_dim = 64;
  std::size_t backbone_hidden = 64;
  std::size_t mid_dim = 64;
  std::size_t head_hidden = 64;
  std::size_t out_dim = 32;

  void validate() const;
};

struct EncoderParams {
  Role role = Role::kQuery;
  std::vector<DenseLayer> backbone;
  std::vector<DenseLayer> head;
  NormStats norm;
  bool trainable_backbone = true;
  bool trainable_head = true;

  std::size_t input_dim() const;
  std::size_t mid_dim() const;
  std::size_t out_dim() const;
  // Width of the baseline descriptor; equal to out_dim by construction.
  std::size_t base_dim() const { return out_dim(); }

  // Throws kInputShape if the layer chain is inconsistent.
  void validate() const;

  bool operator==(const EncoderParams& other) const = default;
};

// Backbone: two relu layers. Head: relu layer then an identity layer whose
// weights start at zero. Other layers draw U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
EncoderParams init_encoder(Role role, const EncoderDims& dims, NormStats norm,
                           std::uint64_t seed);

struct HeadCache {
  std::vector<DenseCache> layers;
};

struct EncoderCache {
  std::vector<DenseCache> backbone;
  Vector intermediate;
  Vector base;
  HeadCache head;
};

// Only the groups whose trainable flag was set when backward ran.
struct EncoderGrads {
  std::optional<std::vector<DenseGrad>> backbone;
  std::optional<std::vector<DenseGrad>> head;
};

Vector backbone_forward(const EncoderParams& enc, std::span<const double> x);
Matrix backbone_forward_rows(const EncoderParams& enc, MatrixView x,
                             std::size_t workers = 1);

// kHeadResidualScale * head(concat(intermediate, base)) + base.
Vector head_forward(const EncoderParams& enc, std::span<const double> intermediate,
                    std::span<const double> base, HeadCache* cache = nullptr);
Matrix head_forward_rows(const EncoderParams& enc, MatrixView intermediates,
                         MatrixView base, std::size_t workers = 1);

Vector encoder_forward(const EncoderParams& enc, const BaselineFeaturizer& featurizer,
                       std::span<const double> x, EncoderCache* cache = nullptr);
// Same as encoder_forward with a precomputed baseline descriptor.
Vector encoder_forward_with_base(const EncoderParams& enc, std::span<const double> x,
                                 std::span<const double> base,
                                 EncoderCache* cache = nullptr);
Matrix encoder_forward_rows(const EncoderParams& enc, MatrixView x, MatrixView base,
                            std::size_t workers = 1);

EncoderGrads encoder_backward(const EncoderParams& enc, const EncoderCache& cache,
                              std::span<const double> grad_descriptor);
// Gradient of the head parameters only; used for frozen-side database
// columns whose backbone output is a stored constant. grad_input, when
// requested, is taken through the head MLP only; the residual identity from
// base is not added.
std::vector<DenseGrad> head_backward(const EncoderParams& enc, const HeadCache& cache,
                                     std::span<const double> grad_descriptor,
                                     Vector* grad_input = nullptr);

// QPhase: query fully trainable, key head trainable, key backbone frozen.
// KPhase: the mirror image.
void set_phase_trainability(EncoderParams& query, EncoderParams& key, Phase phase);

// Flat parameter vectors for the optimizer, in layer order (weights then
// bias per layer).
Vector flatten_parameters(const std::vector<DenseLayer>& layers);
void assign_parameters(std::span<const double> flat, std::vector<DenseLayer>& layers);
Vector flatten_gradients(const std::vector<DenseGrad>& grads);
std::vector<DenseGrad> zero_grads_like(const std::vector<DenseLayer>& layers);
void accumulate(std::vector<DenseGrad>& into, const std::vector<DenseGrad>& grads);

}  // namespace qkiter

#endif  // QKITER_ENCODER_H_
