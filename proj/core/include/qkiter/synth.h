#ifndef QKITER_SYNTH_H_
#define QKITER_SYNTH_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "qkiter/matrix.h"
#include "qkiter/metrics.h"

namespace qkiter {

struct SynthConfig {
  std::size_t n_keys = 10000;
  std::size_t d_in = 64;
  std::size_t n_clusters = 500;
  double cluster_spread = 0.35;  // within-cluster standard deviation
  double noise_scale = 0.3;
  double mask_fraction = 0.25;
  std::array<double, 2> scale_range = {0.6, 1.4};
  double shift_scale = 0.5;
  std::uint64_t seed = 1;

  // Throws kValidation.
  void validate() const;
};

enum class AugmentationKind : std::uint8_t {
  kAdditiveNoise,  // x + U(-noise, noise) per feature
  kMaskBlock,      // zero a contiguous (cyclic) block of ceil(fraction * d)
  kGlobalScale,    // x * s, s ~ U(lo, hi)
  kFeatureShift,   // x + c, one offset c ~ U(-shift, shift) for all features
};

std::string_view augmentation_name(AugmentationKind kind);

struct AugmentationOp {
  AugmentationKind kind = AugmentationKind::kAdditiveNoise;
  std::uint64_t op_seed = 0;

  void apply(std::span<double> x, const SynthConfig& config) const;
};

// Mixes a master seed, a stream id and an item index into one 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// Seed streams, fixed so files stay reproducible.
inline constexpr std::uint64_t kStreamKeys = 1;
inline constexpr std::uint64_t kStreamAugment = 2;
inline constexpr std::uint64_t kStreamEval = 3;
inline constexpr std::uint64_t kStreamDistractor = 4;

// n_keys x d_in. Rows are rounded to float32 so the in-memory matrix equals
// what a dataset file stores.
Matrix generate_keys(const SynthConfig& config);

// 1 to 3 distinct operations among those with a non-zero magnitude, in a
// seeded order. Empty when every magnitude is zero.
std::vector<AugmentationOp> augmentation_plan(std::uint64_t item_index,
                                              const SynthConfig& config);
// Deterministic in (config.seed, item_index); result rounded to float32.
Vector augment_query(std::span<const double> key, std::uint64_t item_index,
                     const SynthConfig& config);
Matrix augment_rows(MatrixView keys, const SynthConfig& config, std::size_t workers = 1);

// Held-out evaluation data from a disjoint seed stream. Key ids start at
// config.n_keys (after every training id); query ids start at 0 and the
// distractor queries come last.
struct EvalSplit {
  SynthConfig eval_config;  // the config whose seed reproduces the queries
  Matrix keys;
  std::uint64_t key_id_base = 0;
  Matrix queries;
  std::uint64_t query_id_base = 0;
  std::size_t n_matched_queries = 0;
  GroundTruth ground_truth;
};

EvalSplit build_eval_split(const SynthConfig& config, std::size_t n_eval_queries,
                           std::size_t n_distractors);

}  // namespace qkiter

#endif  // QKITER_SYNTH_H_
