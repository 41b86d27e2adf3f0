#include "qkiter/synth.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "qkiter/error.h"
#include "qkiter/parallel.h"

namespace qkiter {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double to_float_precision(double x) { return static_cast<double>(static_cast<float>(x)); }

bool scale_enabled(const SynthConfig& c) {
  return !(c.scale_range[0] == 1.0 && c.scale_range[1] == 1.0);
}

SynthConfig derived_config(const SynthConfig& base, std::uint64_t stream, std::size_t n_keys) {
  SynthConfig c = base;
  c.seed = derive_seed(base.seed, stream, 0);
  c.n_keys = n_keys;
  const double ratio = static_cast<double>(n_keys) / static_cast<double>(base.n_keys);
  c.n_clusters = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(base.n_clusters) * ratio)), 1,
      n_keys);
  return c;
}

}  // namespace

void SynthConfig::validate() const {
  require(n_keys >= 1, ErrorKind::kValidation, "n_keys must be >= 1");
  require(d_in >= 1, ErrorKind::kValidation, "d_in must be >= 1");
  require(n_clusters >= 1 && n_clusters <= n_keys, ErrorKind::kValidation,
          "n_clusters must be in [1, n_keys]");
  require(cluster_spread >= 0.0 && std::isfinite(cluster_spread), ErrorKind::kValidation,
          "cluster_spread must be >= 0");
  require(noise_scale >= 0.0 && std::isfinite(noise_scale), ErrorKind::kValidation,
          "noise_scale must be >= 0");
  require(mask_fraction >= 0.0 && mask_fraction < 1.0, ErrorKind::kValidation,
          "mask_fraction must be in [0, 1)");
  require(scale_range[0] > 0.0 && scale_range[0] <= scale_range[1] &&
              std::isfinite(scale_range[1]),
          ErrorKind::kValidation, "scale_range must satisfy 0 < lo <= hi");
  require(shift_scale >= 0.0 && std::isfinite(shift_scale), ErrorKind::kValidation,
          "shift_scale must be >= 0");
}

std::string_view augmentation_name(AugmentationKind kind) {
  switch (kind) {
    case AugmentationKind::kAdditiveNoise: return "additive_noise";
    case AugmentationKind::kMaskBlock: return "mask_block";
    case AugmentationKind::kGlobalScale: return "global_scale";
    case AugmentationKind::kFeatureShift: return "feature_shift";
  }
  return "unknown";
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(stream ^ splitmix64(index)));
}

void AugmentationOp::apply(std::span<double> x, const SynthConfig& config) const {
  std::mt19937_64 rng(op_seed);
  const std::size_t d = x.size();
  switch (kind) {
    case AugmentationKind::kAdditiveNoise: {
      std::uniform_real_distribution<double> u(-config.noise_scale, config.noise_scale);
      for (double& v : x) v += u(rng);
      break;
    }
    case AugmentationKind::kMaskBlock: {
      if (d == 0) break;
      const auto len = std::min<std::size_t>(
          d, static_cast<std::size_t>(std::ceil(config.mask_fraction * static_cast<double>(d))));
      const std::size_t start = std::uniform_int_distribution<std::size_t>(0, d - 1)(rng);
      for (std::size_t j = 0; j < len; ++j) x[(start + j) % d] = 0.0;
      break;
    }
    case AugmentationKind::kGlobalScale: {
      const auto [lo, hi] = config.scale_range;
      double s = lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
      if (s == 1.0) s = hi;  // keep the op from degenerating to the identity
      for (double& v : x) v *= s;
      break;
    }
    case AugmentationKind::kFeatureShift: {
      const double c =
          std::uniform_real_distribution<double>(-config.shift_scale, config.shift_scale)(rng);
      for (double& v : x) v += c;
      break;
    }
  }
}

Matrix generate_keys(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(derive_seed(config.seed, kStreamKeys, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix centers(config.n_clusters, config.d_in);
  for (double& v : centers.values()) v = normal(rng);
  std::uniform_int_distribution<std::size_t> pick(0, config.n_clusters - 1);
  Matrix keys(config.n_keys, config.d_in);
  for (std::size_t i = 0; i < config.n_keys; ++i) {
    const auto center = centers.row(pick(rng));
    auto row = keys.row(i);
    for (std::size_t c = 0; c < config.d_in; ++c) {
      row[c] = to_float_precision(center[c] + config.cluster_spread * normal(rng));
    }
  }
  return keys;
}

std::vector<AugmentationOp> augmentation_plan(std::uint64_t item_index,
                                              const SynthConfig& config) {
  std::vector<AugmentationKind> enabled;
  if (config.noise_scale > 0.0) enabled.push_back(AugmentationKind::kAdditiveNoise);
  if (config.mask_fraction > 0.0) enabled.push_back(AugmentationKind::kMaskBlock);
  if (scale_enabled(config)) enabled.push_back(AugmentationKind::kGlobalScale);
  if (config.shift_scale > 0.0) enabled.push_back(AugmentationKind::kFeatureShift);
  if (enabled.empty()) return {};

  std::mt19937_64 rng(derive_seed(config.seed, kStreamAugment, item_index));
  std::shuffle(enabled.begin(), enabled.end(), rng);
  const std::size_t count = std::uniform_int_distribution<std::size_t>(
      1, std::min<std::size_t>(3, enabled.size()))(rng);
  std::vector<AugmentationOp> plan;
  for (std::size_t i = 0; i < count; ++i) plan.push_back({enabled[i], rng()});
  return plan;
}

Vector augment_query(std::span<const double> key, std::uint64_t item_index,
                     const SynthConfig& config) {
  Vector x(key.begin(), key.end());
  for (const AugmentationOp& op : augmentation_plan(item_index, config)) op.apply(x, config);
  for (double& v : x) v = to_float_precision(v);
  return x;
}

Matrix augment_rows(MatrixView keys, const SynthConfig& config, std::size_t workers) {
  Matrix out(keys.rows(), keys.cols());
  parallel_for(keys.rows(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out.set_row(i, augment_query(keys.row(i), i, config));
  });
  return out;
}

EvalSplit build_eval_split(const SynthConfig& config, std::size_t n_eval_queries,
                           std::size_t n_distractors) {
  config.validate();
  require(n_eval_queries >= 1, ErrorKind::kValidation, "n_eval_queries must be >= 1");
  EvalSplit split;
  split.eval_config = derived_config(config, kStreamEval, n_eval_queries);
  split.keys = generate_keys(split.eval_config);
  split.key_id_base = config.n_keys;
  split.query_id_base = 0;
  split.n_matched_queries = n_eval_queries;
  split.queries = Matrix(n_eval_queries + n_distractors, config.d_in);
  for (std::size_t i = 0; i < n_eval_queries; ++i) {
    split.queries.set_row(i, augment_query(split.keys.row(i), i, split.eval_config));
    split.ground_truth.add(split.query_id_base + i, split.key_id_base + i);
  }
  if (n_distractors > 0) {
    const SynthConfig distractor = derived_config(config, kStreamDistractor, n_distractors);
    const Matrix sources = generate_keys(distractor);
    for (std::size_t j = 0; j < n_distractors; ++j) {
      split.queries.set_row(n_eval_queries + j, augment_query(sources.row(j), j, distractor));
    }
  }
  return split;
}

}  // namespace qkiter
