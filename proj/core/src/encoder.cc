#include "qkiter/encoder.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "qkiter/error.h"
#include "qkiter/parallel.h"

namespace qkiter {

namespace {

constexpr double kMinVariance = 1e-12;

DenseLayer make_layer(std::size_t in, std::size_t out, Activation activation,
                      std::mt19937_64& rng, bool zero) {
  DenseLayer layer;
  layer.weight = Matrix(out, in);
  layer.bias.assign(out, 0.0);
  layer.activation = activation;
  if (!zero) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (double& w : layer.weight.values()) w = uniform(rng);
  }
  return layer;
}

Vector run_layers(const std::vector<DenseLayer>& layers, Vector x,
                  std::vector<DenseCache>* caches) {
  if (caches != nullptr) caches->resize(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    x = caches != nullptr ? dense_forward(layers[l], x, (*caches)[l])
                          : dense_forward(layers[l], x);
  }
  return x;
}

Matrix run_layers_rows(const std::vector<DenseLayer>& layers, Matrix x, std::size_t workers) {
  for (const DenseLayer& layer : layers) x = dense_forward_rows(layer, x, workers);
  return x;
}

// Backpropagates through `layers` given their caches; returns per-layer
// parameter gradients and leaves the input gradient in `grad`.
std::vector<DenseGrad> backprop_layers(const std::vector<DenseLayer>& layers,
                                       const std::vector<DenseCache>& caches, Vector& grad) {
  require(caches.size() == layers.size(), ErrorKind::kInternal,
          "cache holds " + std::to_string(caches.size()) + " layers, encoder has " +
              std::to_string(layers.size()));
  std::vector<DenseGrad> grads(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseCache& cache = caches[l];
    require(cache.input.size() == layers[l].in_dim() &&
                cache.pre_activation.size() == layers[l].out_dim(),
            ErrorKind::kInternal, "cache shape does not match layer " + std::to_string(l));
    DenseBackward step = dense_backward(layers[l], cache, grad);
    grads[l] = std::move(step.grad);
    grad = std::move(step.grad_input);
  }
  return grads;
}

void check_length(std::size_t got, std::size_t want, const char* what) {
  require(got == want, ErrorKind::kInputShape,
          std::string(what) + " has length " + std::to_string(got) + ", expected " +
              std::to_string(want));
}

}  // namespace

std::string_view role_name(Role role) { return role == Role::kQuery ? "query" : "key"; }

Role other_role(Role role) { return role == Role::kQuery ? Role::kKey : Role::kQuery; }

NormStats NormStats::fit(MatrixView data) {
  require(data.rows() >= 1, ErrorKind::kDegenerateInput, "cannot fit norm stats on no rows");
  NormStats stats;
  stats.mean.assign(data.cols(), 0.0);
  stats.variance.assign(data.cols(), 0.0);
  const double n = static_cast<double>(data.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.cols(); ++c) stats.mean[c] += data(r, c);
  }
  for (double& m : stats.mean) m /= n;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.cols(); ++c) {
      const double d = data(r, c) - stats.mean[c];
      stats.variance[c] += d * d;
    }
  }
  for (double& v : stats.variance) v /= n;
  return stats;
}

NormStats NormStats::identity(std::size_t dim) {
  return {Vector(dim, 0.0), Vector(dim, 1.0)};
}

void NormStats::standardize(std::span<const double> x, std::span<double> out) const {
  check_length(x.size(), mean.size(), "encoder input");
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = (x[i] - mean[i]) / std::sqrt(std::max(variance[i], kMinVariance));
  }
}

void EncoderDims::validate() const {
  require(input_dim >= 1 && backbone_hidden >= 1 && mid_dim >= 1 && head_hidden >= 1 &&
              out_dim >= 1,
          ErrorKind::kValidation, "encoder dimensions must be positive");
}

std::size_t EncoderParams::input_dim() const {
  return backbone.empty() ? norm.dim() : backbone.front().in_dim();
}

std::size_t EncoderParams::mid_dim() const {
  return backbone.empty() ? norm.dim() : backbone.back().out_dim();
}

std::size_t EncoderParams::out_dim() const {
  return head.empty() ? 0 : head.back().out_dim();
}

void EncoderParams::validate() const {
  require(!head.empty(), ErrorKind::kInputShape, "encoder has no head layers");
  require(norm.mean.size() == norm.variance.size(), ErrorKind::kInputShape,
          "norm stats mean/variance lengths differ");
  std::size_t width = norm.dim();
  for (std::size_t l = 0; l < backbone.size(); ++l) {
    backbone[l].validate();
    require(backbone[l].in_dim() == width, ErrorKind::kInputShape,
            "backbone layer " + std::to_string(l) + " expects " +
                std::to_string(backbone[l].in_dim()) + " inputs, previous width is " +
                std::to_string(width));
    width = backbone[l].out_dim();
  }
  width += out_dim();  // concat(intermediate, base)
  for (std::size_t l = 0; l < head.size(); ++l) {
    head[l].validate();
    require(head[l].in_dim() == width, ErrorKind::kInputShape,
            "head layer " + std::to_string(l) + " expects " +
                std::to_string(head[l].in_dim()) + " inputs, previous width is " +
                std::to_string(width));
    width = head[l].out_dim();
  }
}

EncoderParams init_encoder(Role role, const EncoderDims& dims, NormStats norm,
                           std::uint64_t seed) {
  dims.validate();
  require(norm.dim() == dims.input_dim, ErrorKind::kInputShape,
          "norm stats cover " + std::to_string(norm.dim()) + " features, encoder input is " +
              std::to_string(dims.input_dim));
  std::mt19937_64 rng(seed);
  EncoderParams enc;
  enc.role = role;
  enc.norm = std::move(norm);
  enc.backbone.push_back(make_layer(dims.input_dim, dims.backbone_hidden, Activation::kRelu,
                                    rng, false));
  enc.backbone.push_back(
      make_layer(dims.backbone_hidden, dims.mid_dim, Activation::kRelu, rng, false));
  enc.head.push_back(make_layer(dims.mid_dim + dims.out_dim, dims.head_hidden,
                                Activation::kRelu, rng, false));
  enc.head.push_back(
      make_layer(dims.head_hidden, dims.out_dim, Activation::kIdentity, rng, true));
  enc.validate();
  return enc;
}

Vector backbone_forward(const EncoderParams& enc, std::span<const double> x) {
  Vector standardized(x.size());
  enc.norm.standardize(x, standardized);
  return run_layers(enc.backbone, std::move(standardized), nullptr);
}

Matrix backbone_forward_rows(const EncoderParams& enc, MatrixView x, std::size_t workers) {
  check_length(x.cols(), enc.input_dim(), "encoder input");
  Matrix standardized(x.rows(), x.cols());
  parallel_for(x.rows(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) enc.norm.standardize(x.row(r), standardized.row(r));
  });
  return run_layers_rows(enc.backbone, std::move(standardized), workers);
}

Vector head_forward(const EncoderParams& enc, std::span<const double> intermediate,
                    std::span<const double> base, HeadCache* cache) {
  check_length(intermediate.size(), enc.mid_dim(), "intermediate descriptor");
  check_length(base.size(), enc.base_dim(), "baseline descriptor");
  Vector input(intermediate.begin(), intermediate.end());
  input.insert(input.end(), base.begin(), base.end());
  Vector out = run_layers(enc.head, std::move(input),
                          cache != nullptr ? &cache->layers : nullptr);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = kHeadResidualScale * out[i] + base[i];
  return out;
}

Matrix head_forward_rows(const EncoderParams& enc, MatrixView intermediates,
                         MatrixView base, std::size_t workers) {
  check_length(intermediates.cols(), enc.mid_dim(), "intermediate descriptor");
  check_length(base.cols(), enc.base_dim(), "baseline descriptor");
  require(intermediates.rows() == base.rows(), ErrorKind::kInputShape,
          "intermediate and baseline row counts differ");
  const std::size_t mid = intermediates.cols();
  const std::size_t width = mid + base.cols();
  Matrix input(intermediates.rows(), width);
  for (std::size_t r = 0; r < input.rows(); ++r) {
    auto row = input.row(r);
    std::copy_n(intermediates.row(r).begin(), mid, row.begin());
    std::copy_n(base.row(r).begin(), base.cols(), row.begin() + mid);
  }
  Matrix out = run_layers_rows(enc.head, std::move(input), workers);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const auto b = base.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = kHeadResidualScale * row[i] + b[i];
  }
  return out;
}

Vector encoder_forward_with_base(const EncoderParams& enc, std::span<const double> x,
                                 std::span<const double> base, EncoderCache* cache) {
  Vector standardized(x.size());
  enc.norm.standardize(x, standardized);
  Vector intermediate = run_layers(enc.backbone, std::move(standardized),
                                   cache != nullptr ? &cache->backbone : nullptr);
  Vector out = head_forward(enc, intermediate, base, cache != nullptr ? &cache->head : nullptr);
  if (cache != nullptr) {
    cache->intermediate = std::move(intermediate);
    cache->base.assign(base.begin(), base.end());
  }
  return out;
}

Vector encoder_forward(const EncoderParams& enc, const BaselineFeaturizer& featurizer,
                       std::span<const double> x, EncoderCache* cache) {
  const Vector base = baseline_featurize(featurizer, x);
  return encoder_forward_with_base(enc, x, base, cache);
}

Matrix encoder_forward_rows(const EncoderParams& enc, MatrixView x, MatrixView base,
                            std::size_t workers) {
  const Matrix intermediates = backbone_forward_rows(enc, x, workers);
  return head_forward_rows(enc, intermediates, base, workers);
}

std::vector<DenseGrad> head_backward(const EncoderParams& enc, const HeadCache& cache,
                                     std::span<const double> grad_descriptor,
                                     Vector* grad_input) {
  check_length(grad_descriptor.size(), enc.out_dim(), "descriptor gradient");
  Vector grad(grad_descriptor.size());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = kHeadResidualScale * grad_descriptor[i];
  std::vector<DenseGrad> grads = backprop_layers(enc.head, cache.layers, grad);
  if (grad_input != nullptr) *grad_input = std::move(grad);
  return grads;
}

EncoderGrads encoder_backward(const EncoderParams& enc, const EncoderCache& cache,
                              std::span<const double> grad_descriptor) {
  require(cache.intermediate.size() == enc.mid_dim() && cache.base.size() == enc.base_dim(),
          ErrorKind::kInternal, "encoder cache does not match the encoder's dimensions");
  EncoderGrads result;
  if (!enc.trainable_head && !enc.trainable_backbone) return result;
  Vector grad_concat;
  std::vector<DenseGrad> head_grads = head_backward(enc, cache.head, grad_descriptor,
                                                    &grad_concat);
  if (enc.trainable_head) result.head = std::move(head_grads);
  if (enc.trainable_backbone) {
    // The baseline part of the concat has no parameters behind it.
    Vector grad(grad_concat.begin(), grad_concat.begin() + static_cast<long>(enc.mid_dim()));
    result.backbone = backprop_layers(enc.backbone, cache.backbone, grad);
  }
  return result;
}

void set_phase_trainability(EncoderParams& query, EncoderParams& key, Phase phase) {
  query.trainable_head = true;
  key.trainable_head = true;
  query.trainable_backbone = phase == Phase::kQuery;
  key.trainable_backbone = phase == Phase::kKey;
}

Vector flatten_parameters(const std::vector<DenseLayer>& layers) {
  Vector flat;
  for (const DenseLayer& layer : layers) {
    flat.insert(flat.end(), layer.weight.values().begin(), layer.weight.values().end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

void assign_parameters(std::span<const double> flat, std::vector<DenseLayer>& layers) {
  std::size_t offset = 0;
  for (DenseLayer& layer : layers) {
    const std::size_t need = layer.parameter_count();
    require(offset + need <= flat.size(), ErrorKind::kInternal,
            "flat parameter vector is too short");
    auto weights = layer.weight.values();
    std::copy_n(flat.begin() + static_cast<long>(offset), weights.size(), weights.begin());
    offset += weights.size();
    std::copy_n(flat.begin() + static_cast<long>(offset), layer.bias.size(), layer.bias.begin());
    offset += layer.bias.size();
  }
  require(offset == flat.size(), ErrorKind::kInternal, "flat parameter vector is too long");
}

Vector flatten_gradients(const std::vector<DenseGrad>& grads) {
  Vector flat;
  for (const DenseGrad& g : grads) {
    flat.insert(flat.end(), g.weight.values().begin(), g.weight.values().end());
    flat.insert(flat.end(), g.bias.begin(), g.bias.end());
  }
  return flat;
}

std::vector<DenseGrad> zero_grads_like(const std::vector<DenseLayer>& layers) {
  std::vector<DenseGrad> grads;
  grads.reserve(layers.size());
  for (const DenseLayer& layer : layers) grads.push_back(zero_grad_like(layer));
  return grads;
}

void accumulate(std::vector<DenseGrad>& into, const std::vector<DenseGrad>& grads) {
  require(into.size() == grads.size(), ErrorKind::kInternal,
          "gradient layer counts differ during accumulation");
  for (std::size_t l = 0; l < into.size(); ++l) accumulate(into[l], grads[l]);
}

}  // namespace qkiter
