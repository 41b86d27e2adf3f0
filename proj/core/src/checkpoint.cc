#include "qkiter/checkpoint.h"

#include <bit>
#include <cstring>
#include <string>

#include "qkiter/error.h"

namespace qkiter {

namespace {

constexpr std::string_view kCheckpointMagic = "QKCP";

void write_layers(BinaryWriter& out, const std::vector<DenseLayer>& layers) {
  out.write_u32(static_cast<std::uint32_t>(layers.size()));
  for (const DenseLayer& layer : layers) {
    out.write_u32(static_cast<std::uint32_t>(layer.out_dim()));
    out.write_u32(static_cast<std::uint32_t>(layer.in_dim()));
    out.write_u8(static_cast<std::uint8_t>(layer.activation));
    out.write_f64s(layer.weight.values());
    out.write_f64s(layer.bias);
  }
}

std::vector<DenseLayer> read_layers(BinaryReader& in) {
  const std::uint32_t count = in.read_u32();
  require(count <= 64, ErrorKind::kFormat, in.path().string() + ": implausible layer count");
  std::vector<DenseLayer> layers(count);
  for (DenseLayer& layer : layers) {
    const std::uint32_t out = in.read_u32();
    const std::uint32_t inputs = in.read_u32();
    require(static_cast<std::uint64_t>(out) * inputs * 8 <= in.remaining(), ErrorKind::kFormat,
            in.path().string() + ": layer larger than the file");
    layer.activation = activation_from_code(in.read_u8());
    layer.weight = Matrix(out, inputs);
    in.read_f64s(layer.weight.values());
    layer.bias.resize(out);
    in.read_f64s(layer.bias);
  }
  return layers;
}

void write_vector(BinaryWriter& out, std::span<const double> values) {
  out.write_u32(static_cast<std::uint32_t>(values.size()));
  out.write_f64s(values);
}

Vector read_vector(BinaryReader& in) {
  const std::uint32_t n = in.read_u32();
  require(static_cast<std::uint64_t>(n) * 8 <= in.remaining(), ErrorKind::kFormat,
          in.path().string() + ": vector larger than the file");
  Vector v(n);
  in.read_f64s(v);
  return v;
}

void append_bytes(std::vector<std::uint8_t>& out, const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  out.insert(out.end(), p, p + n);
}

}  // namespace

void write_encoder_section(BinaryWriter& out, const EncoderParams& encoder) {
  out.write_u8(static_cast<std::uint8_t>(encoder.role));
  out.write_u8(encoder.trainable_backbone ? 1 : 0);
  out.write_u8(encoder.trainable_head ? 1 : 0);
  write_layers(out, encoder.backbone);
  write_layers(out, encoder.head);
  write_vector(out, encoder.norm.mean);
  write_vector(out, encoder.norm.variance);
}

EncoderParams read_encoder_section(BinaryReader& in) {
  EncoderParams enc;
  const std::uint8_t role = in.read_u8();
  require(role <= 1, ErrorKind::kFormat, in.path().string() + ": invalid role byte");
  enc.role = static_cast<Role>(role);
  enc.trainable_backbone = in.read_u8() != 0;
  enc.trainable_head = in.read_u8() != 0;
  enc.backbone = read_layers(in);
  enc.head = read_layers(in);
  enc.norm.mean = read_vector(in);
  enc.norm.variance = read_vector(in);
  enc.validate();
  return enc;
}

void write_featurizer_section(BinaryWriter& out, const BaselineFeaturizer& featurizer) {
  const FeaturizerSpec& spec = featurizer.spec();
  out.write_u64(spec.seed);
  out.write_u32(static_cast<std::uint32_t>(spec.in_dim));
  out.write_u32(static_cast<std::uint32_t>(spec.raw_dim));
  out.write_u32(static_cast<std::uint32_t>(spec.out_dim));
  out.write_f64(spec.projection_scale);
  write_vector(out, featurizer.pca().mean);
  write_vector(out, featurizer.pca().eigenvalues);
  out.write_f64s(featurizer.pca().components.values());
}

BaselineFeaturizer read_featurizer_section(BinaryReader& in) {
  FeaturizerSpec spec;
  spec.seed = in.read_u64();
  spec.in_dim = in.read_u32();
  spec.raw_dim = in.read_u32();
  spec.out_dim = in.read_u32();
  spec.projection_scale = in.read_f64();
  spec.validate();
  PcaModel pca;
  pca.mean = read_vector(in);
  pca.eigenvalues = read_vector(in);
  require(pca.mean.size() == spec.raw_dim && pca.eigenvalues.size() == spec.out_dim,
          ErrorKind::kFormat, in.path().string() + ": PCA shape does not match featurizer");
  pca.components = Matrix(spec.out_dim, spec.raw_dim);
  in.read_f64s(pca.components.values());
  return BaselineFeaturizer::from_parts(spec, std::move(pca));
}

void write_checkpoint(const std::filesystem::path& path, const EncoderParams& encoder,
                      const BaselineFeaturizer& featurizer) {
  encoder.validate();
  BinaryWriter out(path);
  out.write_magic(kCheckpointMagic);
  out.write_u32(kCheckpointVersion);
  write_encoder_section(out, encoder);
  write_featurizer_section(out, featurizer);
  out.commit();
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  BinaryReader in(path);
  in.expect_magic(kCheckpointMagic);
  const std::uint32_t version = in.read_u32();
  require(version == kCheckpointVersion, ErrorKind::kFormat,
          path.string() + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint cp;
  cp.encoder = read_encoder_section(in);
  cp.featurizer = read_featurizer_section(in);
  require(in.remaining() == 0, ErrorKind::kFormat, path.string() + ": trailing bytes");
  require(cp.featurizer.in_dim() == cp.encoder.input_dim() &&
              cp.featurizer.out_dim() == cp.encoder.base_dim(),
          ErrorKind::kFormat, path.string() + ": featurizer does not fit the encoder");
  return cp;
}

Checkpoint read_checkpoint(const std::filesystem::path& path, Role expected) {
  Checkpoint cp = read_checkpoint(path);
  require(cp.encoder.role == expected, ErrorKind::kContract,
          path.string() + " is a " + std::string(role_name(cp.encoder.role)) +
              " checkpoint, refusing to use it for the " + std::string(role_name(expected)) +
              " role");
  return cp;
}

std::vector<std::uint8_t> backbone_bytes(const EncoderParams& encoder) {
  std::vector<std::uint8_t> out;
  for (const DenseLayer& layer : encoder.backbone) {
    const std::uint64_t shape[2] = {layer.out_dim(), layer.in_dim()};
    append_bytes(out, shape, sizeof(shape));
    append_bytes(out, &layer.activation, 1);
    append_bytes(out, layer.weight.data(), layer.weight.size() * sizeof(double));
    append_bytes(out, layer.bias.data(), layer.bias.size() * sizeof(double));
  }
  append_bytes(out, encoder.norm.mean.data(), encoder.norm.mean.size() * sizeof(double));
  append_bytes(out, encoder.norm.variance.data(),
               encoder.norm.variance.size() * sizeof(double));
  return out;
}

}  // namespace qkiter
