#ifndef QKITER_CHECKPOINT_H_
#define QKITER_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "qkiter/binary_io.h"
#include "qkiter/encoder.h"
#include "qkiter/featurizer.h"

namespace qkiter {

// Encoder checkpoint (little-endian):
//   "QKCP" | u32 version | u8 role | u8 trainable_backbone | u8 trainable_head
//   | backbone layers | head layers | norm stats | featurizer
// Each layer list is u32 count then per layer u32 out, u32 in, u8 activation,
// out*in f64 weights, out f64 bias. Norm stats are u32 dim then f64 means
// and variances. The featurizer is u64 seed, u32 in, u32 raw, u32 out,
// f64 projection scale, then the PCA mean, eigenvalues and components.
struct Checkpoint {
  EncoderParams encoder;
  BaselineFeaturizer featurizer;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& path, const EncoderParams& encoder,
                      const BaselineFeaturizer& featurizer);
Checkpoint read_checkpoint(const std::filesystem::path& path);
// Throws kContract when the stored role differs from `expected`.
Checkpoint read_checkpoint(const std::filesystem::path& path, Role expected);

// Section codecs shared with the train-state file.
void write_encoder_section(BinaryWriter& out, const EncoderParams& encoder);
EncoderParams read_encoder_section(BinaryReader& in);
void write_featurizer_section(BinaryWriter& out, const BaselineFeaturizer& featurizer);
BaselineFeaturizer read_featurizer_section(BinaryReader& in);

// Canonical byte image of the backbone (layers plus norm stats); two
// encoders have equal backbone bytes iff their backbones are bitwise equal.
std::vector<std::uint8_t> backbone_bytes(const EncoderParams& encoder);

}  // namespace qkiter

#endif  // QKITER_CHECKPOINT_H_
