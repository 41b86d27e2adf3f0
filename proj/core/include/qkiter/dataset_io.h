#ifndef QKITER_DATASET_IO_H_
#define QKITER_DATASET_IO_H_

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "qkiter/encoder.h"
#include "qkiter/matrix.h"

namespace qkiter {

// Dataset file: "QKDS" | u32 version=1 | u64 n_rows | u32 dim | u64 id_base |
// n_rows * dim f32, row-major. Row r has id id_base + r.
struct Dataset {
  Matrix rows;
  std::uint64_t id_base = 0;
};

void write_dataset(const std::filesystem::path& path, MatrixView rows,
                   std::uint64_t id_base);
Dataset read_dataset(const std::filesystem::path& path);

// Descriptor file: "QKDV" | u32 version=1 | u64 n_rows | u32 dim |
// u64 id_base | u8 role | n_rows * dim f64, row-major.
struct DescriptorFile {
  Matrix descriptors;
  std::uint64_t id_base = 0;
  Role role = Role::kQuery;
};

void write_descriptors(const std::filesystem::path& path, MatrixView descriptors,
                       std::uint64_t id_base, Role role);
DescriptorFile read_descriptors(const std::filesystem::path& path);

}  // namespace qkiter

#endif  // QKITER_DATASET_IO_H_
