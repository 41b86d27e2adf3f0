#include "qkiter/dataset_io.h"

#include <string>
#include <vector>

#include "qkiter/binary_io.h"
#include "qkiter/error.h"

namespace qkiter {

namespace {

constexpr std::string_view kDatasetMagic = "QKDS";
constexpr std::string_view kDescriptorMagic = "QKDV";
constexpr std::uint32_t kVersion = 1;

void check_version(BinaryReader& in) {
  const std::uint32_t version = in.read_u32();
  require(version == kVersion, ErrorKind::kFormat,
          in.path().string() + ": unsupported version " + std::to_string(version));
}

}  // namespace

void write_dataset(const std::filesystem::path& path, MatrixView rows, std::uint64_t id_base) {
  BinaryWriter out(path);
  out.write_magic(kDatasetMagic);
  out.write_u32(kVersion);
  out.write_u64(rows.rows());
  out.write_u32(static_cast<std::uint32_t>(rows.cols()));
  out.write_u64(id_base);
  std::vector<float> buffer(rows.cols());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto row = rows.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) buffer[c] = static_cast<float>(row[c]);
    out.write_f32s(buffer);
  }
  out.commit();
}

Dataset read_dataset(const std::filesystem::path& path) {
  BinaryReader in(path);
  in.expect_magic(kDatasetMagic);
  check_version(in);
  const std::uint64_t n = in.read_u64();
  const std::uint32_t d = in.read_u32();
  Dataset ds;
  ds.id_base = in.read_u64();
  require(in.remaining() == n * d * sizeof(float), ErrorKind::kFormat,
          path.string() + ": payload does not match the header");
  std::vector<float> buffer(n * d);
  in.read_f32s(buffer);
  ds.rows = Matrix(n, d);
  auto values = ds.rows.values();
  for (std::size_t i = 0; i < buffer.size(); ++i) values[i] = buffer[i];
  return ds;
}

void write_descriptors(const std::filesystem::path& path, MatrixView descriptors,
                       std::uint64_t id_base, Role role) {
  BinaryWriter out(path);
  out.write_magic(kDescriptorMagic);
  out.write_u32(kVersion);
  out.write_u64(descriptors.rows());
  out.write_u32(static_cast<std::uint32_t>(descriptors.cols()));
  out.write_u64(id_base);
  out.write_u8(static_cast<std::uint8_t>(role));
  out.write_f64s({descriptors.data(), descriptors.rows() * descriptors.cols()});
  out.commit();
}

DescriptorFile read_descriptors(const std::filesystem::path& path) {
  BinaryReader in(path);
  in.expect_magic(kDescriptorMagic);
  check_version(in);
  const std::uint64_t n = in.read_u64();
  const std::uint32_t d = in.read_u32();
  DescriptorFile file;
  file.id_base = in.read_u64();
  const std::uint8_t role = in.read_u8();
  require(role <= 1, ErrorKind::kFormat, path.string() + ": invalid role byte");
  file.role = static_cast<Role>(role);
  require(in.remaining() == n * d * sizeof(double), ErrorKind::kFormat,
          path.string() + ": payload does not match the header");
  file.descriptors = Matrix(n, d);
  in.read_f64s(file.descriptors.values());
  return file;
}

}  // namespace qkiter
