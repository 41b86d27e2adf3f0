#ifndef QKITER_BINARY_IO_H_
#define QKITER_BINARY_IO_H_

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>

namespace qkiter {

// All on-disk formats are little-endian. Bulk arrays are copied as raw
// bytes, which is only correct on little-endian hosts.
static_assert(std::endian::native == std::endian::little,
              "qkiter file formats assume a little-endian host");

class BinaryWriter {
 public:
  explicit BinaryWriter(std::filesystem::path path);
  ~BinaryWriter();
  BinaryWriter(const BinaryWriter&) = delete;
  BinaryWriter& operator=(const BinaryWriter&) = delete;

  void write_magic(std::string_view magic);
  void write_u8(std::uint8_t value);
  void write_u32(std::uint32_t value);
  void write_u64(std::uint64_t value);
  void write_f64(double value);
  void write_bytes(std::span<const std::uint8_t> bytes);
  void write_u16s(std::span<const std::uint16_t> values);
  void write_f32s(std::span<const float> values);
  void write_f64s(std::span<const double> values);
  void write_string(std::string_view value);

  std::uint64_t position();
  void seek(std::uint64_t offset);

  // Flushes and atomically renames the temporary file onto the target path.
  void commit();

 private:
  void check(const char* what);

  std::filesystem::path path_;
  std::filesystem::path tmp_path_;
  std::ofstream out_;
  bool committed_ = false;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::filesystem::path path);

  // Throws kFormat when the next bytes differ from `magic`.
  void expect_magic(std::string_view magic);
  std::uint8_t read_u8();
  std::uint32_t read_u32();
  std::uint64_t read_u64();
  double read_f64();
  void read_bytes(std::span<std::uint8_t> out);
  void read_u16s(std::span<std::uint16_t> out);
  void read_f32s(std::span<float> out);
  void read_f64s(std::span<double> out);
  std::string read_string();

  std::uint64_t remaining();
  const std::filesystem::path& path() const { return path_; }

 private:
  void read_raw(void* out, std::size_t bytes);

  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
};

}  // namespace qkiter

#endif  // QKITER_BINARY_IO_H_
