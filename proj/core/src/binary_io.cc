#include "qkiter/binary_io.h"

#include <cstring>
#include <system_error>
#include <utility>
#include <vector>

#include "qkiter/error.h"

namespace qkiter {

BinaryWriter::BinaryWriter(std::filesystem::path path)
    : path_(std::move(path)), tmp_path_(path_.string() + ".tmp") {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  out_.open(tmp_path_, std::ios::binary | std::ios::trunc);
  require(out_.is_open(), ErrorKind::kIo, "cannot open " + tmp_path_.string() + " for writing");
}

BinaryWriter::~BinaryWriter() {
  if (committed_) return;
  out_.close();
  std::error_code ec;
  std::filesystem::remove(tmp_path_, ec);
}

void BinaryWriter::check(const char* what) {
  require(out_.good(), ErrorKind::kIo,
          std::string("failed to ") + what + " " + tmp_path_.string());
}

void BinaryWriter::write_magic(std::string_view magic) {
  out_.write(magic.data(), static_cast<std::streamsize>(magic.size()));
  check("write");
}

void BinaryWriter::write_u8(std::uint8_t value) {
  out_.put(static_cast<char>(value));
  check("write");
}

void BinaryWriter::write_u32(std::uint32_t value) {
  out_.write(reinterpret_cast<const char*>(&value), sizeof(value));
  check("write");
}

void BinaryWriter::write_u64(std::uint64_t value) {
  out_.write(reinterpret_cast<const char*>(&value), sizeof(value));
  check("write");
}

void BinaryWriter::write_f64(double value) {
  out_.write(reinterpret_cast<const char*>(&value), sizeof(value));
  check("write");
}

void BinaryWriter::write_bytes(std::span<const std::uint8_t> bytes) {
  out_.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  check("write");
}

void BinaryWriter::write_u16s(std::span<const std::uint16_t> values) {
  out_.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size_bytes()));
  check("write");
}

void BinaryWriter::write_f32s(std::span<const float> values) {
  out_.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size_bytes()));
  check("write");
}

void BinaryWriter::write_f64s(std::span<const double> values) {
  out_.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size_bytes()));
  check("write");
}

void BinaryWriter::write_string(std::string_view value) {
  write_u32(static_cast<std::uint32_t>(value.size()));
  out_.write(value.data(), static_cast<std::streamsize>(value.size()));
  check("write");
}

std::uint64_t BinaryWriter::position() {
  return static_cast<std::uint64_t>(out_.tellp());
}

void BinaryWriter::seek(std::uint64_t offset) {
  out_.seekp(static_cast<std::streamoff>(offset));
  check("seek in");
}

void BinaryWriter::commit() {
  out_.flush();
  check("flush");
  out_.close();
  std::error_code ec;
  std::filesystem::rename(tmp_path_, path_, ec);
  require(!ec, ErrorKind::kIo,
          "cannot move " + tmp_path_.string() + " to " + path_.string() + ": " + ec.message());
  committed_ = true;
}

BinaryReader::BinaryReader(std::filesystem::path path) : path_(std::move(path)) {
  in_.open(path_, std::ios::binary);
  require(in_.is_open(), ErrorKind::kIo, "cannot open " + path_.string());
  in_.seekg(0, std::ios::end);
  size_ = static_cast<std::uint64_t>(in_.tellg());
  in_.seekg(0, std::ios::beg);
}

void BinaryReader::read_raw(void* out, std::size_t bytes) {
  require(remaining() >= bytes, ErrorKind::kFormat, path_.string() + ": truncated file");
  in_.read(static_cast<char*>(out), static_cast<std::streamsize>(bytes));
  require(in_.good(), ErrorKind::kIo, "read failed on " + path_.string());
}

void BinaryReader::expect_magic(std::string_view magic) {
  std::string got(magic.size(), '\0');
  read_raw(got.data(), got.size());
  require(got == magic, ErrorKind::kFormat,
          path_.string() + ": expected magic \"" + std::string(magic) + "\"");
}

std::uint8_t BinaryReader::read_u8() {
  std::uint8_t v = 0;
  read_raw(&v, sizeof(v));
  return v;
}

std::uint32_t BinaryReader::read_u32() {
  std::uint32_t v = 0;
  read_raw(&v, sizeof(v));
  return v;
}

std::uint64_t BinaryReader::read_u64() {
  std::uint64_t v = 0;
  read_raw(&v, sizeof(v));
  return v;
}

double BinaryReader::read_f64() {
  double v = 0;
  read_raw(&v, sizeof(v));
  return v;
}

void BinaryReader::read_bytes(std::span<std::uint8_t> out) { read_raw(out.data(), out.size()); }
void BinaryReader::read_u16s(std::span<std::uint16_t> out) {
  read_raw(out.data(), out.size_bytes());
}
void BinaryReader::read_f32s(std::span<float> out) { read_raw(out.data(), out.size_bytes()); }
void BinaryReader::read_f64s(std::span<double> out) { read_raw(out.data(), out.size_bytes()); }

std::string BinaryReader::read_string() {
  const std::uint32_t n = read_u32();
  std::string s(n, '\0');
  read_raw(s.data(), n);
  return s;
}

std::uint64_t BinaryReader::remaining() {
  return size_ - static_cast<std::uint64_t>(in_.tellg());
}

}  // namespace qkiter
