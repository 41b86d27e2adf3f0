#include "qkiter/store.h"

#include <algorithm>
#include <string>
#include <utility>

#include "qkiter/binary_io.h"
#include "qkiter/error.h"
#include "qkiter/half.h"

namespace qkiter {

namespace {

constexpr std::string_view kStoreMagic = "QKIS";
constexpr std::uint64_t kRowCountOffset = 8;

}  // namespace

IntermediateStore IntermediateStore::open(const std::filesystem::path& path) {
  BinaryReader in(path);
  in.expect_magic(kStoreMagic);
  const std::uint32_t version = in.read_u32();
  require(version == kVersion, ErrorKind::kFormat,
          path.string() + ": unsupported store version " + std::to_string(version));
  IntermediateStore store;
  store.path_ = path;
  store.n_rows_ = in.read_u64();
  store.d_mid_ = in.read_u32();
  store.chunk_size_ = in.read_u32();
  require(store.chunk_size_ >= 1, ErrorKind::kFormat, path.string() + ": chunk size 0");
  in.read_bytes(store.source_tag_);
  const std::uint64_t count = static_cast<std::uint64_t>(store.n_rows_) * store.d_mid_;
  require(in.remaining() == count * sizeof(std::uint16_t), ErrorKind::kFormat,
          path.string() + ": payload size does not match " + std::to_string(store.n_rows_) +
              " x " + std::to_string(store.d_mid_) + " header");
  store.codes_.resize(count);
  in.read_u16s(store.codes_);
  return store;
}

std::size_t IntermediateStore::chunk_count() const {
  return (n_rows_ + chunk_size_ - 1) / chunk_size_;
}

std::size_t IntermediateStore::chunk_begin(std::size_t chunk_index) const {
  return chunk_index * chunk_size_;
}

std::size_t IntermediateStore::chunk_rows(std::size_t chunk_index) const {
  require(chunk_index < chunk_count(), ErrorKind::kIndex,
          "chunk " + std::to_string(chunk_index) + " out of range (store has " +
              std::to_string(chunk_count()) + " chunks)");
  return std::min(chunk_size_, n_rows_ - chunk_begin(chunk_index));
}

void IntermediateStore::read_chunk_into(std::size_t chunk_index, Matrix& out) const {
  const std::size_t rows = chunk_rows(chunk_index);
  if (out.rows() != rows || out.cols() != d_mid_) out = Matrix(rows, d_mid_);
  const std::size_t offset = chunk_begin(chunk_index) * d_mid_;
  decode_half_row(std::span(codes_).subspan(offset, rows * d_mid_), out.values());
}

Matrix IntermediateStore::read_chunk(std::size_t chunk_index) const {
  Matrix out;
  read_chunk_into(chunk_index, out);
  return out;
}

Vector IntermediateStore::read_row(std::size_t row) const {
  require(row < n_rows_, ErrorKind::kIndex,
          "row " + std::to_string(row) + " out of range (store has " +
              std::to_string(n_rows_) + " rows)");
  Vector out(d_mid_);
  decode_half_row(std::span(codes_).subspan(row * d_mid_, d_mid_), out);
  return out;
}

struct StoreWriter::Impl {
  Impl(std::filesystem::path path) : writer(std::move(path)) {}
  BinaryWriter writer;
  std::filesystem::path path;
  std::vector<std::uint16_t> buffer;
};

StoreWriter::StoreWriter(std::filesystem::path path, std::size_t d_mid,
                         std::size_t chunk_size, const Digest& source_tag)
    : d_mid_(d_mid) {
  require(chunk_size >= 1, ErrorKind::kValidation, "chunk_size must be >= 1");
  require(d_mid <= UINT32_MAX && chunk_size <= UINT32_MAX, ErrorKind::kValidation,
          "store dimensions exceed the 32-bit header fields");
  impl_ = std::make_unique<Impl>(path);
  impl_->path = std::move(path);
  impl_->buffer.resize(d_mid);
  auto& w = impl_->writer;
  w.write_magic(kStoreMagic);
  w.write_u32(IntermediateStore::kVersion);
  w.write_u64(0);  // row count, patched in finish()
  w.write_u32(static_cast<std::uint32_t>(d_mid));
  w.write_u32(static_cast<std::uint32_t>(chunk_size));
  w.write_bytes(source_tag);
}

StoreWriter::~StoreWriter() = default;

void StoreWriter::append(std::span<const double> row) {
  require(impl_ != nullptr, ErrorKind::kInternal, "append after finish");
  require(row.size() == d_mid_, ErrorKind::kFormat,
          "dimension drift at row " + std::to_string(n_rows_) + ": expected " +
              std::to_string(d_mid_) + " values, got " + std::to_string(row.size()));
  encode_half_row(row, impl_->buffer, n_rows_);
  impl_->writer.write_u16s(impl_->buffer);
  ++n_rows_;
}

IntermediateStore StoreWriter::finish() {
  require(impl_ != nullptr, ErrorKind::kInternal, "finish called twice");
  impl_->writer.seek(kRowCountOffset);
  impl_->writer.write_u64(n_rows_);
  impl_->writer.commit();
  const std::filesystem::path path = impl_->path;
  impl_.reset();
  return IntermediateStore::open(path);
}

IntermediateStore store_write(MatrixView rows, std::size_t chunk_size,
                              const Digest& source_tag, const std::filesystem::path& path) {
  StoreWriter writer(path, rows.cols(), chunk_size, source_tag);
  for (std::size_t r = 0; r < rows.rows(); ++r) writer.append(rows.row(r));
  return writer.finish();
}

}  // namespace qkiter
