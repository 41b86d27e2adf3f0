#ifndef QKITER_STORE_H_
#define QKITER_STORE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "qkiter/digest.h"
#include "qkiter/matrix.h"

namespace qkiter {

inline constexpr std::size_t kDefaultChunkSize = 65536;

// On-disk layout (little-endian):
//   "QKIS" | u32 version=1 | u64 n_rows | u32 d_mid | u32 chunk_size |
//   32-byte source tag | n_rows * d_mid binary16 values, row-major.
// Chunks are consecutive runs of chunk_size rows; the last may be short.
class IntermediateStore {
 public:
  static constexpr std::uint32_t kVersion = 1;

  // Loads the whole file; throws kIo / kFormat.
  static IntermediateStore open(const std::filesystem::path& path);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t d_mid() const { return d_mid_; }
  std::size_t chunk_size() const { return chunk_size_; }
  std::size_t chunk_count() const;
  std::size_t chunk_begin(std::size_t chunk_index) const;
  std::size_t chunk_rows(std::size_t chunk_index) const;
  const Digest& source_tag() const { return source_tag_; }
  const std::filesystem::path& path() const { return path_; }

  // Decoded rows of one chunk. Throws kIndex when out of range.
  Matrix read_chunk(std::size_t chunk_index) const;
  void read_chunk_into(std::size_t chunk_index, Matrix& out) const;
  Vector read_row(std::size_t row) const;

  std::span<const std::uint16_t> codes() const { return codes_; }

 private:
  std::filesystem::path path_;
  std::size_t n_rows_ = 0;
  std::size_t d_mid_ = 0;
  std::size_t chunk_size_ = 1;
  Digest source_tag_{};
  std::vector<std::uint16_t> codes_;
};

// Streams rows into a store file. The file only appears at `path` once
// finish() succeeds, so an aborted write never leaves a partial store.
class StoreWriter {
 public:
  StoreWriter(std::filesystem::path path, std::size_t d_mid,
              std::size_t chunk_size, const Digest& source_tag);
  ~StoreWriter();
  StoreWriter(const StoreWriter&) = delete;
  StoreWriter& operator=(const StoreWriter&) = delete;

  // Throws kFormat on dimension drift and kRange on values outside binary16.
  void append(std::span<const double> row);
  IntermediateStore finish();

  std::size_t rows_written() const { return n_rows_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t d_mid_;
  std::size_t n_rows_ = 0;
};

IntermediateStore store_write(MatrixView rows, std::size_t chunk_size,
                              const Digest& source_tag,
                              const std::filesystem::path& path);

}  // namespace qkiter

#endif  // QKITER_STORE_H_
