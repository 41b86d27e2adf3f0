#ifndef QKITER_DIGEST_H_
#define QKITER_DIGEST_H_

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "qkiter/matrix.h"

namespace qkiter {

using Digest = std::array<std::uint8_t, 32>;

std::string to_hex(const Digest& digest);

// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> bytes);
  Sha256& update(std::string_view text);
  Sha256& update_u64(std::uint64_t value);
  Sha256& update_doubles(std::span<const double> values);
  Digest finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Digest of a matrix's shape and exact bit pattern.
Digest digest_matrix(MatrixView matrix);

}  // namespace qkiter

#endif  // QKITER_DIGEST_H_
