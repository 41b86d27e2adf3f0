#include "qkiter/digest.h"

#include <openssl/evp.h>

#include <cstring>

#include "qkiter/error.h"

namespace qkiter {

std::string to_hex(const Digest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (std::uint8_t b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

struct Sha256::Impl {
  EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  impl_->ctx = EVP_MD_CTX_new();
  require(impl_->ctx != nullptr && EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) == 1,
          ErrorKind::kInternal, "SHA-256 initialisation failed");
}

Sha256::~Sha256() { EVP_MD_CTX_free(impl_->ctx); }

Sha256& Sha256::update(std::span<const std::uint8_t> bytes) {
  EVP_DigestUpdate(impl_->ctx, bytes.data(), bytes.size());
  return *this;
}

Sha256& Sha256::update(std::string_view text) {
  EVP_DigestUpdate(impl_->ctx, text.data(), text.size());
  return *this;
}

Sha256& Sha256::update_u64(std::uint64_t value) {
  EVP_DigestUpdate(impl_->ctx, &value, sizeof(value));
  return *this;
}

Sha256& Sha256::update_doubles(std::span<const double> values) {
  EVP_DigestUpdate(impl_->ctx, values.data(), values.size_bytes());
  return *this;
}

Digest Sha256::finish() {
  Digest out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(impl_->ctx, out.data(), &len);
  return out;
}

Digest digest_matrix(MatrixView matrix) {
  Sha256 sha;
  sha.update_u64(matrix.rows()).update_u64(matrix.cols());
  sha.update_doubles({matrix.data(), matrix.rows() * matrix.cols()});
  return sha.finish();
}

}  // namespace qkiter
