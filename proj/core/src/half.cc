#include "qkiter/half.h"

#include <cmath>
#include <sstream>
#include <string>

#include "qkiter/error.h"

namespace qkiter {

namespace {

constexpr double kMinNormal = 6.103515625e-05;  // 2^-14

std::uint16_t encode_checked(double x) {
  const std::uint16_t sign = std::signbit(x) ? 0x8000 : 0;
  const double a = std::fabs(x);
  if (a == 0.0) return sign;
  // Scale so that one unit in the last binary16 place becomes 1.0, then
  // round to nearest-even in the default FP environment.
  int exponent = -14;
  if (a >= kMinNormal) {
    int e2 = 0;
    std::frexp(a, &e2);  // a = m * 2^e2, m in [0.5, 1)
    exponent = e2 - 1;
  }
  const double units = std::nearbyint(std::ldexp(a, 10 - exponent));
  const auto n = static_cast<std::uint32_t>(units);
  if (exponent == -14 && a < kMinNormal) {
    // Subnormal: the code is the unit count; 1024 rolls into the smallest
    // normal, which has the same bit pattern.
    return static_cast<std::uint16_t>(sign | n);
  }
  // n is in [1024, 2048]; 2048 carries into the exponent field naturally.
  const std::uint32_t bits = (static_cast<std::uint32_t>(exponent + 15) << 10) + (n - 1024);
  return static_cast<std::uint16_t>(sign | bits);
}

}  // namespace

std::uint16_t encode_half(double x) {
  if (!std::isfinite(x) || std::fabs(x) > kHalfMax) {
    std::ostringstream msg;
    msg << "value " << x << " is outside the binary16 range (|x| <= 65504)";
    fail(ErrorKind::kRange, msg.str());
  }
  return encode_checked(x);
}

double decode_half(std::uint16_t code) {
  const bool negative = (code & 0x8000) != 0;
  const unsigned exponent = (code >> 10) & 0x1f;
  const unsigned mantissa = code & 0x3ff;
  double value = 0.0;
  if (exponent == 0) {
    value = std::ldexp(static_cast<double>(mantissa), -24);
  } else if (exponent == 31) {
    value = mantissa == 0 ? HUGE_VAL : std::nan("");
  } else {
    value = std::ldexp(static_cast<double>(1024 + mantissa), static_cast<int>(exponent) - 25);
  }
  return negative ? -value : value;
}

void encode_half_row(std::span<const double> x, std::span<std::uint16_t> out,
                     std::size_t row_index) {
  require(out.size() == x.size(), ErrorKind::kInputShape, "encode buffer size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::fabs(x[i]) > kHalfMax) {
      std::ostringstream msg;
      msg << "row " << row_index << ", column " << i << ": value " << x[i]
          << " is outside the binary16 range (|x| <= 65504)";
      fail(ErrorKind::kRange, msg.str());
    }
    out[i] = encode_checked(x[i]);
  }
}

std::vector<std::uint16_t> encode_half_row(std::span<const double> x, std::size_t row_index) {
  std::vector<std::uint16_t> out(x.size());
  encode_half_row(x, out, row_index);
  return out;
}

void decode_half_row(std::span<const std::uint16_t> codes, std::span<double> out) {
  require(out.size() == codes.size(), ErrorKind::kInputShape, "decode buffer size mismatch");
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = decode_half(codes[i]);
}

double half_rounding_bound(double x) {
  const double a = std::fabs(x);
  if (a < kMinNormal) return std::ldexp(1.0, -25);
  int e2 = 0;
  std::frexp(a, &e2);
  return std::ldexp(1.0, (e2 - 1) - 11);
}

}  // namespace qkiter
