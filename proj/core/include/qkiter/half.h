#ifndef QKITER_HALF_H_
#define QKITER_HALF_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qkiter {

inline constexpr double kHalfMax = 65504.0;

// IEEE 754 binary16, rounded to nearest-even directly from the double (no
// intermediate float rounding). Throws kRange for non-finite input or
// |x| > 65504.
std::uint16_t encode_half(double x);
double decode_half(std::uint16_t code);

// Row variants; a range error names `row_index`.
void encode_half_row(std::span<const double> x, std::span<std::uint16_t> out,
                     std::size_t row_index);
std::vector<std::uint16_t> encode_half_row(std::span<const double> x,
                                           std::size_t row_index = 0);
void decode_half_row(std::span<const std::uint16_t> codes, std::span<double> out);

// Half the spacing of binary16 values around |x|: the largest error a
// single round-to-nearest can introduce.
double half_rounding_bound(double x);

}  // namespace qkiter

#endif  // QKITER_HALF_H_
