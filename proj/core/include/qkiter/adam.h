#ifndef QKITER_ADAM_H_
#define QKITER_ADAM_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "qkiter/matrix.h"

namespace qkiter {

// Keras "default settings".
struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Vector m;
  Vector v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t size, const AdamConfig& config = {});

  std::size_t size() const { return m.size(); }
  // Zeroes both moments and the step counter, keeping the hyperparameters.
  void reset();

  bool operator==(const AdamState& other) const = default;
};

// One bias-corrected Adam step. Increments state.t by exactly one. A
// gradient that is identically zero leaves `param` untouched (moments still
// decay). Throws kNumeric naming `group` on a non-finite gradient.
void adam_update(std::span<double> param, std::span<const double> grad,
                 AdamState& state, double lr, std::string_view group = "");

}  // namespace qkiter

#endif  // QKITER_ADAM_H_
