#include "qkiter/adam.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "qkiter/error.h"

namespace qkiter {

AdamState::AdamState(std::size_t size, const AdamConfig& config)
    : m(size, 0.0),
      v(size, 0.0),
      beta1(config.beta1),
      beta2(config.beta2),
      epsilon(config.epsilon) {}

void AdamState::reset() {
  std::fill(m.begin(), m.end(), 0.0);
  std::fill(v.begin(), v.end(), 0.0);
  t = 0;
}

void adam_update(std::span<double> param, std::span<const double> grad, AdamState& state,
                 double lr, std::string_view group) {
  const std::string label = group.empty() ? std::string("<unnamed>") : std::string(group);
  require(param.size() == grad.size() && param.size() == state.size(),
          ErrorKind::kInputShape,
          "adam group " + label + ": parameter, gradient and state lengths differ (" +
              std::to_string(param.size()) + ", " + std::to_string(grad.size()) + ", " +
              std::to_string(state.size()) + ")");
  require(lr > 0.0, ErrorKind::kValidation, "adam group " + label + ": lr must be > 0");
  bool all_zero = true;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      fail(ErrorKind::kNumeric, "non-finite gradient in parameter group " + label +
                                    " at index " + std::to_string(i));
    }
    all_zero = all_zero && grad[i] == 0.0;
  }

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
  }
  if (all_zero) return;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

}  // namespace qkiter
