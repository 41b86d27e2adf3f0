#include "qkiter/cosine_schedule.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qkiter/error.h"

namespace qkiter {

void CosineSchedule::validate() const {
  require(lr0 > 0.0, ErrorKind::kValidation, "lr0 must be > 0");
  require(decay_steps > 0, ErrorKind::kValidation, "decay steps must be > 0");
  require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::kValidation, "alpha must be in [0, 1]");
}

double cosine_lr(const CosineSchedule& schedule, std::uint64_t step) {
  const double progress =
      static_cast<double>(std::min(step, schedule.decay_steps)) /
      static_cast<double>(schedule.decay_steps);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return schedule.lr0 * ((1.0 - schedule.alpha) * cosine + schedule.alpha);
}

}  // namespace qkiter
