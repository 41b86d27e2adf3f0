#ifndef QKITER_COSINE_SCHEDULE_H_
#define QKITER_COSINE_SCHEDULE_H_

#include <cstdint>

namespace qkiter {

// Matches tf.keras.optimizers.schedules.CosineDecay: decays from lr0 to
// alpha * lr0 over `decay_steps`, then stays flat.
struct CosineSchedule {
  double lr0 = 1e-4;
  std::uint64_t decay_steps = 1;
  double alpha = 0.5;

  void validate() const;
};

double cosine_lr(const CosineSchedule& schedule, std::uint64_t step);

}  // namespace qkiter

#endif  // QKITER_COSINE_SCHEDULE_H_
