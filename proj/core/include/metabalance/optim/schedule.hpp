#pragma once

#include <string>
#include <vector>

namespace metabalance::optim {

enum class ScheduleKind { constant, cosine_annealing, multi_step };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::constant;
  int total_epochs = 1;
  std::vector<int> milestones;
  double decay_factor = 0.1;

  void validate() const;
  bool operator==(const ScheduleSpec&) const = default;
};

/**
 * Learning rate in effect during `epoch` (0-based).
 *   cosine:     base_lr * (1 + cos(pi * epoch / total_epochs)) / 2
 *   multi_step: base_lr * decay_factor ^ (milestones <= epoch)
 */
double lr_at(int epoch, const ScheduleSpec& schedule, double base_lr);

}  // namespace metabalance::optim
