#include "metabalance/optim/schedule.hpp"

#include <cmath>
#include <numbers>

#include "metabalance/errors.hpp"

namespace metabalance::optim {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::cosine_annealing: return "cosine_annealing";
    case ScheduleKind::multi_step: return "multi_step";
  }
  return "unknown";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "constant") return ScheduleKind::constant;
  if (name == "cosine_annealing" || name == "cosine") return ScheduleKind::cosine_annealing;
  if (name == "multi_step") return ScheduleKind::multi_step;
  throw ConfigError("unknown schedule '" + name + "'");
}

void ScheduleSpec::validate() const {
  if (total_epochs < 1) throw ConfigError("schedule: total_epochs must be >= 1");
  if (kind == ScheduleKind::multi_step) {
    for (std::size_t i = 0; i < milestones.size(); ++i) {
      if (milestones[i] >= total_epochs || milestones[i] < 0)
        throw ConfigError("schedule: milestone " + std::to_string(milestones[i]) +
                          " outside [0, total_epochs)");
      if (i > 0 && milestones[i] <= milestones[i - 1])
        throw ConfigError("schedule: milestones must be strictly increasing");
    }
    if (!(decay_factor > 0.0 && std::isfinite(decay_factor)))
      throw ConfigError("schedule: decay_factor must be > 0");
  }
}

double lr_at(int epoch, const ScheduleSpec& schedule, double base_lr) {
  if (epoch < 0 || epoch >= schedule.total_epochs)
    throw ConfigError("schedule: epoch " + std::to_string(epoch) + " outside [0, " +
                      std::to_string(schedule.total_epochs) + ")");
  switch (schedule.kind) {
    case ScheduleKind::constant:
      return base_lr;
    case ScheduleKind::cosine_annealing:
      return base_lr * 0.5 *
             (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) /
                             static_cast<double>(schedule.total_epochs)));
    case ScheduleKind::multi_step: {
      int passed = 0;
      for (int m : schedule.milestones)
        if (epoch >= m) ++passed;
      return base_lr * std::pow(schedule.decay_factor, passed);
    }
  }
  return base_lr;
}

}  // namespace metabalance::optim
