// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "manysr/errors.hpp"

namespace manysr {

/// Step learning-rate schedule: the rate is divided by decay_factor at each
/// milestone, given either as an explicit list or as a fixed period.
struct ScheduleSpec {
  double initial_lr = 1e-4;
  double decay_factor = 2.0;
  std::vector<std::int64_t> milestones;  // strictly increasing; wins over period
  std::int64_t period = 0;               // 0 = unused

  static ScheduleSpec with_milestones(double lr, std::vector<std::int64_t> ms,
                                      double factor = 2.0) {
    ScheduleSpec s;
    s.initial_lr = lr;
    s.milestones = std::move(ms);
    s.decay_factor = factor;
    return s;
  }
  static ScheduleSpec periodic(double lr, std::int64_t every, double factor = 2.0) {
    ScheduleSpec s;
    s.initial_lr = lr;
    s.period = every;
    s.decay_factor = factor;
    return s;
  }
  static ScheduleSpec constant(double lr) {
    ScheduleSpec s;
    s.initial_lr = lr;
    return s;
  }

  void validate() const {
    if (initial_lr <= 0) throw ConfigError("schedule: initial_lr must be > 0");
    if (decay_factor <= 1) throw ConfigError("schedule: decay_factor must be > 1");
    for (std::size_t i = 1; i < milestones.size(); ++i) {
      if (milestones[i] <= milestones[i - 1]) {
        throw ConfigError("schedule: milestones must be strictly increasing");
      }
    }
    if (period < 0) throw ConfigError("schedule: period must be >= 0");
  }
};

/// initial_lr / decay_factor^(number of milestones <= iteration).
inline double lr_at(const ScheduleSpec& spec, std::int64_t iteration) {
  std::int64_t decays = 0;
  if (!spec.milestones.empty()) {
    for (std::int64_t m : spec.milestones) {
      if (m <= iteration) ++decays;
    }
  } else if (spec.period > 0) {
    decays = iteration / spec.period;
  }
  return spec.initial_lr / std::pow(spec.decay_factor, static_cast<double>(decays));
}

}  // namespace manysr
