#pragma once

#include <map>
#include <vector>

#include "surfelmesh/association.hpp"
#include "surfelmesh/core.hpp"

namespace sm {

struct DenoiseConfig {
  double w_reg = 10.0;
  std::int64_t active_window = 30;
  double step_scale = 0.5;
  int deform_smooth_iters = 100;
  double neighbor_reject_factor = 2.0;

  bool valid() const { return w_reg >= 0 && active_window >= 1 && deform_smooth_iters >= 1; }
};

void update_neighbors(SurfelCloud& cloud, const AssociationResult& assoc,
                      const DenoiseConfig& config);

// Drops neighbor entries that point to dead slots.
void prune_dead_neighbors(SurfelCloud& cloud);

double cost(const SurfelCloud& cloud, const DenoiseConfig& config);

// dC/dp_bar for every slot (zero for dead slots).
std::vector<Vec3d> cost_gradient(const SurfelCloud& cloud, const DenoiseConfig& config);

// Per-slot descent step length.
std::vector<double> step_sizes(const SurfelCloud& cloud, const DenoiseConfig& config);

// One synchronous gradient step on the p_bar of surfels updated within the
// active window. Returns the number of surfels whose p_bar changed.
std::size_t denoise_iteration(SurfelCloud& cloud, std::int64_t now, const DenoiseConfig& config);

// Smooths the offsets over neighbor sets and applies them to p and p_bar.
// Throws std::invalid_argument if an ID is not live.
std::vector<SurfelId> apply_deformation(SurfelCloud& cloud, const std::map<SurfelId, Vec3d>& offsets,
                                        const DenoiseConfig& config);

namespace serial {
std::vector<Vec3d> cost_gradient(const SurfelCloud& cloud, const DenoiseConfig& config);
}

}  // namespace sm
