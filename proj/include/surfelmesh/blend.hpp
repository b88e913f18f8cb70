#pragma once

#include "surfelmesh/core.hpp"

namespace sm {

struct BlendBuffers {
  Image<int> I_d, I_s;
  DepthImage delta_d, delta_s;
  int i_count = 10;
};

// Observation boundary blending. D is modified in place; SD is the mean
// supported surfel depth per pixel (0 where no surfel is supported).
void blend_boundaries(DepthImage& D, const DepthImage& SD, int i_count = 10,
                      BlendBuffers* buffers_out = nullptr);

}  // namespace sm
