#include "surfelmesh/blend.hpp"

#include <vector>

namespace sm {

namespace {

// Averages the deltas of neighbors stamped in the previous iteration. Reads go
// to the previous-iteration buffers, writes to the current ones.
inline void update(int i, int x, int y, int i_count, const DepthImage& delta_prev,
                   const Image<int>& I_prev, DepthImage& delta, Image<int>& I, DepthImage& D) {
  double sum = 0;
  int count = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      int qx = x + dx, qy = y + dy;
      if (!I_prev.in_bounds(qx, qy)) continue;
      if (I_prev(qx, qy) == i - 1) {
        sum += delta_prev(qx, qy);
        count += 1;
      }
    }
  }
  if (count > 0) {
    I(x, y) = i;
    delta(x, y) = sum / count;
    D(x, y) += (1.0 - static_cast<double>(i) / i_count) * (sum / count);
  }
}

}  // namespace

void blend_boundaries(DepthImage& D, const DepthImage& SD, int i_count, BlendBuffers* out) {
  const int w = D.width, h = D.height;
  Image<int> I_d(w, h, -1), I_s(w, h, -1);
  DepthImage delta_d(w, h, 0.0), delta_s(w, h, 0.0);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (D(x, y) == 0 || SD(x, y) == 0) continue;
      const double d = SD(x, y) - D(x, y);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          int qx = x + dx, qy = y + dy;
          if (!D.in_bounds(qx, qy)) continue;
          if (I_d(x, y) == -1 && D(qx, qy) == 0) {
            delta_d(x, y) = d;
            I_d(x, y) = 0;
            D(x, y) = SD(x, y);
          }
          if (I_s(x, y) == -1 && SD(qx, qy) == 0) {
            delta_s(x, y) = d;
            I_s(x, y) = 0;
          }
        }
      }
    }
  }

  for (int i = 1; i <= i_count - 1; ++i) {
    const Image<int> I_d_prev = I_d, I_s_prev = I_s;
    const DepthImage delta_d_prev = delta_d, delta_s_prev = delta_s;
    const DepthImage D_prev = D;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (D_prev(x, y) == 0) continue;
        if (SD(x, y) != 0 && I_d_prev(x, y) == -1)
          update(i, x, y, i_count, delta_d_prev, I_d_prev, delta_d, I_d, D);
        if (SD(x, y) == 0 && I_s_prev(x, y) == -1)
          update(i, x, y, i_count, delta_s_prev, I_s_prev, delta_s, I_s, D);
      }
    }
  }

  if (out) {
    out->I_d = std::move(I_d);
    out->I_s = std::move(I_s);
    out->delta_d = std::move(delta_d);
    out->delta_s = std::move(delta_s);
    out->i_count = i_count;
  }
}

}  // namespace sm
