#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>

#include "advirl/field.hpp"

namespace advirl::detail {

// Eight corner voxels and their trilinear weights for one sample point.
struct Stencil {
  std::array<std::uint32_t, 8> voxel;
  std::array<double, 8> weight;
};

// Parametric [t_near, t_far] of the ray inside the box, clipped to t >= 0.
inline std::optional<std::pair<double, double>> clip_to_box(const Ray& ray, const FieldGeometry& g) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.direction[a];
    if (d == 0.0) {
      if (o < g.aabb_min[a] || o > g.aabb_max[a]) return std::nullopt;
      continue;
    }
    double ta = (g.aabb_min[a] - o) / d;
    double tb = (g.aabb_max[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (!(t1 > t0)) return std::nullopt;
  return std::make_pair(t0, t1);
}

// Continuous grid coordinate along one axis: voxel centres sit on integers.
// Clamped so points in the outer half-voxel replicate the edge value.
inline void axis_cell(double coord, int r, int& i0, double& frac) {
  coord = std::clamp(coord, 0.0, static_cast<double>(r - 1));
  i0 = std::min(static_cast<int>(std::floor(coord)), r - 2);
  frac = coord - i0;
}

inline Stencil make_stencil(const FieldGeometry& g, const Vec3& p) {
  const int r = g.resolution;
  int i[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] - g.aabb_min[a]) / (g.aabb_max[a] - g.aabb_min[a]);
    axis_cell(u * r - 0.5, r, i[a], f[a]);
  }
  Stencil s;
  int k = 0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? f[2] : 1.0 - f[2];
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? f[1] : 1.0 - f[1];
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? f[0] : 1.0 - f[0];
        s.voxel[k] = static_cast<std::uint32_t>(((i[2] + dz) * r + (i[1] + dy)) * r + (i[0] + dx));
        s.weight[k] = wx * wy * wz;
        ++k;
      }
    }
  }
  return s;
}

inline void interpolate_raw(const float* params, const Stencil& s, double raw[4]) {
  raw[0] = raw[1] = raw[2] = raw[3] = 0.0;
  for (int k = 0; k < 8; ++k) {
    const float* v = params + 4 * static_cast<std::size_t>(s.voxel[k]);
    const double w = s.weight[k];
    raw[0] += w * v[0];
    raw[1] += w * v[1];
    raw[2] += w * v[2];
    raw[3] += w * v[3];
  }
}

inline bool inside_box(const FieldGeometry& g, const Vec3& p) {
  for (int a = 0; a < 3; ++a) {
    if (p[a] < g.aabb_min[a] || p[a] > g.aabb_max[a]) return false;
  }
  return true;
}

}  // namespace advirl::detail
