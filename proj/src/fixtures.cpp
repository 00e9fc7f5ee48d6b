#include "advirl/fixtures.hpp"

#include <algorithm>
#include <cmath>

namespace advirl {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

double box_distance(const Box& b, const Vec3& p) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = std::max({b.lo[a] - p[a], 0.0, p[a] - b.hi[a]});
    d2 += d * d;
  }
  return std::sqrt(d2);
}

}  // namespace

std::array<Box, 2> two_boxes_layout() {
  return {Box{Vec3(0.12, 0.3, 0.25), Vec3(0.42, 0.7, 0.75)},
          Box{Vec3(0.58, 0.3, 0.25), Vec3(0.88, 0.7, 0.75)}};
}

RadianceField fixture_scene(FixtureKind kind, const FieldGeometry& geom, const FixtureOptions& o) {
  RadianceField field(geom);
  const int r = geom.resolution;
  // Objects are laid out in unit-box coordinates and mapped into the aabb.
  const Vec3 extent = geom.aabb_max - geom.aabb_min;
  auto color_logits = [&](const Rgb& c) {
    Rgb out;
    for (int k = 0; k < 3; ++k) out[k] = logit(std::clamp(c[k], o.color_floor, 1.0 - o.color_floor));
    return out;
  };
  const auto boxes = two_boxes_layout();
  auto& params = field.mutable_params();
  for (int z = 0; z < r; ++z) {
    for (int y = 0; y < r; ++y) {
      for (int x = 0; x < r; ++x) {
        const Vec3 p = (field.voxel_center(x, y, z) - geom.aabb_min).cwiseQuotient(extent);
        bool inside = false;
        Rgb color;
        if (kind == FixtureKind::kSphere) {
          inside = (p - Vec3(0.5, 0.5, 0.5)).norm() < o.sphere_radius;
          color = o.sphere_color;
        } else {
          const double d0 = box_distance(boxes[0], p);
          const double d1 = box_distance(boxes[1], p);
          inside = d0 == 0.0 || d1 == 0.0;
          color = d0 <= d1 ? o.box_colors[0] : o.box_colors[1];
        }
        const std::size_t v = 4 * field.voxel_index(x, y, z);
        const Rgb logits = color_logits(color);
        params[v] = static_cast<float>(inside ? o.inside_density_logit : o.outside_density_logit);
        for (int k = 0; k < 3; ++k) params[v + 1 + k] = static_cast<float>(logits[k]);
      }
    }
  }
  return field;
}

}  // namespace advirl
