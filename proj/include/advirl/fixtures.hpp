#pragma once

#include "advirl/field.hpp"

namespace advirl {

enum class FixtureKind { kSphere, kTwoBoxes };

struct FixtureOptions {
  Rgb sphere_color = {1.0, 0.0, 0.0};
  double sphere_radius = 0.3;
  Rgb box_colors[2] = {{1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}};
  double inside_density_logit = 30.0;
  double outside_density_logit = -20.0;
  // Colors are stored as logits, so pure primaries are pulled in to this range.
  double color_floor = 0.02;
};

// Deterministic ground-truth fields inside the geometry's box. Voxels whose
// centres fall inside an object get the inside density logit; every voxel
// carries the color logits of its nearest object.
RadianceField fixture_scene(FixtureKind kind, const FieldGeometry& geom, const FixtureOptions& options = {});

// Axis-aligned boxes of the two_boxes fixture, in unit-box coordinates.
struct Box {
  Vec3 lo;
  Vec3 hi;
};
std::array<Box, 2> two_boxes_layout();

}  // namespace advirl
