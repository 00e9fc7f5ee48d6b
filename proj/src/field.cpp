#include "advirl/field.hpp"

#include <cmath>

#include "advirl/error.hpp"
#include "advirl/parallel.hpp"
#include "field_internal.hpp"

namespace advirl {

void FieldGeometry::validate() const {
  require(resolution >= 2, ErrorCode::kInvalidArgument, "field resolution must be >= 2");
  require(samples_per_ray >= 2, ErrorCode::kInvalidArgument, "samples_per_ray must be >= 2");
  for (int a = 0; a < 3; ++a) {
    require(aabb_min[a] < aabb_max[a], ErrorCode::kInvalidArgument, "aabb_min must be below aabb_max");
  }
  for (double c : background) {
    require(c >= 0.0 && c <= 1.0, ErrorCode::kInvalidArgument, "background color outside [0,1]");
  }
}

bool FieldGeometry::operator==(const FieldGeometry& o) const {
  return resolution == o.resolution && aabb_min == o.aabb_min && aabb_max == o.aabb_max &&
         samples_per_ray == o.samples_per_ray && background == o.background;
}

ParameterVector::ParameterVector(std::vector<float> values) : values_(std::move(values)) {
  for (float v : values_) {
    require(std::isfinite(v), ErrorCode::kInvalidArgument, "parameter vector has a non-finite entry");
  }
}

std::size_t param_count(const FieldGeometry& geom) {
  geom.validate();
  const auto r = static_cast<std::size_t>(geom.resolution);
  return ParameterVector::kChannels * r * r * r;
}

RadianceField::RadianceField(FieldGeometry geometry, ParameterVector params)
    : geometry_(std::move(geometry)), params_(std::move(params)) {
  require(params_.size() == param_count(geometry_), ErrorCode::kDimensionMismatch,
          "parameter vector length does not match the field geometry");
}

RadianceField::RadianceField(FieldGeometry geometry)
    : geometry_(std::move(geometry)), params_(param_count(geometry_)) {}

void RadianceField::set_params(ParameterVector params) {
  require(params.size() == params_.size(), ErrorCode::kDimensionMismatch,
          "parameter vector length does not match the field geometry");
  params_ = std::move(params);
}

std::size_t RadianceField::voxel_index(int x, int y, int z) const {
  const int r = geometry_.resolution;
  require(x >= 0 && y >= 0 && z >= 0 && x < r && y < r && z < r, ErrorCode::kOutOfBounds,
          "voxel coordinate out of range");
  return (static_cast<std::size_t>(z) * r + y) * r + x;
}

Vec3 RadianceField::voxel_center(int x, int y, int z) const {
  const Vec3 extent = geometry_.aabb_max - geometry_.aabb_min;
  const double r = geometry_.resolution;
  return geometry_.aabb_min +
         Vec3((x + 0.5) / r * extent.x(), (y + 0.5) / r * extent.y(), (z + 0.5) / r * extent.z());
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

FieldSample sample(const RadianceField& field, const Vec3& point) {
  const FieldGeometry& g = field.geometry();
  if (!detail::inside_box(g, point)) return {0.0, g.background};
  double raw[4];
  detail::interpolate_raw(field.params().view().data(), detail::make_stencil(g, point), raw);
  return {softplus(raw[0]), {sigmoid(raw[1]), sigmoid(raw[2]), sigmoid(raw[3])}};
}

namespace {

// Emission-absorption compositing along one ray. `weights`, when given,
// receives T_i * alpha_i per sample.
Rgb composite(const RadianceField& field, const Ray& ray, std::vector<double>* weights,
              double* final_transmittance, double* step) {
  const FieldGeometry& g = field.geometry();
  const auto span = detail::clip_to_box(ray, g);
  if (weights) weights->clear();
  if (!span) {
    if (final_transmittance) *final_transmittance = 1.0;
    if (step) *step = 0.0;
    return g.background;
  }
  const int n = g.samples_per_ray;
  const double delta = (span->second - span->first) / n;
  const float* params = field.params().view().data();
  double transmittance = 1.0;
  double acc[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    const Vec3 p = ray.origin + (span->first + (i + 0.5) * delta) * ray.direction;
    double raw[4];
    detail::interpolate_raw(params, detail::make_stencil(g, p), raw);
    const double survive = std::exp(-softplus(raw[0]) * delta);
    const double w = transmittance * (1.0 - survive);
    acc[0] += w * sigmoid(raw[1]);
    acc[1] += w * sigmoid(raw[2]);
    acc[2] += w * sigmoid(raw[3]);
    if (weights) weights->push_back(w);
    transmittance *= survive;
  }
  if (final_transmittance) *final_transmittance = transmittance;
  if (step) *step = delta;
  Rgb out;
  for (int c = 0; c < 3; ++c) out[c] = std::clamp(acc[c] + transmittance * g.background[c], 0.0, 1.0);
  return out;
}

}  // namespace

RayTrace trace_ray(const RadianceField& field, const Ray& ray) {
  RayTrace t;
  t.color = composite(field, ray, &t.weights, &t.final_transmittance, &t.step);
  return t;
}

Image render(const RadianceField& field, const Camera& cam) {
  const int w = cam.width();
  const int h = cam.height();
  std::vector<double> channels(static_cast<std::size_t>(w) * h * 3);
  parallel_chunks(static_cast<std::size_t>(h), [&](std::size_t y) {
    for (int x = 0; x < w; ++x) {
      const Rgb c = composite(field, generate_ray(cam, x, static_cast<int>(y)), nullptr, nullptr, nullptr);
      const std::size_t o = (y * w + x) * 3;
      channels[o] = c[0];
      channels[o + 1] = c[1];
      channels[o + 2] = c[2];
    }
  });
  return Image(w, h, std::move(channels));
}

std::vector<Image> render_rig(const RadianceField& field, const CameraRig& rig) {
  std::vector<Image> out;
  out.reserve(rig.size());
  for (const Camera& cam : rig.cameras()) out.push_back(render(field, cam));
  return out;
}

ParameterVector apply_delta(const ParameterVector& p_old, std::span<const double> action, double bound) {
  require(action.size() == p_old.size(), ErrorCode::kDimensionMismatch,
          "action length " + std::to_string(action.size()) + " does not match parameter length " +
              std::to_string(p_old.size()));
  require(bound >= 0.0, ErrorCode::kInvalidArgument, "action bound must be non-negative");
  std::vector<float> next(p_old.size());
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double a = std::clamp(action[i], -bound, bound);
    next[i] = static_cast<float>(static_cast<double>(p_old[i]) + a);
  }
  return ParameterVector(std::move(next));
}

}  // namespace advirl
