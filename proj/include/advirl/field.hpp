#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "advirl/imaging.hpp"
#include "advirl/scene.hpp"

namespace advirl {

// Dense R x R x R voxel grid over an axis-aligned box.
struct FieldGeometry {
  int resolution = 16;
  Vec3 aabb_min = Vec3(0.0, 0.0, 0.0);
  Vec3 aabb_max = Vec3(1.0, 1.0, 1.0);
  int samples_per_ray = 32;
  Rgb background = {0.0, 0.0, 0.0};

  void validate() const;
  bool operator==(const FieldGeometry& other) const;
};

// Raw per-voxel values, 4 per voxel: density logit then r, g, b color logits.
// Voxel (x, y, z) lives at index ((z * R + y) * R + x).
class ParameterVector {
 public:
  static constexpr int kChannels = 4;

  ParameterVector() = default;
  explicit ParameterVector(std::size_t size, float fill = 0.0f) : values_(size, fill) {}
  explicit ParameterVector(std::vector<float> values);

  std::size_t size() const { return values_.size(); }
  float operator[](std::size_t i) const { return values_[i]; }
  float& operator[](std::size_t i) { return values_[i]; }
  std::span<const float> view() const { return values_; }
  std::span<float> mutable_view() { return values_; }
  const std::vector<float>& values() const { return values_; }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

 private:
  std::vector<float> values_;
};

std::size_t param_count(const FieldGeometry& geom);

struct FieldSample {
  double density = 0.0;
  Rgb color{0.0, 0.0, 0.0};
};

class RadianceField {
 public:
  RadianceField(FieldGeometry geometry, ParameterVector params);
  explicit RadianceField(FieldGeometry geometry);  // all-zero raw values

  const FieldGeometry& geometry() const { return geometry_; }
  const ParameterVector& params() const { return params_; }
  ParameterVector& mutable_params() { return params_; }
  void set_params(ParameterVector params);

  std::size_t voxel_index(int x, int y, int z) const;
  Vec3 voxel_center(int x, int y, int z) const;

  bool operator==(const RadianceField& other) const {
    return geometry_ == other.geometry_ && params_ == other.params_;
  }

 private:
  FieldGeometry geometry_;
  ParameterVector params_;
};

double softplus(double x);
double sigmoid(double x);

// Trilinear interpolation of raw values followed by activation.
// Points outside the box have zero density and the background color.
FieldSample sample(const RadianceField& field, const Vec3& point);

// Per-ray compositing record. weights[i] = T_i * alpha_i.
struct RayTrace {
  Rgb color{0.0, 0.0, 0.0};
  std::vector<double> weights;
  double final_transmittance = 1.0;
  double step = 0.0;  // delta between samples; 0 when the ray misses the box
};

RayTrace trace_ray(const RadianceField& field, const Ray& ray);
Image render(const RadianceField& field, const Camera& cam);
std::vector<Image> render_rig(const RadianceField& field, const CameraRig& rig);

// P_new[i] = P_old[i] + clamp(action[i], -bound, bound).
ParameterVector apply_delta(const ParameterVector& p_old, std::span<const double> action, double bound);

struct FitOptions {
  int steps = 300;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  double init_density_logit = -1.0;
  double init_noise = 0.01;
};

struct FitResult {
  RadianceField field;
  std::vector<double> loss_history;  // photometric MSE before each step, then the final value
  double final_mse = 0.0;
};

// Mean squared photometric error (unit scale) over every view, pixel and
// channel, and optionally its gradient with respect to the raw parameters.
double photometric_loss(const RadianceField& field, const CameraRig& rig,
                        const std::vector<Image>& targets, std::vector<double>* gradient = nullptr);

RadianceField initial_field(const FieldGeometry& geom, const FitOptions& options);

FitResult fit(const FieldGeometry& geom, const std::vector<Image>& images, const CameraRig& rig,
              const FitOptions& options);

void save_snapshot(const RadianceField& field, const std::filesystem::path& path);
RadianceField load_snapshot(const std::filesystem::path& path);

}  // namespace advirl
