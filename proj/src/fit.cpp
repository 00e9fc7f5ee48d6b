#include <cmath>
#include <random>

#include "advirl/error.hpp"
#include "advirl/field.hpp"
#include "advirl/parallel.hpp"
#include "field_internal.hpp"

namespace advirl {

namespace {

constexpr std::size_t kGradientChunks = 8;

struct SampleRecord {
  detail::Stencil stencil;
  double raw[4];
  double color[3];
  double weight;
  double transmittance_after;
};

// Accumulates d(loss)/d(raw params) for one ray with d(loss)/d(pixel) = upstream.
void backprop_ray(const RadianceField& field, const Ray& ray, const Rgb& target, double scale,
                  std::vector<SampleRecord>& records, double* grad, double& loss) {
  const FieldGeometry& g = field.geometry();
  const auto span = detail::clip_to_box(ray, g);
  Rgb pixel = g.background;
  records.clear();
  double transmittance = 1.0;
  double delta = 0.0;
  if (span) {
    const int n = g.samples_per_ray;
    delta = (span->second - span->first) / n;
    const float* params = field.params().view().data();
    double acc[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < n; ++i) {
      SampleRecord r;
      const Vec3 p = ray.origin + (span->first + (i + 0.5) * delta) * ray.direction;
      r.stencil = detail::make_stencil(g, p);
      detail::interpolate_raw(params, r.stencil, r.raw);
      const double survive = std::exp(-softplus(r.raw[0]) * delta);
      r.weight = transmittance * (1.0 - survive);
      for (int c = 0; c < 3; ++c) {
        r.color[c] = sigmoid(r.raw[c + 1]);
        acc[c] += r.weight * r.color[c];
      }
      transmittance *= survive;
      r.transmittance_after = transmittance;
      records.push_back(r);
    }
    for (int c = 0; c < 3; ++c) pixel[c] = acc[c] + transmittance * g.background[c];
  }

  double upstream[3];
  for (int c = 0; c < 3; ++c) {
    const double err = pixel[c] - target[c];
    loss += err * err;
    upstream[c] = 2.0 * err * scale;
  }
  if (!grad || records.empty()) return;

  // suffix[c] = sum_{j>i} w_j c_j + T_final * bg
  double suffix[3];
  for (int c = 0; c < 3; ++c) suffix[c] = transmittance * g.background[c];
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    const SampleRecord& r = *it;
    double d_raw[4];
    double d_sigma = 0.0;
    for (int c = 0; c < 3; ++c) {
      d_sigma += upstream[c] * (r.transmittance_after * r.color[c] - suffix[c]);
      d_raw[c + 1] = upstream[c] * r.weight * r.color[c] * (1.0 - r.color[c]);
      suffix[c] += r.weight * r.color[c];
    }
    d_raw[0] = d_sigma * delta * sigmoid(r.raw[0]);
    for (int k = 0; k < 8; ++k) {
      double* v = grad + 4 * static_cast<std::size_t>(r.stencil.voxel[k]);
      const double w = r.stencil.weight[k];
      v[0] += w * d_raw[0];
      v[1] += w * d_raw[1];
      v[2] += w * d_raw[2];
      v[3] += w * d_raw[3];
    }
  }
}

}  // namespace

double photometric_loss(const RadianceField& field, const CameraRig& rig, const std::vector<Image>& targets,
                        std::vector<double>* gradient) {
  require(targets.size() == rig.size(), ErrorCode::kDimensionMismatch,
          "photometric_loss: " + std::to_string(targets.size()) + " images for " +
              std::to_string(rig.size()) + " cameras");
  for (const Image& img : targets) {
    require(img.width() == rig.width() && img.height() == rig.height(), ErrorCode::kDimensionMismatch,
            "photometric_loss: image resolution does not match the rig");
  }
  const std::size_t w = rig.width();
  const std::size_t h = rig.height();
  const std::size_t total_rows = rig.size() * h;
  const double entries = static_cast<double>(total_rows * w * 3);
  const std::size_t chunks = std::min(kGradientChunks, total_rows);
  const std::size_t n_params = field.params().size();

  std::vector<double> chunk_loss(chunks, 0.0);
  std::vector<std::vector<double>> chunk_grad(gradient ? chunks : 0);
  parallel_chunks(chunks, [&](std::size_t chunk) {
    double* grad = nullptr;
    if (gradient) {
      chunk_grad[chunk].assign(n_params, 0.0);
      grad = chunk_grad[chunk].data();
    }
    std::vector<SampleRecord> records;
    const std::size_t begin = chunk * total_rows / chunks;
    const std::size_t end = (chunk + 1) * total_rows / chunks;
    for (std::size_t row = begin; row < end; ++row) {
      const std::size_t view = row / h;
      const int y = static_cast<int>(row % h);
      const Camera& cam = rig[view];
      for (std::size_t x = 0; x < w; ++x) {
        backprop_ray(field, generate_ray(cam, static_cast<int>(x), y), targets[view].at(static_cast<int>(x), y),
                     1.0 / entries, records, grad, chunk_loss[chunk]);
      }
    }
  });

  double loss = 0.0;
  for (double l : chunk_loss) loss += l;
  if (gradient) {
    gradient->assign(n_params, 0.0);
    for (const auto& g : chunk_grad) {
      for (std::size_t i = 0; i < n_params; ++i) (*gradient)[i] += g[i];
    }
  }
  return loss / entries;
}

RadianceField initial_field(const FieldGeometry& geom, const FitOptions& options) {
  geom.validate();
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<float> values(param_count(geom));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double base = (i % ParameterVector::kChannels == 0) ? options.init_density_logit : 0.0;
    values[i] = static_cast<float>(base + options.init_noise * noise(rng));
  }
  return RadianceField(geom, ParameterVector(std::move(values)));
}

FitResult fit(const FieldGeometry& geom, const std::vector<Image>& images, const CameraRig& rig,
              const FitOptions& options) {
  require(options.steps >= 0, ErrorCode::kInvalidArgument, "fit steps must be non-negative");
  require(options.learning_rate > 0.0, ErrorCode::kInvalidArgument, "fit learning rate must be positive");
  require(images.size() == rig.size(), ErrorCode::kDimensionMismatch,
          "fit: " + std::to_string(images.size()) + " images for " + std::to_string(rig.size()) + " cameras");

  RadianceField field = initial_field(geom, options);
  FitResult result{field, {}, 0.0};
  // The step is taken on the per-view summed error, which keeps one learning
  // rate usable across image resolutions.
  const double step = options.learning_rate * static_cast<double>(rig.width()) * rig.height();
  std::vector<double> grad;
  for (int s = 0; s < options.steps; ++s) {
    const double loss = photometric_loss(field, rig, images, &grad);
    require(std::isfinite(loss), ErrorCode::kNumerical, "fit diverged at step " + std::to_string(s));
    result.loss_history.push_back(loss);
    auto params = field.mutable_params().mutable_view();
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] = static_cast<float>(params[i] - step * grad[i]);
    }
  }
  result.final_mse = photometric_loss(field, rig, images);
  result.loss_history.push_back(result.final_mse);
  result.field = std::move(field);
  return result;
}

}  // namespace advirl
