#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "advirl/fixtures.hpp"
#include "advirl/field.hpp"
#include "advirl/serialization.hpp"
#include "test_util.hpp"

namespace advirl {
namespace {

using testing::code_of;
using testing::TempDir;

FieldGeometry small_geometry(int r = 4) {
  FieldGeometry g;
  g.resolution = r;
  g.samples_per_ray = 16;
  return g;
}

RadianceField random_field(const FieldGeometry& g, std::uint64_t seed, double density_mean = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.5);
  std::vector<float> v(param_count(g));
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<float>(n(rng) + (i % 4 == 0 ? density_mean : 0.0));
  }
  return RadianceField(g, ParameterVector(std::move(v)));
}

// Independent inverse of softplus for building fields with a chosen density.
double inverse_softplus(double y) { return std::log(std::expm1(y)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

Ray random_ray(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec3 target(0.5 + 0.4 * u(rng), 0.5 + 0.4 * u(rng), 0.5 + 0.4 * u(rng));
  Vec3 origin = Vec3(0.5, 0.5, 0.5) + 1.5 * Vec3(u(rng), u(rng), u(rng)).normalized();
  return {origin, (target - origin).normalized()};
}

TEST(ParamCountTest, FourPerVoxel) {
  EXPECT_EQ(param_count(small_geometry(2)), 32u);
  EXPECT_EQ(param_count(small_geometry(16)), 16384u);
  EXPECT_EQ(param_count(small_geometry(32)), 131072u);
}

TEST(GeometryTest, Validation) {
  FieldGeometry g = small_geometry();
  g.resolution = 1;
  EXPECT_EQ(code_of([&] { g.validate(); }), ErrorCode::kInvalidArgument);
  g = small_geometry();
  g.aabb_max = Vec3(1, 0, 1);
  EXPECT_EQ(code_of([&] { g.validate(); }), ErrorCode::kInvalidArgument);
  EXPECT_THROW(RadianceField(small_geometry(), ParameterVector(7)), Error);
}

TEST(SampleTest, OutsideBoxGivesBackground) {
  FieldGeometry g = small_geometry();
  g.background = {0.1, 0.2, 0.3};
  const FieldSample s = sample(random_field(g, 1), Vec3(1.5, 0.5, 0.5));
  EXPECT_EQ(s.density, 0.0);
  EXPECT_EQ(s.color, g.background);
}

TEST(SampleTest, VoxelCentreReturnsItsActivations) {
  const FieldGeometry g = small_geometry();
  const RadianceField f = random_field(g, 2);
  const std::size_t v = f.voxel_index(1, 2, 3);
  const FieldSample s = sample(f, f.voxel_center(1, 2, 3));
  EXPECT_NEAR(s.density, std::log1p(std::exp(static_cast<double>(f.params()[4 * v]))), 1e-12);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(s.color[c], 1.0 / (1.0 + std::exp(-static_cast<double>(f.params()[4 * v + 1 + c]))), 1e-12);
  }
}

TEST(SampleTest, MidpointAveragesRawValuesBeforeActivation) {
  const FieldGeometry g = small_geometry(2);
  RadianceField f(g);
  f.mutable_params()[4 * f.voxel_index(0, 0, 0)] = 2.0f;
  f.mutable_params()[4 * f.voxel_index(1, 0, 0)] = -4.0f;
  f.mutable_params()[4 * f.voxel_index(0, 0, 0) + 1] = 1.0f;
  f.mutable_params()[4 * f.voxel_index(1, 0, 0) + 1] = 3.0f;
  const Vec3 mid = 0.5 * (f.voxel_center(0, 0, 0) + f.voxel_center(1, 0, 0));
  const FieldSample s = sample(f, mid);
  EXPECT_NEAR(s.density, std::log1p(std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(s.color[0], 1.0 / (1.0 + std::exp(-2.0)), 1e-12);
}

TEST(RenderTest, ZeroDensityShowsBackgroundExactly) {
  FieldGeometry g = small_geometry();
  g.background = {0.25, 0.5, 0.75};
  RadianceField f(g);
  for (std::size_t i = 0; i < f.params().size(); i += 4) f.mutable_params()[i] = -1e4f;
  OrbitOptions o;
  o.n_views = 3;
  o.resolution = 16;
  o.focal = 16;
  for (const Image& img : render_rig(f, orbit_rig(o))) EXPECT_EQ(img, Image(16, 16, g.background));
}

TEST(RenderTest, HomogeneousSlabMatchesClosedForm) {
  FieldGeometry g = small_geometry();
  g.background = {0.0, 0.5, 0.0};
  RadianceField f(g);
  const double sigma = 1.0;
  const float color_logit = 2.0f;
  for (std::size_t i = 0; i < f.params().size(); i += 4) {
    f.mutable_params()[i] = static_cast<float>(inverse_softplus(sigma));
    f.mutable_params()[i + 1] = color_logit;
    f.mutable_params()[i + 2] = -1e4f;
    f.mutable_params()[i + 3] = -1e4f;
  }
  const double c = 1.0 / (1.0 + std::exp(-2.0));
  const Ray ray{Vec3(0.5, 0.5, -1.0), Vec3(0, 0, 1)};  // traverses length 1
  const RayTrace t = trace_ray(f, ray);
  const double a = 1.0 - std::exp(-sigma);
  EXPECT_NEAR(t.color[0], a * c, 1e-6);
  EXPECT_NEAR(t.color[1], (1.0 - a) * 0.5, 1e-6);
  EXPECT_NEAR(t.color[2], 0.0, 1e-6);
}

TEST(RenderTest, OpaqueLimitShowsSurfaceColor) {
  const FieldGeometry g = small_geometry();
  RadianceField f(g);
  for (std::size_t i = 0; i < f.params().size(); i += 4) {
    f.mutable_params()[i] = 40.0f;
    f.mutable_params()[i + 1] = static_cast<float>(logit(0.3));
    f.mutable_params()[i + 2] = static_cast<float>(logit(0.6));
    f.mutable_params()[i + 3] = static_cast<float>(logit(0.9));
  }
  const RayTrace t = trace_ray(f, {Vec3(0.5, 0.5, -1.0), Vec3(0, 0, 1)});
  EXPECT_NEAR(t.color[0], 0.3, 1e-6);
  EXPECT_NEAR(t.color[1], 0.6, 1e-6);
  EXPECT_NEAR(t.color[2], 0.9, 1e-6);
}

TEST(RenderTest, MissedRayIsBackground) {
  FieldGeometry g = small_geometry();
  g.background = {0.3, 0.3, 0.3};
  const RayTrace t = trace_ray(random_field(g, 3), {Vec3(3, 3, 3), Vec3(1, 0, 0)});
  EXPECT_EQ(t.color, g.background);
  EXPECT_EQ(t.final_transmittance, 1.0);
}

TEST(RenderTest, WeightsAndTransmittanceSumToOne) {
  const FieldGeometry g = small_geometry(6);
  const RadianceField f = random_field(g, 4, 2.0);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const RayTrace t = trace_ray(f, random_ray(rng));
    double sum = t.final_transmittance;
    for (double w : t.weights) sum += w;
    ASSERT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(RenderTest, ChannelsStayInUnitRange) {
  const RadianceField f = random_field(small_geometry(6), 6, 3.0);
  OrbitOptions o;
  o.n_views = 2;
  o.resolution = 16;
  o.focal = 20;
  for (const Image& img : render_rig(f, orbit_rig(o))) {
    for (double v : img.channels()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(RenderTest, TransmittanceNonIncreasingInDensity) {
  const FieldGeometry g = small_geometry(5);
  const RadianceField base = random_field(g, 7);
  std::mt19937_64 rng(8);
  std::vector<Ray> rays;
  for (int i = 0; i < 200; ++i) rays.push_back(random_ray(rng));
  for (int trial = 0; trial < 20; ++trial) {
    RadianceField raised = base;
    const std::size_t voxel = rng() % (g.resolution * g.resolution * g.resolution);
    raised.mutable_params()[4 * voxel] += 3.0f;
    for (const Ray& r : rays) {
      EXPECT_LE(trace_ray(raised, r).final_transmittance, trace_ray(base, r).final_transmittance);
    }
  }
}

TEST(RenderTest, RigOrderPreserved) {
  const RadianceField f = fixture_scene(FixtureKind::kTwoBoxes, small_geometry(8));
  OrbitOptions o;
  o.n_views = 3;
  o.resolution = 8;
  o.focal = 8;
  const CameraRig rig = orbit_rig(o);
  const std::vector<Image> all = render_rig(f, rig);
  for (std::size_t i = 0; i < rig.size(); ++i) EXPECT_EQ(all[i], render(f, rig[i]));
}

TEST(ApplyDeltaTest, Examples) {
  const ParameterVector p(std::vector<float>{1.0f, 2.0f});
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_EQ(apply_delta(p, zero, 1.0), p);
  const std::vector<double> a{0.5, -0.5};
  EXPECT_EQ(apply_delta(p, a, 1.0), ParameterVector(std::vector<float>{1.5f, 1.5f}));
  const std::vector<double> big{5.0, -5.0};
  const ParameterVector clamped = apply_delta(ParameterVector(std::vector<float>{0.0f, 0.0f}), big, 0.01);
  EXPECT_EQ(clamped[0], 0.01f);
  EXPECT_EQ(clamped[1], -0.01f);
  EXPECT_EQ(apply_delta(p, big, 0.0), p);
}

TEST(ApplyDeltaTest, LengthMismatchIsRejected) {
  const ParameterVector p(3);
  const std::vector<double> a{1.0};
  EXPECT_EQ(code_of([&] { apply_delta(p, a, 1.0); }), ErrorCode::kDimensionMismatch);
}

TEST(FitTest, ZeroStepsReturnsInitialField) {
  const FieldGeometry g = small_geometry(4);
  OrbitOptions o;
  o.n_views = 2;
  o.resolution = 8;
  o.focal = 8;
  const CameraRig rig = orbit_rig(o);
  const auto targets = render_rig(fixture_scene(FixtureKind::kSphere, g), rig);
  FitOptions opts;
  opts.steps = 0;
  opts.seed = 11;
  EXPECT_EQ(fit(g, targets, rig, opts).field, initial_field(g, opts));
}

TEST(FitTest, MismatchedInputsAreRejected) {
  const FieldGeometry g = small_geometry(4);
  OrbitOptions o;
  o.n_views = 2;
  o.resolution = 8;
  o.focal = 8;
  const CameraRig rig = orbit_rig(o);
  const std::vector<Image> one{Image(8, 8)};
  EXPECT_EQ(code_of([&] { fit(g, one, rig, {}); }), ErrorCode::kDimensionMismatch);
  const std::vector<Image> wrong{Image(8, 4), Image(8, 4)};
  EXPECT_EQ(code_of([&] { fit(g, wrong, rig, {}); }), ErrorCode::kDimensionMismatch);
}

TEST(FitTest, GradientMatchesFiniteDifferences) {
  FieldGeometry g = small_geometry(6);
  g.samples_per_ray = 24;
  OrbitOptions o;
  o.n_views = 3;
  o.resolution = 12;
  o.focal = 14;
  const CameraRig rig = orbit_rig(o);
  const auto targets = render_rig(fixture_scene(FixtureKind::kTwoBoxes, g), rig);
  FitOptions opts;
  opts.init_noise = 0.5;
  RadianceField f = initial_field(g, opts);
  std::vector<double> grad;
  photometric_loss(f, rig, targets, &grad);

  std::mt19937_64 rng(12);
  int checked = 0;
  for (int attempt = 0; attempt < 400 && checked < 20; ++attempt) {
    const std::size_t i = rng() % f.params().size();
    if (std::abs(grad[i]) < 1e-7) continue;  // voxel not seen by any ray
    const float orig = f.params()[i];
    const float up = orig + 1e-3f;
    const float down = orig - 1e-3f;
    f.mutable_params()[i] = up;
    const double lu = photometric_loss(f, rig, targets);
    f.mutable_params()[i] = down;
    const double ld = photometric_loss(f, rig, targets);
    f.mutable_params()[i] = orig;
    const double numeric = (lu - ld) / (static_cast<double>(up) - static_cast<double>(down));
    EXPECT_LT(std::abs(numeric - grad[i]) / std::max(std::abs(numeric), std::abs(grad[i])), 1e-3)
        << "param " << i << " analytic " << grad[i] << " numeric " << numeric;
    ++checked;
  }
  EXPECT_EQ(checked, 20);
}

TEST(FitTest, DeterministicGivenSeed) {
  const FieldGeometry g = small_geometry(4);
  OrbitOptions o;
  o.n_views = 2;
  o.resolution = 8;
  o.focal = 8;
  const CameraRig rig = orbit_rig(o);
  const auto targets = render_rig(fixture_scene(FixtureKind::kSphere, g), rig);
  FitOptions opts;
  opts.steps = 5;
  opts.seed = 3;
  const FitResult a = fit(g, targets, rig, opts);
  const FitResult b = fit(g, targets, rig, opts);
  EXPECT_EQ(a.field, b.field);
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(SnapshotTest, BitwiseRoundTrip) {
  TempDir dir;
  FieldGeometry g = small_geometry(5);
  g.background = {0.1, 0.7, 0.2};
  g.aabb_min = Vec3(-1, -0.5, 0);
  const RadianceField f = random_field(g, 9);
  save_snapshot(f, dir / "f.avrl");
  const RadianceField back = load_snapshot(dir / "f.avrl");
  EXPECT_EQ(back, f);
  EXPECT_EQ(std::memcmp(back.params().values().data(), f.params().values().data(),
                        f.params().size() * sizeof(float)),
            0);
}

TEST(SnapshotTest, DistinctErrors) {
  TempDir dir;
  const RadianceField f = random_field(small_geometry(3), 10);
  save_snapshot(f, dir / "good.avrl");
  std::vector<std::uint8_t> bytes = read_file_bytes(dir / "good.avrl");

  auto write = [&](const std::string& name, const std::vector<std::uint8_t>& b) {
    std::ofstream(dir / name, std::ios::binary).write(reinterpret_cast<const char*>(b.data()),
                                                      static_cast<std::streamsize>(b.size()));
    return dir / name;
  };
  std::vector<std::uint8_t> magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(code_of([&] { load_snapshot(write("magic.avrl", magic)); }), ErrorCode::kBadMagic);

  std::vector<std::uint8_t> version = bytes;
  version[4] = 9;
  EXPECT_EQ(code_of([&] { load_snapshot(write("version.avrl", version)); }), ErrorCode::kVersionMismatch);

  std::vector<std::uint8_t> shortened(bytes.begin(), bytes.end() - 5);
  EXPECT_EQ(code_of([&] { load_snapshot(write("short.avrl", shortened)); }), ErrorCode::kTruncated);

  EXPECT_EQ(code_of([&] { load_snapshot(dir / "absent.avrl"); }), ErrorCode::kIo);
}

}  // namespace
}  // namespace advirl
