#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include <Eigen/Geometry>

#include "advirl/fixtures.hpp"
#include "advirl/scene.hpp"
#include "test_util.hpp"

namespace advirl {
namespace {

using testing::code_of;
using testing::TempDir;

Camera identity_camera(int w = 64, int h = 48, double f = 50.0) {
  return Camera(w, h, f, f, w / 2.0, h / 2.0, Mat4::Identity());
}

TEST(CameraTest, ValidatesIntrinsicsAndPose) {
  EXPECT_EQ(code_of([] { Camera(4, 4, 0.0, 1.0, 2, 2, Mat4::Identity()); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { Camera(4, 4, 1.0, 1.0, 4.0, 2, Mat4::Identity()); }), ErrorCode::kInvalidArgument);
  Mat4 skew = Mat4::Identity();
  skew(0, 1) = 0.1;
  EXPECT_EQ(code_of([&] { Camera(4, 4, 1.0, 1.0, 2, 2, skew); }), ErrorCode::kInvalidArgument);
}

TEST(CameraRigTest, RejectsMixedResolutions) {
  EXPECT_EQ(code_of([] { CameraRig({identity_camera(8, 8), identity_camera(8, 4)}); }),
            ErrorCode::kInconsistentResolution);
  EXPECT_EQ(code_of([] { CameraRig(std::vector<Camera>{}); }), ErrorCode::kInvalidArgument);
}

TEST(OrbitRigTest, SingleViewSitsOnPlusX) {
  OrbitOptions o;
  o.n_views = 1;
  o.elevation = 0.0;
  const CameraRig rig = orbit_rig(o);
  ASSERT_EQ(rig.size(), 1u);
  const Vec3 offset = rig[0].position() - o.target;
  EXPECT_NEAR(offset.x(), o.radius, 1e-12);
  EXPECT_NEAR(offset.y(), 0.0, 1e-12);
  EXPECT_NEAR(offset.z(), 0.0, 1e-12);
}

TEST(OrbitRigTest, FourViewsAtQuarterTurns) {
  OrbitOptions o;
  o.n_views = 4;
  o.elevation = 0.0;
  const CameraRig rig = orbit_rig(o);
  const double r = o.radius;
  const Vec3 expected[4] = {{r, 0, 0}, {0, r, 0}, {-r, 0, 0}, {0, -r, 0}};
  for (int k = 0; k < 4; ++k) {
    const Vec3 offset = rig[k].position() - o.target;
    EXPECT_NEAR((offset - expected[k]).norm(), 0.0, 1e-12) << k;
    EXPECT_NEAR(offset.norm(), r, 1e-12);
  }
}

TEST(OrbitRigTest, CamerasLookAtTarget) {
  OrbitOptions o;
  o.n_views = 7;
  o.elevation = 0.6;
  const CameraRig rig = orbit_rig(o);
  for (const Camera& cam : rig.cameras()) {
    const Vec3 to_target = (o.target - cam.position()).normalized();
    const double angle = std::acos(std::clamp(cam.forward().dot(to_target), -1.0, 1.0));
    EXPECT_LT(angle, 1e-6);
  }
}

TEST(OrbitRigTest, RotationRelabeling) {
  OrbitOptions o;
  o.n_views = 6;
  const CameraRig rig = orbit_rig(o);
  const double step = 2.0 * std::numbers::pi / o.n_views;
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(step, Vec3::UnitZ()).toRotationMatrix();
  for (int k = 0; k + 1 < o.n_views; ++k) {
    const Vec3 rotated = o.target + rot * (rig[k].position() - o.target);
    EXPECT_NEAR((rotated - rig[k + 1].position()).norm(), 0.0, 1e-12);
  }
}

TEST(OrbitRigTest, ZeroRadiusIsRejected) {
  OrbitOptions o;
  o.radius = 0.0;
  EXPECT_EQ(code_of([&] { orbit_rig(o); }), ErrorCode::kInvalidArgument);
}

TEST(GenerateRayTest, PrincipalPointIsOnAxis) {
  // Principal point on a pixel centre: cx = 31.5 hits pixel 31.
  const Camera cam(64, 64, 40.0, 40.0, 31.5, 31.5, Mat4::Identity());
  const Ray ray = generate_ray(cam, 31, 31);
  EXPECT_NEAR((ray.direction - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(ray.origin.norm(), 0.0, 1e-15);
}

TEST(GenerateRayTest, FortyFiveDegreesOffAxis) {
  const Camera cam(64, 64, 20.0, 20.0, 10.5, 31.5, Mat4::Identity());
  const Ray ray = generate_ray(cam, 30, 31);  // px + 0.5 - cx == fx
  EXPECT_NEAR((ray.direction - Vec3(1, 0, 1).normalized()).norm(), 0.0, 1e-15);
}

TEST(GenerateRayTest, UnitDirectionsInsideFrustum) {
  OrbitOptions o;
  o.resolution = 16;
  o.focal = 12.0;
  const CameraRig rig = orbit_rig(o);
  for (const Camera& cam : rig.cameras()) {
    for (int y = 0; y < cam.height(); ++y) {
      for (int x = 0; x < cam.width(); ++x) {
        const Ray r = generate_ray(cam, x, y);
        EXPECT_NEAR(r.direction.norm(), 1.0, 1e-9);
        EXPECT_GT(r.direction.dot(cam.forward()), 0.0);
      }
    }
  }
}

TEST(GenerateRayTest, OutOfBoundsPixelIsRejected) {
  const Camera cam = identity_camera();
  EXPECT_EQ(code_of([&] { generate_ray(cam, 64, 0); }), ErrorCode::kOutOfBounds);
  EXPECT_EQ(code_of([&] { generate_ray(cam, 0, -1); }), ErrorCode::kOutOfBounds);
}

TEST(TransformsTest, RoundTrip) {
  TempDir dir;
  OrbitOptions o;
  o.n_views = 5;
  o.elevation = 0.4;
  const CameraRig rig = orbit_rig(o);
  write_transforms(rig, dir / "transforms.json");
  const CameraRig back = parse_transforms(dir / "transforms.json");
  ASSERT_EQ(back.size(), rig.size());
  for (std::size_t i = 0; i < rig.size(); ++i) {
    EXPECT_LE((back[i].cam_to_world() - rig[i].cam_to_world()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(back[i].fx(), rig[i].fx());
    EXPECT_EQ(back[i].cx(), rig[i].cx());
  }
  EXPECT_EQ(transforms_frame_paths(dir / "transforms.json").size(), rig.size());
}

TEST(TransformsTest, OpenGlConventionIsConverted) {
  // An OpenGL camera at the origin looking down -z is a CV camera whose
  // forward axis is -z and whose image y axis points along -y.
  TempDir dir;
  std::ofstream(dir / "t.json") << R"({"w": 8, "h": 8, "fl_x": 8, "fl_y": 8, "cx": 4, "cy": 4,
    "frames": [{"file_path": "a.png", "transform_matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}]})";
  const CameraRig rig = parse_transforms(dir / "t.json");
  EXPECT_NEAR((rig[0].forward() - Vec3(0, 0, -1)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((rig[0].cam_to_world().block<3, 1>(0, 1) - Vec3(0, -1, 0)).norm(), 0.0, 1e-15);
}

TEST(TransformsTest, DistinctErrors) {
  TempDir dir;
  std::ofstream(dir / "missing.json") << R"({"w": 8, "h": 8, "fl_x": 8, "cx": 4, "cy": 4, "frames": []})";
  EXPECT_EQ(code_of([&] { parse_transforms(dir / "missing.json"); }), ErrorCode::kMissingField);

  std::ofstream(dir / "singular.json") << R"({"w": 8, "h": 8, "fl_x": 8, "fl_y": 8, "cx": 4, "cy": 4,
    "frames": [{"file_path": "a.png", "transform_matrix": [[1,0,0,0],[1,0,0,0],[0,0,1,0],[0,0,0,1]]}]})";
  EXPECT_EQ(code_of([&] { parse_transforms(dir / "singular.json"); }), ErrorCode::kNonInvertible);

  std::ofstream(dir / "mixed.json") << R"({"w": 8, "h": 8, "fl_x": 8, "fl_y": 8, "cx": 4, "cy": 4,
    "frames": [{"file_path": "a.png", "w": 16,
                "transform_matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}]})";
  EXPECT_EQ(code_of([&] { parse_transforms(dir / "mixed.json"); }), ErrorCode::kInconsistentResolution);

  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_EQ(code_of([&] { parse_transforms(dir / "broken.json"); }), ErrorCode::kMalformedFile);
  EXPECT_EQ(code_of([&] { parse_transforms(dir / "absent.json"); }), ErrorCode::kIo);
}

TEST(FixtureTest, SphereDensityMatchesVoxelCentres) {
  FieldGeometry g;
  g.resolution = 12;
  const FixtureOptions opts;
  const RadianceField f = fixture_scene(FixtureKind::kSphere, g, opts);
  const Vec3 centre(0.5, 0.5, 0.5);
  int inside = 0;
  for (int z = 0; z < g.resolution; ++z) {
    for (int y = 0; y < g.resolution; ++y) {
      for (int x = 0; x < g.resolution; ++x) {
        const bool in = (f.voxel_center(x, y, z) - centre).norm() <= opts.sphere_radius;
        const float logit = f.params()[4 * f.voxel_index(x, y, z)];
        EXPECT_EQ(logit, in ? opts.inside_density_logit : opts.outside_density_logit);
        inside += in;
      }
    }
  }
  EXPECT_GT(inside, 0);
}

TEST(FixtureTest, SphereRendersAsColoredDisk) {
  FieldGeometry g;
  g.resolution = 16;
  OrbitOptions o;
  o.n_views = 8;
  o.resolution = 32;
  o.focal = 40.0;
  const RadianceField f = fixture_scene(FixtureKind::kSphere, g);
  for (const Image& img : render_rig(f, orbit_rig(o))) {
    const Rgb centre = img.at(16, 16);
    EXPECT_NEAR(centre[0], 0.98, 1e-3);
    EXPECT_NEAR(centre[1], 0.02, 1e-3);
    EXPECT_NEAR(centre[2], 0.02, 1e-3);
    EXPECT_EQ(img.at(0, 0), (Rgb{0, 0, 0}));
  }
}

TEST(FixtureTest, TwoBoxesShowTwoRegionsFromTheSide) {
  FieldGeometry g;
  g.resolution = 24;
  const RadianceField f = fixture_scene(FixtureKind::kTwoBoxes, g);
  // Looking along +y at the box centres: boxes separated along x.
  OrbitOptions o;
  o.n_views = 4;
  o.elevation = 0.0;
  o.resolution = 48;
  o.focal = 48.0;
  const Image side = render(f, orbit_rig(o)[3]);  // camera on -y looking at +y
  int red_cols = 0, blue_cols = 0, gap_cols = 0;
  int last = -1, transitions = 0;
  for (int x = 0; x < side.width(); ++x) {
    const Rgb c = side.at(x, side.height() / 2);
    const int kind = c[0] > 0.5 ? 1 : (c[2] > 0.5 ? 2 : 0);
    red_cols += kind == 1;
    blue_cols += kind == 2;
    gap_cols += kind == 0;
    if (kind != 0 && kind != last) ++transitions;
    if (kind != 0) last = kind;
  }
  EXPECT_GT(red_cols, 0);
  EXPECT_GT(blue_cols, 0);
  EXPECT_EQ(transitions, 2);
}

}  // namespace
}  // namespace advirl
