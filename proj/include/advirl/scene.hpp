#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

namespace advirl {

using Vec3 = Eigen::Vector3d;
using Mat4 = Eigen::Matrix4d;

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
};

// Pinhole camera. Camera space follows the computer-vision convention:
// +z forward, +x right, +y down. cam_to_world maps camera to world.
class Camera {
 public:
  Camera(int width, int height, double fx, double fy, double cx, double cy, const Mat4& cam_to_world);

  int width() const { return width_; }
  int height() const { return height_; }
  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  const Mat4& cam_to_world() const { return cam_to_world_; }

  Vec3 position() const { return cam_to_world_.block<3, 1>(0, 3); }
  Vec3 forward() const { return cam_to_world_.block<3, 1>(0, 2); }

 private:
  int width_;
  int height_;
  double fx_, fy_, cx_, cy_;
  Mat4 cam_to_world_;
};

class CameraRig {
 public:
  explicit CameraRig(std::vector<Camera> cameras);

  std::size_t size() const { return cameras_.size(); }
  const Camera& operator[](std::size_t i) const { return cameras_[i]; }
  const std::vector<Camera>& cameras() const { return cameras_; }
  int width() const { return cameras_.front().width(); }
  int height() const { return cameras_.front().height(); }

  // Rig restricted to the given camera indices, in the given order.
  CameraRig subset(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<Camera> cameras_;
};

struct OrbitOptions {
  int n_views = 8;
  double radius = 1.6;
  double elevation = 0.35;  // radians above the target's horizontal plane
  Vec3 target = Vec3(0.5, 0.5, 0.5);
  int resolution = 64;  // square images
  double focal = 64.0;  // pixels
};

// Cameras on a circle around `target`, azimuth 2*pi*k/n_views, k = 0 on +x.
CameraRig orbit_rig(const OrbitOptions& options);

// World-space camera pose looking from `eye` at `target`. World +z is up.
Mat4 look_at(const Vec3& eye, const Vec3& target);

Ray generate_ray(const Camera& cam, int px, int py);

// NeRF-style transforms.json. Frame matrices in the file use the OpenGL
// camera convention (-z forward, +y up) and are converted on the way in.
CameraRig parse_transforms(const std::filesystem::path& path);
void write_transforms(const CameraRig& rig, const std::filesystem::path& path,
                      const std::vector<std::string>& file_paths = {});

// Frame file_path entries, in file order; relative to the transforms file.
std::vector<std::string> transforms_frame_paths(const std::filesystem::path& path);

}  // namespace advirl
