#include "advirl/scene.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>

#include "advirl/error.hpp"

namespace advirl {

namespace {

using nlohmann::json;

// Swaps between the OpenGL camera axes used by transforms files and our
// +z-forward, +y-down camera axes. It is its own inverse.
const Mat4& gl_flip() {
  static const Mat4 flip = Eigen::Vector4d(1.0, -1.0, -1.0, 1.0).asDiagonal();
  return flip;
}

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    fail(ErrorCode::kMissingField, where + ": missing field '" + key + "'");
  }
  return *it;
}

double number(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) fail(ErrorCode::kMalformedFile, where + ": field '" + key + "' is not a number");
  return v.get<double>();
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
}

}  // namespace

Camera::Camera(int width, int height, double fx, double fy, double cx, double cy, const Mat4& cam_to_world)
    : width_(width), height_(height), fx_(fx), fy_(fy), cx_(cx), cy_(cy), cam_to_world_(cam_to_world) {
  require(width > 0 && height > 0, ErrorCode::kInvalidArgument, "camera resolution must be positive");
  require(fx > 0.0 && fy > 0.0, ErrorCode::kInvalidArgument, "focal lengths must be positive");
  require(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height, ErrorCode::kInvalidArgument,
          "principal point outside the image");
  require(cam_to_world.allFinite(), ErrorCode::kInvalidArgument, "camera pose is not finite");
  const Eigen::Matrix3d r = cam_to_world.block<3, 3>(0, 0);
  const double err = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  require(err <= 1e-6, ErrorCode::kInvalidArgument, "camera rotation is not orthonormal");
}

CameraRig::CameraRig(std::vector<Camera> cameras) : cameras_(std::move(cameras)) {
  require(!cameras_.empty(), ErrorCode::kInvalidArgument, "camera rig needs at least one camera");
  for (const Camera& c : cameras_) {
    if (c.width() != cameras_.front().width() || c.height() != cameras_.front().height()) {
      fail(ErrorCode::kInconsistentResolution, "all rig cameras must share one resolution");
    }
  }
}

CameraRig CameraRig::subset(const std::vector<std::size_t>& indices) const {
  std::vector<Camera> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) {
    require(i < cameras_.size(), ErrorCode::kOutOfBounds, "rig subset index out of range");
    picked.push_back(cameras_[i]);
  }
  return CameraRig(std::move(picked));
}

Mat4 look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 up(0.0, 0.0, 1.0);
  if (std::abs(forward.dot(up)) > 1.0 - 1e-9) up = Vec3(0.0, 1.0, 0.0);
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);
  Mat4 m = Mat4::Identity();
  m.block<3, 1>(0, 0) = right;
  m.block<3, 1>(0, 1) = down;
  m.block<3, 1>(0, 2) = forward;
  m.block<3, 1>(0, 3) = eye;
  return m;
}

CameraRig orbit_rig(const OrbitOptions& o) {
  require(o.n_views >= 1, ErrorCode::kInvalidArgument, "orbit rig needs n_views >= 1");
  require(o.radius > 0.0, ErrorCode::kInvalidArgument, "orbit radius must be positive");
  require(o.resolution > 0 && o.focal > 0.0, ErrorCode::kInvalidArgument, "orbit resolution and focal must be positive");
  std::vector<Camera> cams;
  cams.reserve(o.n_views);
  const double c = 0.5 * o.resolution;
  for (int k = 0; k < o.n_views; ++k) {
    const double az = 2.0 * std::numbers::pi * k / o.n_views;
    const Vec3 offset(std::cos(o.elevation) * std::cos(az), std::cos(o.elevation) * std::sin(az),
                      std::sin(o.elevation));
    cams.emplace_back(o.resolution, o.resolution, o.focal, o.focal, c, c,
                      look_at(o.target + o.radius * offset, o.target));
  }
  return CameraRig(std::move(cams));
}

Ray generate_ray(const Camera& cam, int px, int py) {
  if (px < 0 || px >= cam.width() || py < 0 || py >= cam.height()) {
    fail(ErrorCode::kOutOfBounds, "pixel (" + std::to_string(px) + "," + std::to_string(py) +
                                      ") outside the image");
  }
  const Vec3 local((px + 0.5 - cam.cx()) / cam.fx(), (py + 0.5 - cam.cy()) / cam.fy(), 1.0);
  const Vec3 dir = cam.cam_to_world().block<3, 3>(0, 0) * local;
  return Ray{cam.position(), dir.normalized()};
}

CameraRig parse_transforms(const std::filesystem::path& path) {
  const json doc = read_json(path);
  const std::string where = path.string();
  const double w = number(doc, "w", where);
  const double h = number(doc, "h", where);
  const double fx = number(doc, "fl_x", where);
  const double fy = number(doc, "fl_y", where);
  const double cx = number(doc, "cx", where);
  const double cy = number(doc, "cy", where);
  const json& frames = field(doc, "frames", where);
  if (!frames.is_array() || frames.empty()) {
    fail(ErrorCode::kMalformedFile, where + ": 'frames' must be a non-empty array");
  }

  std::vector<Camera> cams;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const json& frame = frames[i];
    const std::string fwhere = where + ": frame " + std::to_string(i);
    field(frame, "file_path", fwhere);
    for (const auto& [key, global] : {std::pair{"w", w}, std::pair{"h", h}}) {
      if (frame.contains(key) && number(frame, key, fwhere) != global) {
        fail(ErrorCode::kInconsistentResolution, fwhere + ": resolution differs from the file header");
      }
    }
    const json& rows = field(frame, "transform_matrix", fwhere);
    if (!rows.is_array() || rows.size() != 4) {
      fail(ErrorCode::kMalformedFile, fwhere + ": transform_matrix must be 4x4");
    }
    Mat4 m;
    for (int r = 0; r < 4; ++r) {
      if (!rows[r].is_array() || rows[r].size() != 4) {
        fail(ErrorCode::kMalformedFile, fwhere + ": transform_matrix must be 4x4");
      }
      for (int c = 0; c < 4; ++c) {
        if (!rows[r][c].is_number()) fail(ErrorCode::kMalformedFile, fwhere + ": non-numeric matrix entry");
        m(r, c) = rows[r][c].get<double>();
      }
    }
    if (!m.allFinite() || std::abs(m.determinant()) < 1e-12) {
      fail(ErrorCode::kNonInvertible, fwhere + ": transform_matrix is not invertible");
    }
    cams.emplace_back(static_cast<int>(w), static_cast<int>(h), fx, fy, cx, cy, m * gl_flip());
  }
  return CameraRig(std::move(cams));
}

std::vector<std::string> transforms_frame_paths(const std::filesystem::path& path) {
  const json doc = read_json(path);
  std::vector<std::string> out;
  for (const json& frame : field(doc, "frames", path.string())) {
    const json& fp = field(frame, "file_path", path.string());
    if (!fp.is_string()) fail(ErrorCode::kMalformedFile, path.string() + ": file_path must be text");
    out.push_back(fp.get<std::string>());
  }
  return out;
}

void write_transforms(const CameraRig& rig, const std::filesystem::path& path,
                      const std::vector<std::string>& file_paths) {
  require(file_paths.empty() || file_paths.size() == rig.size(), ErrorCode::kDimensionMismatch,
          "write_transforms: one file path per camera expected");
  const Camera& first = rig[0];
  json doc;
  doc["w"] = first.width();
  doc["h"] = first.height();
  doc["fl_x"] = first.fx();
  doc["fl_y"] = first.fy();
  doc["cx"] = first.cx();
  doc["cy"] = first.cy();
  json frames = json::array();
  for (std::size_t i = 0; i < rig.size(); ++i) {
    const Mat4 m = rig[i].cam_to_world() * gl_flip();
    json rows = json::array();
    for (int r = 0; r < 4; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
    const std::string fp = file_paths.empty() ? "images/view_" + std::to_string(i) + ".png" : file_paths[i];
    frames.push_back({{"file_path", fp}, {"transform_matrix", rows}});
  }
  doc["frames"] = frames;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << doc.dump(2) << "\n";
}

}  // namespace advirl
