#include <cstring>

#include "advirl/error.hpp"
#include "advirl/field.hpp"
#include "advirl/serialization.hpp"

namespace advirl {

namespace {

constexpr char kSnapshotMagic[4] = {'A', 'V', 'R', 'L'};
constexpr std::uint32_t kSnapshotVersion = 1;

}  // namespace

void save_snapshot(const RadianceField& field, const std::filesystem::path& path) {
  const FieldGeometry& g = field.geometry();
  ByteWriter out;
  out.bytes(kSnapshotMagic, 4);
  out.u32(kSnapshotVersion);
  out.u32(static_cast<std::uint32_t>(g.resolution));
  out.u32(static_cast<std::uint32_t>(g.samples_per_ray));
  for (int a = 0; a < 3; ++a) out.f64(g.aabb_min[a]);
  for (int a = 0; a < 3; ++a) out.f64(g.aabb_max[a]);
  for (double c : g.background) out.f64(c);
  for (float v : field.params().values()) out.f32(v);
  out.write_file(path);
}

RadianceField load_snapshot(const std::filesystem::path& path) {
  ByteReader in(read_file_bytes(path), path.string());
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, kSnapshotMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, path.string() + " is not a field snapshot");
  }
  const std::uint32_t version = in.u32();
  if (version != kSnapshotVersion) {
    fail(ErrorCode::kVersionMismatch, path.string() + ": snapshot version " + std::to_string(version) +
                                          ", expected " + std::to_string(kSnapshotVersion));
  }
  FieldGeometry g;
  g.resolution = static_cast<int>(in.u32());
  g.samples_per_ray = static_cast<int>(in.u32());
  for (int a = 0; a < 3; ++a) g.aabb_min[a] = in.f64();
  for (int a = 0; a < 3; ++a) g.aabb_max[a] = in.f64();
  for (double& c : g.background) c = in.f64();
  try {
    g.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
  const std::size_t count = param_count(g);
  if (in.remaining() < count * sizeof(float)) {
    fail(ErrorCode::kTruncated, path.string() + ": parameter block truncated");
  }
  std::vector<float> values(count);
  for (float& v : values) v = in.f32();
  if (!in.at_end()) fail(ErrorCode::kMalformedFile, path.string() + ": trailing bytes after parameters");
  return RadianceField(g, ParameterVector(std::move(values)));
}

}  // namespace advirl
