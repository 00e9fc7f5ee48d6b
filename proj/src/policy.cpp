#include <cmath>
#include <cstring>
#include <numbers>

#include "advirl/agent.hpp"
#include "advirl/error.hpp"
#include "advirl/serialization.hpp"

namespace advirl {

namespace {

constexpr char kPolicyMagic[4] = {'A', 'V', 'P', 'L'};
constexpr std::uint32_t kPolicyVersion = 1;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// out = W * x + b, W row-major (rows x cols)
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x, double* out) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w.data() + r * cols;
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

}  // namespace

PolicyParams::PolicyParams(const PolicyShape& shape) : shape_(shape) {
  require(shape.obs_dim > 0 && shape.hidden1 > 0 && shape.hidden2 > 0 && shape.action_dim > 0,
          ErrorCode::kInvalidArgument, "policy dimensions must be positive");
  std::size_t off = 0;
  auto take = [&off](std::size_t n) {
    const std::size_t at = off;
    off += n;
    return at;
  };
  off_w1_ = take(shape.hidden1 * shape.obs_dim);
  off_b1_ = take(shape.hidden1);
  off_w2_ = take(shape.hidden2 * shape.hidden1);
  off_b2_ = take(shape.hidden2);
  off_wmu_ = take(shape.action_dim * shape.hidden2);
  off_bmu_ = take(shape.action_dim);
  off_wv_ = take(shape.hidden2);
  off_bv_ = take(1);
  off_logstd_ = take(shape.action_dim);
  data_.assign(off, 0.0);
}

PolicyParams init_policy(const PolicyShape& shape, std::uint64_t seed, double init_log_std) {
  PolicyParams p(shape);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](std::span<double> w, double gain, std::size_t fan_in) {
    const double scale = gain / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w) v = scale * normal(rng);
  };
  fill(p.mutable_w1(), 1.0, shape.obs_dim);
  fill(p.mutable_w2(), 1.0, shape.hidden1);
  fill(p.mutable_w_mean(), 0.01, shape.hidden2);
  fill(p.mutable_w_value(), 1.0, shape.hidden2);
  for (double& v : p.mutable_log_std()) v = init_log_std;
  return p;
}

PolicyOutput policy_forward(const PolicyParams& p, std::span<const double> obs) {
  const PolicyShape& s = p.shape();
  require(obs.size() == s.obs_dim, ErrorCode::kDimensionMismatch,
          "observation length " + std::to_string(obs.size()) + " does not match policy input " +
              std::to_string(s.obs_dim));
  std::vector<double> h1(s.hidden1), h2(s.hidden2);
  affine(p.w1(), p.b1(), obs, h1.data());
  for (double& v : h1) v = std::tanh(v);
  affine(p.w2(), p.b2(), h1, h2.data());
  for (double& v : h2) v = std::tanh(v);
  PolicyOutput out;
  out.mean.resize(s.action_dim);
  affine(p.w_mean(), p.b_mean(), h2, out.mean.data());
  out.log_std.assign(p.log_std().begin(), p.log_std().end());
  double v = p.b_value();
  for (std::size_t i = 0; i < s.hidden2; ++i) v += p.w_value()[i] * h2[i];
  out.value = v;
  return out;
}

double policy_value(const PolicyParams& p, std::span<const double> obs) { return policy_forward(p, obs).value; }

double gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                         std::span<const double> log_std) {
  require(action.size() == mean.size() && mean.size() == log_std.size(), ErrorCode::kDimensionMismatch,
          "gaussian_log_prob: length mismatch");
  double lp = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

ActionSample sample_action(std::span<const double> mean, std::span<const double> log_std, Rng& rng) {
  require(mean.size() == log_std.size(), ErrorCode::kDimensionMismatch, "sample_action: length mismatch");
  std::normal_distribution<double> normal(0.0, 1.0);
  ActionSample s;
  s.action.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) s.action[i] = mean[i] + std::exp(log_std[i]) * normal(rng);
  s.log_prob = gaussian_log_prob(s.action, mean, log_std);
  return s;
}

void save_policy(const PolicyParams& p, const std::filesystem::path& path) {
  const PolicyShape& s = p.shape();
  ByteWriter out;
  out.bytes(kPolicyMagic, 4);
  out.u32(kPolicyVersion);
  out.u32(static_cast<std::uint32_t>(s.obs_dim));
  out.u32(static_cast<std::uint32_t>(s.hidden1));
  out.u32(static_cast<std::uint32_t>(s.hidden2));
  out.u32(static_cast<std::uint32_t>(s.action_dim));
  for (double v : p.flat()) out.f64(v);
  out.write_file(path);
}

PolicyParams load_policy(const std::filesystem::path& path) {
  ByteReader in(read_file_bytes(path), path.string());
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, kPolicyMagic, 4) != 0) fail(ErrorCode::kBadMagic, path.string() + " is not a policy checkpoint");
  const std::uint32_t version = in.u32();
  if (version != kPolicyVersion) {
    fail(ErrorCode::kVersionMismatch, path.string() + ": policy checkpoint version " + std::to_string(version));
  }
  PolicyShape s;
  s.obs_dim = in.u32();
  s.hidden1 = in.u32();
  s.hidden2 = in.u32();
  s.action_dim = in.u32();
  const std::size_t expected = s.hidden1 * s.obs_dim + s.hidden1 + s.hidden2 * s.hidden1 + s.hidden2 +
                               s.action_dim * s.hidden2 + s.action_dim + s.hidden2 + 1 + s.action_dim;
  if (in.remaining() < expected * sizeof(double)) fail(ErrorCode::kTruncated, path.string() + ": weights truncated");
  PolicyParams p(s);
  for (double& v : p.mutable_flat()) v = in.f64();
  if (!in.at_end()) fail(ErrorCode::kMalformedFile, path.string() + ": trailing bytes after weights");
  return p;
}

}  // namespace advirl
