#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "advirl/agent.hpp"
#include "advirl/error.hpp"

namespace advirl {

namespace {

// Activations of one forward pass, kept for the backward pass.
struct Trace {
  std::vector<double> h1, h2, mean;
  double value = 0.0;
};

Trace forward_trace(const PolicyParams& p, std::span<const double> x) {
  const PolicyShape& s = p.shape();
  Trace t;
  t.h1.resize(s.hidden1);
  t.h2.resize(s.hidden2);
  t.mean.resize(s.action_dim);
  for (std::size_t r = 0; r < s.hidden1; ++r) {
    const double* row = p.w1().data() + r * s.obs_dim;
    double acc = p.b1()[r];
    for (std::size_t c = 0; c < s.obs_dim; ++c) acc += row[c] * x[c];
    t.h1[r] = std::tanh(acc);
  }
  for (std::size_t r = 0; r < s.hidden2; ++r) {
    const double* row = p.w2().data() + r * s.hidden1;
    double acc = p.b2()[r];
    for (std::size_t c = 0; c < s.hidden1; ++c) acc += row[c] * t.h1[c];
    t.h2[r] = std::tanh(acc);
  }
  for (std::size_t r = 0; r < s.action_dim; ++r) {
    const double* row = p.w_mean().data() + r * s.hidden2;
    double acc = p.b_mean()[r];
    for (std::size_t c = 0; c < s.hidden2; ++c) acc += row[c] * t.h2[c];
    t.mean[r] = acc;
  }
  t.value = p.b_value();
  for (std::size_t c = 0; c < s.hidden2; ++c) t.value += p.w_value()[c] * t.h2[c];
  return t;
}

}  // namespace

void PpoConfig::validate() const {
  require(n_steps >= 1, ErrorCode::kConfig, "ppo.n_steps must be >= 1");
  require(batch_size >= 1 && batch_size <= n_steps, ErrorCode::kConfig, "ppo.batch_size must be in [1, n_steps]");
  require(gamma > 0.0 && gamma <= 1.0, ErrorCode::kConfig, "ppo.gamma must be in (0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, ErrorCode::kConfig, "ppo.gae_lambda must be in [0, 1]");
  require(clip_epsilon > 0.0, ErrorCode::kConfig, "ppo.clip_epsilon must be positive");
  require(max_grad_norm > 0.0, ErrorCode::kConfig, "ppo.max_grad_norm must be positive");
  require(learning_rate >= 0.0, ErrorCode::kConfig, "ppo.learning_rate must be non-negative");
  require(update_epochs >= 1, ErrorCode::kConfig, "ppo.update_epochs must be >= 1");
  require(total_timesteps >= 1, ErrorCode::kConfig, "ppo.total_timesteps must be >= 1");
  require(hidden_size >= 1, ErrorCode::kConfig, "ppo.hidden_size must be >= 1");
}

void compute_gae(RolloutBuffer& buffer, double gamma, double lambda, double bootstrap_value) {
  const std::size_t n = buffer.size();
  require(buffer.values.size() == n && buffer.dones.size() == n, ErrorCode::kDimensionMismatch,
          "compute_gae: buffer arrays differ in length");
  buffer.advantages.assign(n, 0.0);
  buffer.returns.assign(n, 0.0);
  double next_value = bootstrap_value;
  double next_advantage = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = buffer.dones[k] ? 0.0 : 1.0;
    const double delta = buffer.rewards[k] + gamma * next_value * live - buffer.values[k];
    next_advantage = delta + gamma * lambda * live * next_advantage;
    buffer.advantages[k] = next_advantage;
    buffer.returns[k] = next_advantage + buffer.values[k];
    next_value = buffer.values[k];
  }
}

LossBreakdown ppo_loss(const PolicyParams& p, const RolloutBuffer& buffer, std::span<const std::size_t> indices,
                       const PpoConfig& cfg, std::vector<double>* gradient) {
  require(!indices.empty(), ErrorCode::kInvalidArgument, "ppo_loss needs at least one sample");
  require(buffer.advantages.size() == buffer.size() && buffer.returns.size() == buffer.size(),
          ErrorCode::kInvalidArgument, "ppo_loss: advantages not computed");
  const PolicyShape& s = p.shape();
  const double batch = static_cast<double>(indices.size());

  double adv_mean = 0.0;
  for (std::size_t i : indices) adv_mean += buffer.advantages[i];
  adv_mean /= batch;
  double adv_var = 0.0;
  for (std::size_t i : indices) adv_var += (buffer.advantages[i] - adv_mean) * (buffer.advantages[i] - adv_mean);
  const double adv_std = std::max(std::sqrt(adv_var / batch), 1e-8);

  const auto log_std = p.log_std();
  std::vector<double> inv_var(s.action_dim);
  for (std::size_t j = 0; j < s.action_dim; ++j) inv_var[j] = std::exp(-2.0 * log_std[j]);

  if (gradient) gradient->assign(p.size(), 0.0);
  const auto off = p.offsets();
  double* g = gradient ? gradient->data() : nullptr;

  LossBreakdown out;
  std::vector<double> g_mean(s.action_dim), g_h2(s.hidden2), g_z2(s.hidden2), g_h1(s.hidden1);
  for (std::size_t i : indices) {
    const auto& obs = buffer.observations[i];
    const auto& act = buffer.actions[i];
    require(obs.size() == s.obs_dim && act.size() == s.action_dim, ErrorCode::kDimensionMismatch,
            "ppo_loss: buffer entry does not match the policy shape");
    const Trace t = forward_trace(p, obs);
    const double new_lp = gaussian_log_prob(act, t.mean, log_std);
    const double log_ratio = new_lp - buffer.log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double adv = (buffer.advantages[i] - adv_mean) / adv_std;
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
    const bool unclipped_branch = ratio * adv <= clipped * adv;
    const double surrogate = unclipped_branch ? ratio * adv : clipped * adv;
    out.policy += -surrogate / batch;
    if (!unclipped_branch) out.clip_fraction += 1.0 / batch;
    out.approx_kl += ((ratio - 1.0) - log_ratio) / batch;
    const double v_err = t.value - buffer.returns[i];
    out.value += v_err * v_err / batch;

    if (!g) continue;
    // d(loss)/d(log_prob) for this sample
    const double g_lp = unclipped_branch ? -ratio * adv / batch : 0.0;
    const double g_value = 2.0 * cfg.value_coeff * v_err / batch;

    for (std::size_t j = 0; j < s.action_dim; ++j) {
      const double diff = act[j] - t.mean[j];
      g_mean[j] = g_lp * diff * inv_var[j];
      g[off.log_std + j] += g_lp * (diff * diff * inv_var[j] - 1.0);
    }
    std::fill(g_h2.begin(), g_h2.end(), 0.0);
    for (std::size_t j = 0; j < s.action_dim; ++j) {
      const double gm = g_mean[j];
      if (gm == 0.0) continue;
      double* gw = g + off.w_mean + j * s.hidden2;
      const double* w = p.w_mean().data() + j * s.hidden2;
      for (std::size_t c = 0; c < s.hidden2; ++c) {
        gw[c] += gm * t.h2[c];
        g_h2[c] += w[c] * gm;
      }
      g[off.b_mean + j] += gm;
    }
    for (std::size_t c = 0; c < s.hidden2; ++c) {
      g[off.w_value + c] += g_value * t.h2[c];
      g_h2[c] += p.w_value()[c] * g_value;
    }
    g[off.b_value] += g_value;

    for (std::size_t r = 0; r < s.hidden2; ++r) g_z2[r] = g_h2[r] * (1.0 - t.h2[r] * t.h2[r]);
    std::fill(g_h1.begin(), g_h1.end(), 0.0);
    for (std::size_t r = 0; r < s.hidden2; ++r) {
      double* gw = g + off.w2 + r * s.hidden1;
      const double* w = p.w2().data() + r * s.hidden1;
      for (std::size_t c = 0; c < s.hidden1; ++c) {
        gw[c] += g_z2[r] * t.h1[c];
        g_h1[c] += w[c] * g_z2[r];
      }
      g[off.b2 + r] += g_z2[r];
    }
    for (std::size_t r = 0; r < s.hidden1; ++r) {
      const double gz = g_h1[r] * (1.0 - t.h1[r] * t.h1[r]);
      double* gw = g + off.w1 + r * s.obs_dim;
      for (std::size_t c = 0; c < s.obs_dim; ++c) gw[c] += gz * obs[c];
      g[off.b1 + r] += gz;
    }
  }

  double entropy = 0.0;
  const double per_dim = 0.5 * (1.0 + std::log(2.0 * std::numbers::pi));
  for (double ls : log_std) entropy += ls + per_dim;
  out.entropy = entropy;
  if (g && cfg.entropy_coeff != 0.0) {
    for (std::size_t j = 0; j < s.action_dim; ++j) g[off.log_std + j] -= cfg.entropy_coeff;
  }
  out.total = out.policy + cfg.value_coeff * out.value - cfg.entropy_coeff * out.entropy;
  return out;
}

double clip_gradient_norm(std::vector<double>& gradient, double max_norm) {
  double sq = 0.0;
  for (double v : gradient) sq += v * v;
  const double norm = std::sqrt(sq);
  const double coef = max_norm / (norm + 1e-6);
  if (coef < 1.0) {
    for (double& v : gradient) v *= coef;
  }
  return norm;
}

UpdateResult ppo_update(const PolicyParams& p, const RolloutBuffer& buffer, const PpoConfig& cfg, Rng& rng) {
  cfg.validate();
  require(buffer.size() > 0, ErrorCode::kInvalidArgument, "ppo_update: empty rollout buffer");
  UpdateResult result{p, {}};
  std::vector<std::size_t> order(buffer.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::min<std::size_t>(cfg.batch_size, buffer.size());
  std::vector<double> grad;
  for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const LossBreakdown loss = ppo_loss(result.params, buffer, idx, cfg, &grad);
      const bool finite_grad = std::all_of(grad.begin(), grad.end(), [](double v) { return std::isfinite(v); });
      if (!std::isfinite(loss.total) || !finite_grad) {
        fail(ErrorCode::kNumerical, "ppo_update: non-finite loss (policy " + std::to_string(loss.policy) +
                                        ", value " + std::to_string(loss.value) + ") in epoch " +
                                        std::to_string(epoch));
      }
      result.stats.grad_norm = clip_gradient_norm(grad, cfg.max_grad_norm);
      auto flat = result.params.mutable_flat();
      for (std::size_t k = 0; k < flat.size(); ++k) flat[k] -= cfg.learning_rate * grad[k];
      result.stats.policy_loss = loss.policy;
      result.stats.value_loss = loss.value;
      result.stats.entropy = loss.entropy;
      result.stats.approx_kl = loss.approx_kl;
      result.stats.clip_fraction = loss.clip_fraction;
      ++result.stats.minibatches;
    }
  }
  return result;
}

}  // namespace advirl
