#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "advirl/adversary_env.hpp"

namespace advirl {

using Rng = std::mt19937_64;

struct PolicyShape {
  std::size_t obs_dim = 0;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 64;
  std::size_t action_dim = 0;

  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

// Two tanh hidden layers shared by a Gaussian mean head and a scalar value
// head, plus a state-independent log-std vector. All weights live in one
// flat array so gradients, clipping and updates are plain vector ops.
class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(const PolicyShape& shape);

  const PolicyShape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::span<const double> flat() const { return data_; }
  std::span<double> mutable_flat() { return data_; }

  // Row-major blocks inside the flat array.
  std::span<const double> w1() const { return block(off_w1_, shape_.hidden1 * shape_.obs_dim); }
  std::span<const double> b1() const { return block(off_b1_, shape_.hidden1); }
  std::span<const double> w2() const { return block(off_w2_, shape_.hidden2 * shape_.hidden1); }
  std::span<const double> b2() const { return block(off_b2_, shape_.hidden2); }
  std::span<const double> w_mean() const { return block(off_wmu_, shape_.action_dim * shape_.hidden2); }
  std::span<const double> b_mean() const { return block(off_bmu_, shape_.action_dim); }
  std::span<const double> w_value() const { return block(off_wv_, shape_.hidden2); }
  double b_value() const { return data_[off_bv_]; }
  std::span<const double> log_std() const { return block(off_logstd_, shape_.action_dim); }

  std::span<double> mutable_w1() { return mblock(off_w1_, shape_.hidden1 * shape_.obs_dim); }
  std::span<double> mutable_b1() { return mblock(off_b1_, shape_.hidden1); }
  std::span<double> mutable_w2() { return mblock(off_w2_, shape_.hidden2 * shape_.hidden1); }
  std::span<double> mutable_b2() { return mblock(off_b2_, shape_.hidden2); }
  std::span<double> mutable_w_mean() { return mblock(off_wmu_, shape_.action_dim * shape_.hidden2); }
  std::span<double> mutable_b_mean() { return mblock(off_bmu_, shape_.action_dim); }
  std::span<double> mutable_w_value() { return mblock(off_wv_, shape_.hidden2); }
  double& mutable_b_value() { return data_[off_bv_]; }
  std::span<double> mutable_log_std() { return mblock(off_logstd_, shape_.action_dim); }

  struct Offsets {
    std::size_t w1, b1, w2, b2, w_mean, b_mean, w_value, b_value, log_std;
  };
  Offsets offsets() const {
    return {off_w1_, off_b1_, off_w2_, off_b2_, off_wmu_, off_bmu_, off_wv_, off_bv_, off_logstd_};
  }

  friend bool operator==(const PolicyParams& a, const PolicyParams& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::span<const double> block(std::size_t off, std::size_t n) const { return {data_.data() + off, n}; }
  std::span<double> mblock(std::size_t off, std::size_t n) { return {data_.data() + off, n}; }

  PolicyShape shape_;
  std::vector<double> data_;
  std::size_t off_w1_ = 0, off_b1_ = 0, off_w2_ = 0, off_b2_ = 0, off_wmu_ = 0, off_bmu_ = 0, off_wv_ = 0,
              off_bv_ = 0, off_logstd_ = 0;
};

// Scaled-normal weights, zero biases, log-std filled with init_log_std.
PolicyParams init_policy(const PolicyShape& shape, std::uint64_t seed, double init_log_std = std::log(0.01));

struct PolicyOutput {
  std::vector<double> mean;
  std::vector<double> log_std;
  double value = 0.0;
};

PolicyOutput policy_forward(const PolicyParams& p, std::span<const double> obs);
double policy_value(const PolicyParams& p, std::span<const double> obs);

double gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                         std::span<const double> log_std);

struct ActionSample {
  std::vector<double> action;
  double log_prob = 0.0;
};

ActionSample sample_action(std::span<const double> mean, std::span<const double> log_std, Rng& rng);

struct PpoConfig {
  int n_steps = 2;
  int batch_size = 2;
  double max_grad_norm = 0.00001;
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double learning_rate = 3e-4;
  int update_epochs = 4;
  double entropy_coeff = 0.0;
  double value_coeff = 0.5;
  long total_timesteps = 2000;
  std::uint64_t seed = 0;
  std::size_t hidden_size = 64;
  double init_log_std = std::log(0.01);

  void validate() const;
};

// One environment step as the learner sees it.
struct StepLog {
  long step = 0;
  int episode = 0;
  RewardTerms terms;
};

struct RolloutBuffer {
  std::vector<std::vector<double>> observations;
  std::vector<std::vector<double>> actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<bool> dones;
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<StepLog> logs;

  std::size_t size() const { return rewards.size(); }
};

// A_t = sum_l (gamma*lambda)^l delta_{t+l},
// delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t).
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda, double bootstrap_value);

struct LossBreakdown {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

// Clipped-surrogate PPO loss over the buffer entries in `indices`, with
// advantages normalised over those entries. Writes d(loss)/d(params) into
// `gradient` (resized to p.size()) when non-null.
LossBreakdown ppo_loss(const PolicyParams& p, const RolloutBuffer& buffer, std::span<const std::size_t> indices,
                       const PpoConfig& cfg, std::vector<double>* gradient);

// Rescales `gradient` to have l2 norm at most max_norm; returns the norm
// before clipping.
double clip_gradient_norm(std::vector<double>& gradient, double max_norm);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;  // pre-clip norm of the last minibatch
  int minibatches = 0;
};

struct UpdateResult {
  PolicyParams params;
  UpdateStats stats;
};

UpdateResult ppo_update(const PolicyParams& p, const RolloutBuffer& buffer, const PpoConfig& cfg, Rng& rng);

// Steps the environment n_steps times from `observation` (updated in place),
// resetting whenever an episode ends. `on_step` sees every step result.
RolloutBuffer collect_rollout(AdvEnvironment& env, const PolicyParams& p, int n_steps, Rng& rng,
                              std::vector<double>& observation, long& global_step,
                              const std::function<void(const StepResult&)>& on_step = {});

struct TrainResult {
  ParameterVector best_params;
  double best_reward = 0.0;
  RewardTerms best_terms;
  long best_step = -1;
  std::vector<StepLog> history;
  PolicyParams policy;
  int skipped_updates = 0;
};

TrainResult train(AdvEnvironment& env, const PpoConfig& cfg,
                  const std::function<void(const StepLog&)>& progress = {});

// history.csv: step,episode,reward,target_avg_conf,true_avg_conf,mse,target_count
void write_history_csv(const std::vector<StepLog>& history, const std::filesystem::path& path);

void save_policy(const PolicyParams& p, const std::filesystem::path& path);
PolicyParams load_policy(const std::filesystem::path& path);

}  // namespace advirl
