#include <algorithm>
#include <fstream>
#include <iomanip>

#include "advirl/agent.hpp"
#include "advirl/error.hpp"

namespace advirl {

RolloutBuffer collect_rollout(AdvEnvironment& env, const PolicyParams& p, int n_steps, Rng& rng,
                              std::vector<double>& observation, long& global_step,
                              const std::function<void(const StepResult&)>& on_step) {
  require(n_steps >= 1, ErrorCode::kInvalidArgument, "collect_rollout: n_steps must be >= 1");
  RolloutBuffer buf;
  for (int t = 0; t < n_steps; ++t) {
    const PolicyOutput out = policy_forward(p, observation);
    ActionSample a = sample_action(out.mean, out.log_std, rng);
    StepResult r;
    try {
      r = env.step(a.action);
    } catch (const Error& e) {
      fail(e.code(), "environment step " + std::to_string(global_step) + " (episode " +
                         std::to_string(env.episode()) + "): " + e.what());
    }
    buf.observations.push_back(std::move(observation));
    buf.actions.push_back(std::move(a.action));
    buf.log_probs.push_back(a.log_prob);
    buf.values.push_back(out.value);
    buf.rewards.push_back(r.reward);
    buf.dones.push_back(r.done);
    buf.logs.push_back({global_step, env.episode(), r.terms});
    if (on_step) on_step(r);
    ++global_step;
    observation = r.done ? env.reset() : std::move(r.observation);
  }
  return buf;
}

TrainResult train(AdvEnvironment& env, const PpoConfig& cfg, const std::function<void(const StepLog&)>& progress) {
  cfg.validate();
  Rng rng(cfg.seed);
  const PolicyShape shape{env.observation_size(), cfg.hidden_size, cfg.hidden_size, env.action_size()};
  TrainResult result;
  result.policy = init_policy(shape, cfg.seed, cfg.init_log_std);
  result.best_params = env.base_field().params();
  bool have_best = false;

  std::vector<double> observation = env.reset();
  long global_step = 0;
  auto track_best = [&](const StepResult& r) {
    if (!have_best || r.reward > result.best_reward) {
      have_best = true;
      result.best_reward = r.reward;
      result.best_terms = r.terms;
      result.best_step = global_step;
      result.best_params = env.params();
    }
  };

  while (global_step < cfg.total_timesteps) {
    const int n = static_cast<int>(std::min<long>(cfg.n_steps, cfg.total_timesteps - global_step));
    RolloutBuffer buf = collect_rollout(env, result.policy, n, rng, observation, global_step, track_best);
    if (progress) {
      for (const StepLog& log : buf.logs) progress(log);
    }
    result.history.insert(result.history.end(), buf.logs.begin(), buf.logs.end());

    // The last observation belongs to a fresh episode after a reset, so
    // nothing is bootstrapped across the boundary.
    const double bootstrap = buf.dones.back() ? 0.0 : policy_value(result.policy, observation);
    compute_gae(buf, cfg.gamma, cfg.gae_lambda, bootstrap);
    PpoConfig step_cfg = cfg;
    step_cfg.batch_size = std::min(cfg.batch_size, n);
    step_cfg.n_steps = n;
    try {
      result.policy = ppo_update(result.policy, buf, step_cfg, rng).params;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumerical) throw;
      ++result.skipped_updates;
    }
  }
  return result;
}

void write_history_csv(const std::vector<StepLog>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << "step,episode,reward,target_avg_conf,true_avg_conf,mse,target_count\n";
  out << std::setprecision(17);
  for (const StepLog& h : history) {
    out << h.step << ',' << h.episode << ',' << h.terms.reward << ',' << h.terms.target_confidence << ','
        << h.terms.true_confidence << ',' << h.terms.mean_mse << ',' << h.terms.target_count << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace advirl
