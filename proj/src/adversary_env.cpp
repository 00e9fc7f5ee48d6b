#include "advirl/adversary_env.hpp"

#include "advirl/error.hpp"

namespace advirl {

void AttackConfig::validate() const {
  require(!true_label.empty(), ErrorCode::kConfig, "attack needs a true_label");
  if (mode == AttackMode::kTargeted) {
    require(target_label.has_value() && !target_label->empty(), ErrorCode::kConfig,
            "targeted attack needs a target_label");
    require(*target_label != true_label, ErrorCode::kConfig, "target_label must differ from true_label");
  }
  require(num_views >= 1, ErrorCode::kConfig, "num_views must be >= 1");
  require(action_bound > 0.0, ErrorCode::kConfig, "action_bound must be positive");
  require(episode_length >= 1, ErrorCode::kConfig, "episode_length must be >= 1");
  require(observation_downsample >= 1, ErrorCode::kConfig, "observation_downsample must be >= 1");
}

ClassTable aggregate_predictions(const std::vector<PredictionSet>& predictions) {
  ClassTable table;
  for (const PredictionSet& set : predictions) {
    require(set.size() > 0, ErrorCode::kInvalidArgument, "empty prediction list for a view");
    const Prediction& top = set.top();
    auto it = table.find(top.label);
    if (it == table.end()) {
      table.emplace(top.label, ClassSummary{top.confidence, 1});
      continue;
    }
    ClassSummary& entry = it->second;
    const double sum = entry.avg_confidence * entry.count + top.confidence;
    entry.count += 1;
    entry.avg_confidence = sum / entry.count;
  }
  return table;
}

double mean_mse(const std::vector<Image>& reference, const std::vector<Image>& adversarial) {
  require(reference.size() == adversarial.size(), ErrorCode::kDimensionMismatch,
          "reference and adversarial image sets differ in length");
  if (reference.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) total += mse(reference[i], adversarial[i]);
  return total / static_cast<double>(reference.size());
}

RewardTerms reward_terms(const ClassTable& summary, const std::vector<Image>& reference,
                         const std::vector<Image>& adversarial, const AttackConfig& cfg) {
  auto lookup = [&](const std::string& label) {
    auto it = summary.find(label);
    return it == summary.end() ? ClassSummary{} : it->second;
  };
  RewardTerms t;
  const ClassSummary truth = lookup(cfg.true_label);
  t.true_confidence = truth.avg_confidence;
  t.true_count = truth.count;
  if (cfg.target_label) {
    const ClassSummary target = lookup(*cfg.target_label);
    t.target_confidence = target.avg_confidence;
    t.target_count = target.count;
  }
  t.mean_mse = mean_mse(reference, adversarial);
  const double n = cfg.num_views;
  if (cfg.mode == AttackMode::kTargeted) {
    t.reward = cfg.theta0 * t.target_confidence + cfg.theta1 * t.true_confidence - cfg.theta2 * t.mean_mse +
               cfg.theta3 * (t.target_count / n);
  } else {
    t.reward = cfg.theta1 * t.true_confidence - cfg.theta2 * t.mean_mse + cfg.theta3 * (1.0 - t.true_count / n);
  }
  return t;
}

double reward(const ClassTable& summary, const std::vector<Image>& reference, const std::vector<Image>& adversarial,
              const AttackConfig& cfg) {
  return reward_terms(summary, reference, adversarial, cfg).reward;
}

std::vector<double> encode_observation(const std::vector<Image>& images, int downsample_factor) {
  std::vector<double> out;
  for (const Image& img : images) {
    const Image small = downsample(img, downsample_factor);
    out.insert(out.end(), small.channels().begin(), small.channels().end());
  }
  return out;
}

bool attack_succeeded(const ClassTable& summary, const AttackConfig& cfg) {
  if (cfg.mode == AttackMode::kTargeted) {
    auto it = summary.find(*cfg.target_label);
    return it != summary.end() && it->second.count == cfg.num_views;
  }
  return !summary.contains(cfg.true_label);
}

AdvEnvironment::AdvEnvironment(RadianceField base, CameraRig rig, std::shared_ptr<const Classifier> model,
                               AttackConfig cfg)
    : base_(std::move(base)), rig_(std::move(rig)), model_(std::move(model)), cfg_(std::move(cfg)),
      current_(base_.params()) {
  require(model_ != nullptr, ErrorCode::kInvalidArgument, "environment needs a classifier");
  cfg_.validate();
  require(static_cast<std::size_t>(cfg_.num_views) == rig_.size(), ErrorCode::kConfig,
          "num_views (" + std::to_string(cfg_.num_views) + ") does not match the rig size (" +
              std::to_string(rig_.size()) + ")");
  require(model_->labels().contains(cfg_.true_label), ErrorCode::kConfig,
          "true_label '" + cfg_.true_label + "' is not in the classifier label space");
  if (cfg_.target_label) {
    require(model_->labels().contains(*cfg_.target_label), ErrorCode::kConfig,
            "target_label '" + *cfg_.target_label + "' is not in the classifier label space");
  }
  require(rig_.width() % cfg_.observation_downsample == 0 && rig_.height() % cfg_.observation_downsample == 0,
          ErrorCode::kConfig, "observation_downsample must divide the rig resolution");
  baseline_ = render_rig(base_, rig_);
  baseline_summary_ = aggregate_predictions(classify_batch(*model_, baseline_));
}

std::size_t AdvEnvironment::observation_size() const {
  const std::size_t f = static_cast<std::size_t>(cfg_.observation_downsample);
  return rig_.size() * 3 * (rig_.width() / f) * (rig_.height() / f);
}

std::vector<double> AdvEnvironment::reset() {
  current_ = base_.params();
  step_ = 0;
  ++episode_;
  return encode_observation(baseline_, cfg_.observation_downsample);
}

StepResult AdvEnvironment::step(std::span<const double> action) {
  ParameterVector next = apply_delta(current_, action, cfg_.action_bound);
  StepResult r;
  r.adversarial_images = render_rig(RadianceField(base_.geometry(), next), rig_);
  r.summary = aggregate_predictions(classify_batch(*model_, r.adversarial_images));
  r.terms = reward_terms(r.summary, baseline_, r.adversarial_images, cfg_);
  r.reward = r.terms.reward;
  r.observation = encode_observation(r.adversarial_images, cfg_.observation_downsample);
  ++step_;
  r.success = attack_succeeded(r.summary, cfg_);
  r.done = step_ >= cfg_.episode_length || r.success;
  current_ = std::move(next);
  return r;
}

PreparedScene prepare_scene(const std::vector<Image>& images, const std::vector<Mask>& masks, const CameraRig& rig,
                            const Classifier& model, const std::string& true_label, const FieldGeometry& geom,
                            const FitOptions& fit_options) {
  require(images.size() == rig.size(), ErrorCode::kDimensionMismatch,
          "prepare_scene: " + std::to_string(images.size()) + " images for " + std::to_string(rig.size()) +
              " cameras");
  require(masks.empty() || masks.size() == images.size(), ErrorCode::kDimensionMismatch,
          "prepare_scene: one mask per image expected");
  PreparedScene out{RadianceField(geom), {}, {}, rig, {}, 0.0};
  for (std::size_t i = 0; i < images.size(); ++i) {
    out.segmented.push_back(masks.empty() ? images[i] : apply_mask(images[i], masks[i], geom.background));
  }
  out.kept_views = filter_views(model, out.segmented, true_label);
  if (out.kept_views.empty()) {
    fail(ErrorCode::kNoViews, "none of the " + std::to_string(images.size()) +
                                  " views is classified as '" + true_label +
                                  "'; check the masks, the classifier, or the true label");
  }
  out.kept_rig = rig.subset(out.kept_views);
  std::vector<Image> kept_images;
  for (std::size_t i : out.kept_views) kept_images.push_back(out.segmented[i]);
  FitResult fitted = fit(geom, kept_images, out.kept_rig, fit_options);
  out.field = std::move(fitted.field);
  out.fit_mse = fitted.final_mse;
  out.baseline = render_rig(out.field, out.kept_rig);
  return out;
}

}  // namespace advirl
