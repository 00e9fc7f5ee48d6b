#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advirl/classifier.hpp"
#include "advirl/field.hpp"

namespace advirl {

enum class AttackMode { kTargeted, kUntargeted };

struct AttackConfig {
  AttackMode mode = AttackMode::kTargeted;
  std::string true_label;
  std::optional<std::string> target_label;
  double theta0 = 100.0;    // target confidence weight
  double theta1 = -1.0;     // true-class confidence weight
  double theta2 = 0.00005;  // image MSE weight (8-bit scale)
  double theta3 = 0.0;      // view-count bonus weight
  int num_views = 8;
  double action_bound = 0.05;
  int episode_length = 8;
  int observation_downsample = 8;

  void validate() const;
};

// Per-label entry of the class table: mean top-1 confidence and how many
// views predicted the label.
struct ClassSummary {
  double avg_confidence = 0.0;
  int count = 0;

  friend bool operator==(const ClassSummary&, const ClassSummary&) = default;
};

using ClassTable = std::map<std::string, ClassSummary>;

// Running-average aggregation of each view's top-1 prediction.
ClassTable aggregate_predictions(const std::vector<PredictionSet>& predictions);

struct RewardTerms {
  double target_confidence = 0.0;
  double true_confidence = 0.0;
  double mean_mse = 0.0;
  int target_count = 0;
  int true_count = 0;
  double reward = 0.0;

  friend bool operator==(const RewardTerms&, const RewardTerms&) = default;
};

double mean_mse(const std::vector<Image>& reference, const std::vector<Image>& adversarial);

// targeted:   theta0*Target + theta1*True - theta2*MSE + theta3*count(target)/N
// untargeted: theta1*True - theta2*MSE + theta3*(1 - count(true)/N)
// Labels absent from the table contribute confidence 0.
RewardTerms reward_terms(const ClassTable& summary, const std::vector<Image>& reference,
                         const std::vector<Image>& adversarial, const AttackConfig& cfg);
double reward(const ClassTable& summary, const std::vector<Image>& reference,
              const std::vector<Image>& adversarial, const AttackConfig& cfg);

// Downsampled views concatenated in rig order, interleaved rgb per pixel.
std::vector<double> encode_observation(const std::vector<Image>& images, int downsample_factor);

struct StepResult {
  std::vector<double> observation;
  std::vector<Image> adversarial_images;
  ClassTable summary;
  RewardTerms terms;
  double reward = 0.0;
  bool done = false;
  bool success = false;

  friend bool operator==(const StepResult&, const StepResult&) = default;
};

bool attack_succeeded(const ClassTable& summary, const AttackConfig& cfg);

// Single-owner attack environment around a fitted base field.
class AdvEnvironment {
 public:
  AdvEnvironment(RadianceField base, CameraRig rig, std::shared_ptr<const Classifier> model, AttackConfig cfg);

  std::vector<double> reset();
  StepResult step(std::span<const double> action);

  std::size_t action_size() const { return base_.params().size(); }
  std::size_t observation_size() const;

  const RadianceField& base_field() const { return base_; }
  const ParameterVector& params() const { return current_; }
  RadianceField current_field() const { return RadianceField(base_.geometry(), current_); }
  const std::vector<Image>& baseline_images() const { return baseline_; }
  const ClassTable& baseline_summary() const { return baseline_summary_; }
  const CameraRig& rig() const { return rig_; }
  const Classifier& classifier() const { return *model_; }
  const AttackConfig& config() const { return cfg_; }
  int step_in_episode() const { return step_; }
  int episode() const { return episode_; }

 private:
  RadianceField base_;
  CameraRig rig_;
  std::shared_ptr<const Classifier> model_;
  AttackConfig cfg_;
  std::vector<Image> baseline_;
  ClassTable baseline_summary_;
  ParameterVector current_;
  int step_ = 0;
  int episode_ = -1;
};

struct PreparedScene {
  RadianceField field;
  std::vector<Image> segmented;  // masked input images, all views
  std::vector<std::size_t> kept_views;
  CameraRig kept_rig;
  std::vector<Image> baseline;  // renders of the fitted field on the kept rig
  double fit_mse = 0.0;
};

// Masks the inputs, keeps the views the classifier already labels
// `true_label`, and fits the field to those views only.
PreparedScene prepare_scene(const std::vector<Image>& images, const std::vector<Mask>& masks, const CameraRig& rig,
                            const Classifier& model, const std::string& true_label, const FieldGeometry& geom,
                            const FitOptions& fit_options);

}  // namespace advirl
