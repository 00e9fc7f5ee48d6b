#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "advirl/adversary_env.hpp"
#include "advirl/agent.hpp"
#include "advirl/classifier.hpp"
#include "advirl/field.hpp"
#include "advirl/scene.hpp"

namespace advirl {

struct ClassifierSettings {
  enum class Kind { kHistogram, kLinear };
  Kind kind = Kind::kHistogram;
  std::vector<std::string> labels;
  std::vector<Rgb> prototypes;  // histogram only, one per label
  double temperature = 1.0;     // histogram only
  std::filesystem::path weights;  // linear only

  std::unique_ptr<Classifier> build() const;
};

// Either an orbit around the scene or the poses of a transforms file.
struct RigSettings {
  std::optional<std::filesystem::path> transforms;
  OrbitOptions orbit;

  CameraRig build() const;
};

struct ExperimentPaths {
  std::optional<std::filesystem::path> images;      // directory of input views
  std::optional<std::filesystem::path> masks;       // directory of masks, same stems as the images
  std::optional<std::filesystem::path> transforms;  // poses of the input views
  std::optional<std::filesystem::path> snapshot;    // field to attack, render or evaluate
  std::optional<std::filesystem::path> output;
};

// Settings used only by the demo: how the synthetic inputs are segmented.
struct DemoOptions {
  Rgb chroma_key = {0.0, 0.0, 0.0};
  double chroma_threshold = 0.05;
};

struct ExperimentConfig {
  ExperimentPaths paths;
  FieldGeometry geometry;
  FitOptions fit;
  ClassifierSettings classifier;
  RigSettings rig;
  AttackConfig attack;
  PpoConfig ppo;
  DemoOptions demo;
  std::uint64_t seed = 0;

  // Pushes the experiment seed into the fit and PPO settings.
  void set_seed(std::uint64_t s);
};

// Settings the bundled demo runs with: the sphere scene, a red/blue
// histogram classifier and an attack budget of 2000 environment steps.
ExperimentConfig demo_config();

// Parses a JSON document. Every key is checked against the schema;
// relative paths are resolved against base_dir. Throws ErrorCode::kConfig.
ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir,
                                         ExperimentConfig defaults = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path, ExperimentConfig defaults = {});

enum class Command { kFit, kAttack, kRender, kEvaluate, kDemo };

// Checks everything a command needs before it starts: referenced paths
// exist, labels belong to the classifier, view counts agree.
void validate_for(const ExperimentConfig& cfg, Command command);

// Input views named by the transforms file, looked up in paths.images when
// set (by file name) and otherwise relative to the transforms file.
std::vector<std::filesystem::path> input_image_paths(const ExperimentConfig& cfg);
// One mask per input view: <masks>/<image stem>.png. Empty without paths.masks.
std::vector<std::filesystem::path> input_mask_paths(const ExperimentConfig& cfg);

struct ViewRow {
  std::size_t view = 0;
  std::string label;
  double confidence = 0.0;
};

struct MetricsReport {
  std::vector<ViewRow> rows;
  ClassTable summary;
  std::optional<RewardTerms> terms;  // reward of the evaluated field against the base renders
  std::optional<double> best_reward;
  std::optional<long> best_step;
  std::optional<double> final_reward;

  std::size_t view_count() const { return rows.size(); }
  int count_of(const std::string& label) const;
  std::string count_line(const std::string& label) const;
};

MetricsReport make_report(const std::vector<PredictionSet>& predictions);
// Fills best/final reward from a training history (first maximum wins).
void add_trajectory(MetricsReport& report, const std::vector<StepLog>& history);

std::string report_text(const MetricsReport& report);
std::string report_csv(const MetricsReport& report);

std::vector<StepLog> read_history_csv(const std::filesystem::path& path);

// Fixed output layout below the output directory.
struct OutputLayout {
  std::filesystem::path root;

  std::filesystem::path snapshots() const { return root / "snapshots"; }
  std::filesystem::path renders() const { return root / "renders"; }
  std::filesystem::path reports() const { return root / "reports"; }
  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path history() const { return root / "history.csv"; }
  std::filesystem::path base_snapshot() const { return snapshots() / "base.snap"; }
  std::filesystem::path adversarial_snapshot() const { return snapshots() / "adversarial.snap"; }
  std::filesystem::path policy() const { return snapshots() / "policy.ckpt"; }
  std::filesystem::path kept_transforms() const { return snapshots() / "kept_transforms.json"; }

  void create() const;
};

struct RunOptions {
  std::filesystem::path out;
  std::ostream* log = nullptr;  // progress lines; null for quiet runs
};

struct FitSummary {
  double final_mse = 0.0;
  std::vector<std::size_t> kept_views;
  std::vector<std::size_t> dropped_views;
};

FitSummary cmd_fit(const ExperimentConfig& cfg, const RunOptions& run);
MetricsReport cmd_attack(const ExperimentConfig& cfg, const RunOptions& run);
void cmd_render(const ExperimentConfig& cfg, const std::filesystem::path& snapshot, const RunOptions& run);
MetricsReport cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& snapshot,
                           const RunOptions& run);
MetricsReport cmd_demo(const ExperimentConfig& cfg, const RunOptions& run);

}  // namespace advirl
