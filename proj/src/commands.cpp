#include <cstdio>
#include <fstream>
#include <ostream>

#include "advirl/error.hpp"
#include "advirl/experiment.hpp"
#include "advirl/fixtures.hpp"

namespace advirl {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

std::string view_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "view_%03zu.png", i);
  return buf;
}

void save_views(const std::vector<Image>& images, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < images.size(); ++i) save_image(images[i], dir / view_name(i));
}

void log_line(const RunOptions& run, const std::string& line) {
  if (run.log) *run.log << line << std::endl;
}

void write_report(const MetricsReport& report, const OutputLayout& layout, const std::string& name) {
  write_text(layout.reports() / (name + ".txt"), report_text(report));
  write_text(layout.reports() / (name + ".csv"), report_csv(report));
}

// Renders and classifies `field`; with reference renders also scores the
// views with the attack reward.
MetricsReport evaluate_field(const RadianceField& field, const CameraRig& rig, const Classifier& model,
                             const AttackConfig& attack, const std::vector<Image>* reference) {
  const std::vector<Image> images = render_rig(field, rig);
  const std::vector<PredictionSet> preds = classify_batch(model, images);
  MetricsReport report = make_report(preds);
  if (reference) report.terms = reward_terms(report.summary, *reference, images, attack);
  return report;
}

FitSummary write_fit_outputs(const PreparedScene& prepared, std::size_t total_views, const OutputLayout& layout) {
  save_snapshot(prepared.field, layout.base_snapshot());
  write_transforms(prepared.kept_rig, layout.kept_transforms());
  FitSummary s;
  s.final_mse = prepared.fit_mse;
  s.kept_views = prepared.kept_views;
  for (std::size_t i = 0, k = 0; i < total_views; ++i) {
    if (k < s.kept_views.size() && s.kept_views[k] == i) {
      ++k;
    } else {
      s.dropped_views.push_back(i);
    }
  }
  auto join = [](const std::vector<std::size_t>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
    return out;
  };
  char mse[64];
  std::snprintf(mse, sizeof mse, "%.17g", s.final_mse);
  write_text(layout.reports() / "fit.txt", "final photometric mse " + std::string(mse) + "\nkept views " +
                                               std::to_string(s.kept_views.size()) + " of " +
                                               std::to_string(total_views) + ": " + join(s.kept_views, ' ') +
                                               "\ndropped views: " + join(s.dropped_views, ' ') + "\n");
  write_text(layout.reports() / "fit.csv", "final_mse,kept,dropped\n" + std::string(mse) + "," +
                                               join(s.kept_views, ' ') + "," + join(s.dropped_views, ' ') + "\n");
  return s;
}

// Shared by attack and demo: trains, then writes every attack artifact.
MetricsReport run_attack(const RadianceField& base, const CameraRig& rig, std::shared_ptr<const Classifier> model,
                         const AttackConfig& attack, const PpoConfig& ppo, const OutputLayout& layout,
                         const RunOptions& run) {
  AdvEnvironment env(base, rig, model, attack);
  log_line(run, "attack: " + std::to_string(ppo.total_timesteps) + " environment steps over " +
                    std::to_string(rig.size()) + " views, " + std::to_string(env.action_size()) + " parameters");
  TrainResult result = train(env, ppo, [&](const StepLog& h) {
    if (!run.log || (h.step + 1) % 100 != 0) return;
    char buf[160];
    std::snprintf(buf, sizeof buf, "step %5ld  reward %9.4f  target %.4f  true %.4f  mse %9.2f  target views %d",
                  h.step + 1, h.terms.reward, h.terms.target_confidence, h.terms.true_confidence, h.terms.mean_mse,
                  h.terms.target_count);
    log_line(run, buf);
  });
  if (result.skipped_updates > 0) {
    log_line(run, "warning: " + std::to_string(result.skipped_updates) + " updates skipped (non-finite loss)");
  }

  const RadianceField adversarial(base.geometry(), result.best_params);
  save_snapshot(base, layout.base_snapshot());
  save_snapshot(adversarial, layout.adversarial_snapshot());
  save_policy(result.policy, layout.policy());
  write_history_csv(result.history, layout.history());
  save_views(render_rig(adversarial, rig), layout.renders());

  MetricsReport report = evaluate_field(adversarial, rig, *model, attack, &env.baseline_images());
  add_trajectory(report, result.history);
  write_report(report, layout, "attack");
  return report;
}

std::filesystem::path output_root(const ExperimentConfig& cfg, const RunOptions& run) {
  if (!run.out.empty()) return run.out;
  if (cfg.paths.output) return *cfg.paths.output;
  fail(ErrorCode::kConfig, "config: no output directory (set paths.output or pass --out)");
}

}  // namespace

void OutputLayout::create() const {
  for (const auto& dir : {root, snapshots(), renders(), reports()}) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  }
}

FitSummary cmd_fit(const ExperimentConfig& cfg, const RunOptions& run) {
  validate_for(cfg, Command::kFit);
  const OutputLayout layout{output_root(cfg, run)};
  layout.create();
  const CameraRig rig = parse_transforms(*cfg.paths.transforms);
  std::vector<Image> images;
  for (const auto& p : input_image_paths(cfg)) images.push_back(load_image(p));
  std::vector<Mask> masks;
  for (const auto& p : input_mask_paths(cfg)) masks.push_back(load_mask(p));
  const auto model = cfg.classifier.build();
  log_line(run, "fit: " + std::to_string(images.size()) + " views, " + std::to_string(cfg.fit.steps) + " steps");
  const PreparedScene prepared =
      prepare_scene(images, masks, rig, *model, cfg.attack.true_label, cfg.geometry, cfg.fit);
  const FitSummary s = write_fit_outputs(prepared, images.size(), layout);
  log_line(run, "fit: final mse " + std::to_string(s.final_mse) + ", kept " + std::to_string(s.kept_views.size()) +
                    " views");
  return s;
}

MetricsReport cmd_attack(const ExperimentConfig& cfg, const RunOptions& run) {
  validate_for(cfg, Command::kAttack);
  const OutputLayout layout{output_root(cfg, run)};
  layout.create();
  const RadianceField base = load_snapshot(*cfg.paths.snapshot);
  const MetricsReport report =
      run_attack(base, cfg.rig.build(), cfg.classifier.build(), cfg.attack, cfg.ppo, layout, run);
  if (run.log) *run.log << report_text(report);
  return report;
}

void cmd_render(const ExperimentConfig& cfg, const std::filesystem::path& snapshot, const RunOptions& run) {
  validate_for(cfg, Command::kRender);
  const OutputLayout layout{output_root(cfg, run)};
  layout.create();
  const RadianceField field = load_snapshot(snapshot);
  const CameraRig rig = cfg.rig.build();
  save_views(render_rig(field, rig), layout.renders());
  log_line(run, "render: wrote " + std::to_string(rig.size()) + " views to " + layout.renders().string());
}

MetricsReport cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& snapshot,
                           const RunOptions& run) {
  validate_for(cfg, Command::kEvaluate);
  const OutputLayout layout{output_root(cfg, run)};
  layout.create();
  const RadianceField field = load_snapshot(snapshot);
  const CameraRig rig = cfg.rig.build();
  const auto model = cfg.classifier.build();
  std::optional<std::vector<Image>> reference;
  if (std::filesystem::exists(layout.base_snapshot())) {
    reference = render_rig(load_snapshot(layout.base_snapshot()), rig);
  }
  MetricsReport report = evaluate_field(field, rig, *model, cfg.attack, reference ? &*reference : nullptr);
  if (std::filesystem::exists(layout.history())) add_trajectory(report, read_history_csv(layout.history()));
  write_report(report, layout, "evaluate");
  if (run.log) *run.log << report_text(report);
  return report;
}

MetricsReport cmd_demo(const ExperimentConfig& cfg, const RunOptions& run) {
  validate_for(cfg, Command::kDemo);
  const OutputLayout layout{output_root(cfg, run)};
  layout.create();

  // Synthetic inputs: the red sphere seen from an orbit, segmented by a chroma key.
  const RadianceField truth = fixture_scene(FixtureKind::kSphere, cfg.geometry);
  const CameraRig rig = orbit_rig(cfg.rig.orbit);
  const std::filesystem::path data = layout.data();
  std::filesystem::create_directories(data / "images");
  std::filesystem::create_directories(data / "masks");
  std::vector<std::string> frame_paths;
  const std::vector<Image> rendered = render_rig(truth, rig);
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    save_image(rendered[i], data / "images" / view_name(i));
    save_mask(chroma_key_mask(rendered[i], cfg.demo.chroma_key, cfg.demo.chroma_threshold),
              data / "masks" / view_name(i));
    frame_paths.push_back("images/" + view_name(i));
  }
  write_transforms(rig, data / "transforms.json", frame_paths);
  log_line(run, "demo: wrote " + std::to_string(rig.size()) + " synthetic views to " + data.string());

  // From here on the demo only sees what is on disk, like cmd_fit.
  ExperimentConfig fit_cfg = cfg;
  fit_cfg.paths.transforms = data / "transforms.json";
  fit_cfg.paths.images.reset();
  fit_cfg.paths.masks = data / "masks";
  std::vector<Image> images;
  for (const auto& p : input_image_paths(fit_cfg)) images.push_back(load_image(p));
  std::vector<Mask> masks;
  for (const auto& p : input_mask_paths(fit_cfg)) masks.push_back(load_mask(p));
  std::shared_ptr<const Classifier> model = cfg.classifier.build();
  const PreparedScene prepared =
      prepare_scene(images, masks, parse_transforms(data / "transforms.json"), *model, cfg.attack.true_label,
                    cfg.geometry, cfg.fit);
  const FitSummary fitted = write_fit_outputs(prepared, images.size(), layout);
  log_line(run, "demo: fit mse " + std::to_string(fitted.final_mse) + ", kept " +
                    std::to_string(fitted.kept_views.size()) + " of " + std::to_string(images.size()) + " views");

  AttackConfig attack = cfg.attack;
  attack.num_views = static_cast<int>(prepared.kept_rig.size());
  const MetricsReport baseline = evaluate_field(prepared.field, prepared.kept_rig, *model, attack, nullptr);
  write_report(baseline, layout, "baseline");
  log_line(run, "demo: baseline " + baseline.count_line(attack.true_label));

  const MetricsReport report = run_attack(prepared.field, prepared.kept_rig, model, attack, cfg.ppo, layout, run);

  // Re-evaluate from the files the attack wrote.
  ExperimentConfig eval_cfg = cfg;
  eval_cfg.attack = attack;
  eval_cfg.rig.transforms = layout.kept_transforms();
  RunOptions quiet = run;
  quiet.log = nullptr;
  quiet.out = layout.root;
  const MetricsReport evaluated = cmd_evaluate(eval_cfg, layout.adversarial_snapshot(), quiet);
  if (report_csv(evaluated) != report_csv(report)) {
    fail(ErrorCode::kNumerical, "demo: evaluation of the saved adversarial snapshot differs from the attack report");
  }
  if (run.log) *run.log << report_text(report);
  return report;
}

}  // namespace advirl
