#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "advirl/error.hpp"
#include "advirl/experiment.hpp"

namespace advirl {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& message) { fail(ErrorCode::kConfig, "config: " + message); }

// Strict view of one JSON object: every key must be consumed before finish().
class Section {
 public:
  Section(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) config_error(name() + " must be an object");
  }

  bool has(const char* key) const { return obj_.contains(key); }

  template <typename T>
  void read(const char* key, T& out) {
    if (!obj_.contains(key)) return;
    seen_.insert(key);
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      config_error(path(key) + " has the wrong type");
    }
  }

  void read_path(const char* key, std::optional<std::filesystem::path>& out, const std::filesystem::path& base) {
    std::string text;
    if (!obj_.contains(key)) return;
    read(key, text);
    out = resolve(text, base);
  }

  void read_rgb(const char* key, Rgb& out) {
    if (!obj_.contains(key)) return;
    std::vector<double> v;
    read(key, v);
    if (v.size() != 3) config_error(path(key) + " must have 3 entries");
    out = {v[0], v[1], v[2]};
  }

  void read_vec3(const char* key, Vec3& out) {
    Rgb tmp{out[0], out[1], out[2]};
    read_rgb(key, tmp);
    out = Vec3(tmp[0], tmp[1], tmp[2]);
  }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(obj_.at(key), path(key));
  }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) config_error("unknown key '" + path(item.key()) + "'");
    }
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  static std::filesystem::path resolve(const std::string& text, const std::filesystem::path& base) {
    const std::filesystem::path p(text);
    return p.is_absolute() || base.empty() ? p : base / p;
  }

 private:
  std::string name() const { return where_.empty() ? "top level" : "'" + where_ + "'"; }

  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_paths(Section s, ExperimentPaths& p, const std::filesystem::path& base) {
  s.read_path("images", p.images, base);
  s.read_path("masks", p.masks, base);
  s.read_path("transforms", p.transforms, base);
  s.read_path("snapshot", p.snapshot, base);
  s.read_path("output", p.output, base);
  s.finish();
}

void read_field(Section s, FieldGeometry& g) {
  s.read("resolution", g.resolution);
  s.read("samples_per_ray", g.samples_per_ray);
  s.read_vec3("aabb_min", g.aabb_min);
  s.read_vec3("aabb_max", g.aabb_max);
  s.read_rgb("background", g.background);
  s.finish();
}

void read_fit(Section s, FitOptions& f) {
  s.read("steps", f.steps);
  s.read("learning_rate", f.learning_rate);
  s.read("init_density_logit", f.init_density_logit);
  s.read("init_noise", f.init_noise);
  s.finish();
}

void read_classifier(Section s, ClassifierSettings& c, const std::filesystem::path& base) {
  std::string kind = c.kind == ClassifierSettings::Kind::kHistogram ? "histogram" : "linear";
  s.read("kind", kind);
  if (kind == "histogram") {
    c.kind = ClassifierSettings::Kind::kHistogram;
  } else if (kind == "linear") {
    c.kind = ClassifierSettings::Kind::kLinear;
  } else {
    config_error(s.path("kind") + " must be \"histogram\" or \"linear\", got \"" + kind + "\"");
  }
  s.read("labels", c.labels);
  if (s.has("prototypes")) {
    std::vector<std::vector<double>> rows;
    s.read("prototypes", rows);
    c.prototypes.clear();
    for (const auto& r : rows) {
      if (r.size() != 3) config_error(s.path("prototypes") + " entries must be [r, g, b]");
      c.prototypes.push_back({r[0], r[1], r[2]});
    }
  }
  s.read("temperature", c.temperature);
  std::optional<std::filesystem::path> weights;
  s.read_path("weights", weights, base);
  if (weights) c.weights = *weights;
  s.finish();
}

void read_rig(Section s, RigSettings& r, const std::filesystem::path& base) {
  s.read_path("transforms", r.transforms, base);
  s.read("n_views", r.orbit.n_views);
  s.read("radius", r.orbit.radius);
  s.read("elevation", r.orbit.elevation);
  s.read_vec3("target", r.orbit.target);
  s.read("resolution", r.orbit.resolution);
  s.read("focal", r.orbit.focal);
  s.finish();
}

void read_attack(Section s, AttackConfig& a) {
  std::string mode = a.mode == AttackMode::kTargeted ? "targeted" : "untargeted";
  s.read("mode", mode);
  if (mode == "targeted") {
    a.mode = AttackMode::kTargeted;
  } else if (mode == "untargeted") {
    a.mode = AttackMode::kUntargeted;
    a.target_label.reset();
  } else {
    config_error(s.path("mode") + " must be \"targeted\" or \"untargeted\", got \"" + mode + "\"");
  }
  s.read("true_label", a.true_label);
  if (s.has("target_label")) {
    std::string t;
    s.read("target_label", t);
    a.target_label = t;
  }
  s.read("theta0", a.theta0);
  s.read("theta1", a.theta1);
  s.read("theta2", a.theta2);
  s.read("theta3", a.theta3);
  s.read("num_views", a.num_views);
  s.read("action_bound", a.action_bound);
  s.read("episode_length", a.episode_length);
  s.read("observation_downsample", a.observation_downsample);
  s.finish();
}

void read_ppo(Section s, PpoConfig& p) {
  s.read("n_steps", p.n_steps);
  s.read("batch_size", p.batch_size);
  s.read("max_grad_norm", p.max_grad_norm);
  s.read("clip_epsilon", p.clip_epsilon);
  s.read("gamma", p.gamma);
  s.read("gae_lambda", p.gae_lambda);
  s.read("learning_rate", p.learning_rate);
  s.read("update_epochs", p.update_epochs);
  s.read("entropy_coeff", p.entropy_coeff);
  s.read("value_coeff", p.value_coeff);
  s.read("total_timesteps", p.total_timesteps);
  s.read("hidden_size", p.hidden_size);
  s.read("init_log_std", p.init_log_std);
  s.finish();
}

void read_demo(Section s, DemoOptions& d) {
  s.read_rgb("chroma_key", d.chroma_key);
  s.read("chroma_threshold", d.chroma_threshold);
  s.finish();
}

void require_path(const std::optional<std::filesystem::path>& p, const char* key, bool directory) {
  if (!p) config_error(std::string(key) + " is required for this command");
  std::error_code ec;
  const bool ok = directory ? std::filesystem::is_directory(*p, ec) : std::filesystem::is_regular_file(*p, ec);
  if (!ok) {
    config_error(std::string(key) + " '" + p->string() + "' does not exist" + (directory ? " or is not a directory" : ""));
  }
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

std::unique_ptr<Classifier> ClassifierSettings::build() const {
  if (kind == Kind::kLinear) {
    LinearWeights w = load_linear_weights(weights);
    if (!labels.empty() && labels != w.labels) {
      fail(ErrorCode::kConfig, "config: classifier.labels do not match the labels in " + weights.string());
    }
    return linear_classifier(std::move(w));
  }
  return histogram_classifier(LabelSpace(labels), prototypes, temperature);
}

CameraRig RigSettings::build() const { return transforms ? parse_transforms(*transforms) : orbit_rig(orbit); }

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  fit.seed = s;
  ppo.seed = s;
}

ExperimentConfig demo_config() {
  ExperimentConfig cfg;
  cfg.geometry.resolution = 16;
  cfg.geometry.samples_per_ray = 32;
  cfg.rig.orbit.n_views = 8;
  cfg.rig.orbit.resolution = 64;
  cfg.rig.orbit.focal = 80.0;
  cfg.classifier.kind = ClassifierSettings::Kind::kHistogram;
  cfg.classifier.labels = {"red", "blue"};
  cfg.classifier.prototypes = {{1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}};
  cfg.classifier.temperature = 0.05;
  cfg.fit.steps = 300;
  cfg.attack.mode = AttackMode::kTargeted;
  cfg.attack.true_label = "red";
  cfg.attack.target_label = "blue";
  cfg.attack.num_views = 8;
  cfg.attack.action_bound = 5.0;
  cfg.attack.episode_length = 1;
  cfg.ppo.total_timesteps = 2000;
  cfg.ppo.learning_rate = 1e6;
  cfg.ppo.init_log_std = std::log(0.1);
  cfg.set_seed(0);
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir,
                                         ExperimentConfig cfg) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error("invalid JSON: " + one_line(e.what()));
  }
  Section top(doc, "");
  if (top.has("seed")) {
    std::uint64_t seed = 0;
    top.read("seed", seed);
    cfg.set_seed(seed);
  }
  if (top.has("paths")) read_paths(top.child("paths"), cfg.paths, base_dir);
  if (top.has("field")) read_field(top.child("field"), cfg.geometry);
  if (top.has("fit")) read_fit(top.child("fit"), cfg.fit);
  if (top.has("classifier")) read_classifier(top.child("classifier"), cfg.classifier, base_dir);
  if (top.has("rig")) read_rig(top.child("rig"), cfg.rig, base_dir);
  if (top.has("attack")) read_attack(top.child("attack"), cfg.attack);
  if (top.has("ppo")) read_ppo(top.child("ppo"), cfg.ppo);
  if (top.has("demo")) read_demo(top.child("demo"), cfg.demo);
  top.finish();
  // The seed section decides the fit and PPO seeds.
  cfg.fit.seed = cfg.seed;
  cfg.ppo.seed = cfg.seed;
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, ExperimentConfig defaults) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path(), std::move(defaults));
}

std::vector<std::filesystem::path> input_image_paths(const ExperimentConfig& cfg) {
  if (!cfg.paths.transforms) config_error("paths.transforms is required");
  const std::filesystem::path& transforms = *cfg.paths.transforms;
  std::vector<std::filesystem::path> out;
  for (const std::string& fp : transforms_frame_paths(transforms)) {
    const std::filesystem::path frame(fp);
    out.push_back(cfg.paths.images ? *cfg.paths.images / frame.filename() : transforms.parent_path() / frame);
  }
  return out;
}

std::vector<std::filesystem::path> input_mask_paths(const ExperimentConfig& cfg) {
  std::vector<std::filesystem::path> out;
  if (!cfg.paths.masks) return out;
  for (const auto& img : input_image_paths(cfg)) {
    out.push_back(*cfg.paths.masks / (img.stem().string() + ".png"));
  }
  return out;
}

void validate_for(const ExperimentConfig& cfg, Command command) {
  // Wrap library validation so every failure reads as a config problem.
  auto check = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kConfig) throw;
      config_error(one_line(e.what()));
    }
  };
  check([&] { cfg.geometry.validate(); });
  check([&] { cfg.ppo.validate(); });
  if (command != Command::kRender) check([&] { cfg.attack.validate(); });
  if (cfg.fit.steps < 0) config_error("fit.steps must be >= 0");

  switch (command) {
    case Command::kFit:
      require_path(cfg.paths.transforms, "paths.transforms", false);
      if (cfg.paths.images) require_path(cfg.paths.images, "paths.images", true);
      if (cfg.paths.masks) require_path(cfg.paths.masks, "paths.masks", true);
      check([&] {
        for (const auto& p : input_image_paths(cfg)) require_path(p, "input image", false);
        for (const auto& p : input_mask_paths(cfg)) require_path(p, "mask", false);
      });
      break;
    case Command::kAttack:
    case Command::kRender:
    case Command::kEvaluate:
      if (cfg.paths.snapshot) require_path(cfg.paths.snapshot, "paths.snapshot", false);
      if (cfg.rig.transforms) require_path(cfg.rig.transforms, "rig.transforms", false);
      break;
    case Command::kDemo:
      break;
  }
  if (command == Command::kAttack) require_path(cfg.paths.snapshot, "paths.snapshot", false);

  if (cfg.classifier.kind == ClassifierSettings::Kind::kLinear) {
    require_path(std::optional(cfg.classifier.weights), "classifier.weights", false);
  } else {
    if (cfg.classifier.labels.empty()) config_error("classifier.labels must not be empty");
    if (cfg.classifier.prototypes.size() != cfg.classifier.labels.size()) {
      config_error("classifier.prototypes needs one [r, g, b] entry per label (" +
                   std::to_string(cfg.classifier.labels.size()) + " labels, " +
                   std::to_string(cfg.classifier.prototypes.size()) + " prototypes)");
    }
  }
  std::unique_ptr<Classifier> model;
  check([&] { model = cfg.classifier.build(); });
  const LabelSpace& labels = model->labels();
  if (command != Command::kRender) {
    if (!labels.contains(cfg.attack.true_label)) {
      config_error("attack.true_label '" + cfg.attack.true_label + "' is not one of the classifier labels");
    }
    if (cfg.attack.target_label && !labels.contains(*cfg.attack.target_label)) {
      config_error("attack.target_label '" + *cfg.attack.target_label + "' is not one of the classifier labels");
    }
  }

  if (command == Command::kAttack || command == Command::kEvaluate || command == Command::kDemo) {
    std::size_t views = 0;
    check([&] { views = cfg.rig.build().size(); });
    if (command != Command::kDemo && static_cast<std::size_t>(cfg.attack.num_views) != views) {
      config_error("attack.num_views is " + std::to_string(cfg.attack.num_views) + " but the rig has " +
                   std::to_string(views) + " views");
    }
  }
}

}  // namespace advirl
