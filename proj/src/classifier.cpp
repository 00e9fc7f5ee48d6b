#include "advirl/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>

#include "advirl/error.hpp"

namespace advirl {

namespace {

using nlohmann::json;

PredictionSet softmax_predictions(const LabelSpace& labels, const std::vector<double>& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> e(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(logits[i] - peak);
    total += e[i];
  }
  std::vector<Prediction> preds;
  preds.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) preds.push_back({labels[i], e[i] / total});
  return PredictionSet(std::move(preds));
}

class HistogramClassifier final : public Classifier {
 public:
  HistogramClassifier(LabelSpace labels, std::vector<Rgb> prototypes, double temperature)
      : labels_(std::move(labels)), prototypes_(std::move(prototypes)), temperature_(temperature) {
    require(prototypes_.size() == labels_.size(), ErrorCode::kDimensionMismatch,
            "histogram classifier needs one prototype per label");
    require(temperature_ > 0.0 && std::isfinite(temperature_), ErrorCode::kInvalidArgument,
            "histogram classifier temperature must be positive");
  }

  const LabelSpace& labels() const override { return labels_; }

  PredictionSet classify(const Image& img) const override {
    const Rgb m = img.mean_color();
    std::vector<double> logits(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) d2 += (m[c] - prototypes_[i][c]) * (m[c] - prototypes_[i][c]);
      logits[i] = -d2 / temperature_;
    }
    return softmax_predictions(labels_, logits);
  }

 private:
  LabelSpace labels_;
  std::vector<Rgb> prototypes_;
  double temperature_;
};

class LinearClassifier final : public Classifier {
 public:
  explicit LinearClassifier(LinearWeights w) : labels_(w.labels), w_(std::move(w)) {
    require(w_.bins >= 1, ErrorCode::kInvalidArgument, "linear classifier needs bins >= 1");
    const std::size_t features = 3 * static_cast<std::size_t>(w_.bins) * w_.bins * w_.bins;
    require(w_.weights.size() == labels_.size() && w_.bias.size() == labels_.size(),
            ErrorCode::kDimensionMismatch, "linear classifier needs one weight row and bias per label");
    for (const auto& row : w_.weights) {
      require(row.size() == features, ErrorCode::kDimensionMismatch,
              "linear classifier weight rows must have 3*bins^3 = " + std::to_string(features) + " entries");
    }
  }

  const LabelSpace& labels() const override { return labels_; }

  PredictionSet classify(const Image& img) const override {
    const std::vector<double> f = color_histogram_features(img, w_.bins);
    std::vector<double> logits(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      double z = w_.bias[i];
      for (std::size_t j = 0; j < f.size(); ++j) z += w_.weights[i][j] * f[j];
      logits[i] = z;
    }
    return softmax_predictions(labels_, logits);
  }

 private:
  LabelSpace labels_;
  LinearWeights w_;
};

}  // namespace

PredictionSet::PredictionSet(std::vector<Prediction> predictions) : predictions_(std::move(predictions)) {
  require(!predictions_.empty(), ErrorCode::kInvalidArgument, "prediction set must not be empty");
  for (const Prediction& p : predictions_) {
    require(p.confidence >= 0.0 && p.confidence <= 1.0, ErrorCode::kInvalidArgument,
            "prediction confidence outside [0,1]");
  }
  std::stable_sort(predictions_.begin(), predictions_.end(),
                   [](const Prediction& a, const Prediction& b) { return a.confidence > b.confidence; });
}

double PredictionSet::confidence_of(const std::string& label) const {
  for (const Prediction& p : predictions_) {
    if (p.label == label) return p.confidence;
  }
  return 0.0;
}

LabelSpace::LabelSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  require(labels_.size() >= 2, ErrorCode::kInvalidArgument, "label space needs at least two labels");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  require(seen.size() == labels_.size(), ErrorCode::kInvalidArgument, "label space has duplicate labels");
}

bool LabelSpace::contains(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::vector<PredictionSet> classify_batch(const Classifier& model, const std::vector<Image>& images) {
  std::vector<PredictionSet> out;
  out.reserve(images.size());
  for (const Image& img : images) out.push_back(model.classify(img));
  return out;
}

std::unique_ptr<Classifier> histogram_classifier(LabelSpace labels, std::vector<Rgb> prototypes,
                                                 double temperature) {
  return std::make_unique<HistogramClassifier>(std::move(labels), std::move(prototypes), temperature);
}

std::vector<double> color_histogram_features(const Image& img, int bins) {
  require(bins >= 1, ErrorCode::kInvalidArgument, "histogram needs bins >= 1");
  const auto b = static_cast<std::size_t>(bins);
  std::vector<double> f(3 * b * b * b, 0.0);
  auto bin_of = [bins](double v) { return std::min(static_cast<int>(v * bins), bins - 1); };
  const auto& ch = img.channels();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double r = ch[3 * i], g = ch[3 * i + 1], bl = ch[3 * i + 2];
    const std::size_t cell = (static_cast<std::size_t>(bin_of(r)) * b + bin_of(g)) * b + bin_of(bl);
    f[3 * cell] += r;
    f[3 * cell + 1] += g;
    f[3 * cell + 2] += bl;
  }
  const double n = static_cast<double>(img.pixel_count());
  for (double& v : f) v /= n;
  return f;
}

std::unique_ptr<Classifier> linear_classifier(LinearWeights weights) {
  return std::make_unique<LinearClassifier>(std::move(weights));
}

std::unique_ptr<Classifier> linear_classifier(const LabelSpace& labels, const std::filesystem::path& weights_path) {
  LinearWeights w = load_linear_weights(weights_path);
  if (w.labels != labels.labels()) {
    fail(ErrorCode::kConfig, weights_path.string() + ": weight file labels do not match the configured label space");
  }
  return linear_classifier(std::move(w));
}

LinearWeights load_linear_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
  for (const char* key : {"labels", "bins", "weights", "bias"}) {
    if (!doc.contains(key)) fail(ErrorCode::kMissingField, path.string() + ": missing field '" + key + "'");
  }
  LinearWeights w;
  try {
    w.labels = doc.at("labels").get<std::vector<std::string>>();
    w.bins = doc.at("bins").get<int>();
    w.weights = doc.at("weights").get<std::vector<std::vector<double>>>();
    w.bias = doc.at("bias").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
  LabelSpace check(w.labels);
  LinearClassifier validate(w);
  return w;
}

void save_linear_weights(const LinearWeights& w, const std::filesystem::path& path) {
  json doc{{"labels", w.labels}, {"bins", w.bins}, {"weights", w.weights}, {"bias", w.bias}};
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << doc.dump(2) << "\n";
}

std::vector<std::size_t> filter_views(const Classifier& model, const std::vector<Image>& images,
                                      const std::string& true_label) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (model.classify(images[i]).top().label == true_label) kept.push_back(i);
  }
  return kept;
}

}  // namespace advirl
