#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "advirl/imaging.hpp"

namespace advirl {

struct Prediction {
  std::string label;
  double confidence = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// One image's predictions over the whole label space, sorted by descending
// confidence (ties keep label-space order). Entry 0 is the top-1 prediction.
class PredictionSet {
 public:
  explicit PredictionSet(std::vector<Prediction> predictions);

  const Prediction& top() const { return predictions_.front(); }
  const std::vector<Prediction>& predictions() const { return predictions_; }
  std::size_t size() const { return predictions_.size(); }
  // Confidence assigned to `label`, or 0 when the label is not present.
  double confidence_of(const std::string& label) const;

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;

 private:
  std::vector<Prediction> predictions_;
};

class LabelSpace {
 public:
  explicit LabelSpace(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<std::string>& labels() const { return labels_; }
  bool contains(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
};

// The victim model as seen by the attack: images in, labelled confidences out.
// Implementations are immutable after construction.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual const LabelSpace& labels() const = 0;
  virtual PredictionSet classify(const Image& img) const = 0;
};

std::vector<PredictionSet> classify_batch(const Classifier& model, const std::vector<Image>& images);

// Softmax over -||mean_color(img) - prototype||^2 / temperature.
std::unique_ptr<Classifier> histogram_classifier(LabelSpace labels, std::vector<Rgb> prototypes,
                                                 double temperature);

// Softmax over W * features + b. Features: for each of the bins^3 joint
// color bins, the summed r, g, b values of the pixels falling in that bin,
// divided by the pixel count (3 * bins^3 entries).
struct LinearWeights {
  std::vector<std::string> labels;
  int bins = 4;
  std::vector<std::vector<double>> weights;
  std::vector<double> bias;
};

std::vector<double> color_histogram_features(const Image& img, int bins);
std::unique_ptr<Classifier> linear_classifier(LinearWeights weights);
std::unique_ptr<Classifier> linear_classifier(const LabelSpace& labels, const std::filesystem::path& weights_path);
LinearWeights load_linear_weights(const std::filesystem::path& path);
void save_linear_weights(const LinearWeights& weights, const std::filesystem::path& path);

// Indices of images whose top-1 label equals true_label.
std::vector<std::size_t> filter_views(const Classifier& model, const std::vector<Image>& images,
                                      const std::string& true_label);

}  // namespace advirl
