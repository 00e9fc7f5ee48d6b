#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "advirl/classifier.hpp"
#include <Eigen/Geometry>

#include "advirl/fixtures.hpp"
#include "test_util.hpp"

namespace advirl {
namespace {

using testing::code_of;
using testing::random_image;
using testing::TempDir;

std::unique_ptr<Classifier> red_blue(double temperature = 1.0) {
  return histogram_classifier(LabelSpace({"red", "blue"}), {Rgb{1, 0, 0}, Rgb{0, 0, 1}}, temperature);
}

double total_confidence(const PredictionSet& p) {
  double s = 0.0;
  for (const Prediction& x : p.predictions()) s += x.confidence;
  return s;
}

TEST(LabelSpaceTest, Validation) {
  EXPECT_EQ(code_of([] { LabelSpace({"a"}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { LabelSpace({"a", "b", "a"}); }), ErrorCode::kInvalidArgument);
  EXPECT_TRUE(LabelSpace({"a", "b"}).contains("b"));
}

TEST(PredictionSetTest, SortedDescendingWithStableTies) {
  const PredictionSet p({{"a", 0.25}, {"b", 0.5}, {"c", 0.25}});
  EXPECT_EQ(p.top().label, "b");
  EXPECT_EQ(p.predictions()[1].label, "a");
  EXPECT_EQ(p.predictions()[2].label, "c");
  EXPECT_EQ(p.confidence_of("c"), 0.25);
  EXPECT_EQ(p.confidence_of("zzz"), 0.0);
  EXPECT_EQ(code_of([] { PredictionSet(std::vector<Prediction>{}); }), ErrorCode::kInvalidArgument);
}

TEST(HistogramClassifierTest, PrototypeImageWinsAtZeroDistance) {
  const auto model = red_blue();
  const PredictionSet p = model->classify(Image(4, 4, Rgb{1, 0, 0}));
  EXPECT_EQ(p.top().label, "red");
  // softmax(0, -2): distance from red to blue prototype is 2
  EXPECT_NEAR(p.top().confidence, 1.0 / (1.0 + std::exp(-2.0)), 1e-12);
}

TEST(HistogramClassifierTest, PurpleIsUndecided) {
  const PredictionSet p = red_blue()->classify(Image(3, 3, Rgb{0.5, 0, 0.5}));
  EXPECT_NEAR(p.confidence_of("red"), 0.5, 1e-12);
  EXPECT_NEAR(p.confidence_of("blue"), 0.5, 1e-12);
}

TEST(HistogramClassifierTest, NormalizedAndPure) {
  const auto model = histogram_classifier(LabelSpace({"r", "g", "b"}), {Rgb{1, 0, 0}, Rgb{0, 1, 0}, Rgb{0, 0, 1}}, 0.3);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image img = random_image(5, 5, s);
    const PredictionSet a = model->classify(img);
    EXPECT_NEAR(total_confidence(a), 1.0, 1e-6);
    EXPECT_EQ(a, model->classify(img));
  }
}

TEST(HistogramClassifierTest, LabelPermutationEquivariance) {
  const auto fwd = histogram_classifier(LabelSpace({"r", "g", "b"}), {Rgb{1, 0, 0}, Rgb{0, 1, 0}, Rgb{0, 0, 1}}, 0.5);
  const auto rev = histogram_classifier(LabelSpace({"b", "g", "r"}), {Rgb{0, 0, 1}, Rgb{0, 1, 0}, Rgb{1, 0, 0}}, 0.5);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image img = random_image(4, 4, s);
    const PredictionSet a = fwd->classify(img);
    const PredictionSet b = rev->classify(img);
    for (const char* l : {"r", "g", "b"}) EXPECT_NEAR(a.confidence_of(l), b.confidence_of(l), 1e-15);
  }
}

TEST(HistogramClassifierTest, Validation) {
  EXPECT_EQ(code_of([] { histogram_classifier(LabelSpace({"a", "b"}), {Rgb{1, 0, 0}}, 1.0); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([] { histogram_classifier(LabelSpace({"a", "b"}), {Rgb{1, 0, 0}, Rgb{0, 1, 0}}, 0.0); }),
            ErrorCode::kInvalidArgument);
}

TEST(HistogramFeaturesTest, ConstantImageFillsOneBin) {
  const std::vector<double> f = color_histogram_features(Image(2, 2, Rgb{0.9, 0.1, 0.3}), 4);
  ASSERT_EQ(f.size(), 3u * 64u);
  const std::size_t cell = (3 * 4 + 0) * 4 + 1;
  EXPECT_NEAR(f[3 * cell], 0.9, 1e-15);
  EXPECT_NEAR(f[3 * cell + 1], 0.1, 1e-15);
  EXPECT_NEAR(f[3 * cell + 2], 0.3, 1e-15);
  double total = 0.0;
  for (double v : f) total += v;
  EXPECT_NEAR(total, 1.3, 1e-12);
}

LinearWeights zero_weights(std::vector<std::string> labels, int bins = 2) {
  LinearWeights w;
  w.labels = labels;
  w.bins = bins;
  w.weights.assign(labels.size(), std::vector<double>(3 * bins * bins * bins, 0.0));
  w.bias.assign(labels.size(), 0.0);
  return w;
}

TEST(LinearClassifierTest, ZeroWeightsAreUniform) {
  const auto model = linear_classifier(zero_weights({"a", "b", "c", "d"}));
  for (std::uint64_t s = 0; s < 5; ++s) {
    for (const Prediction& p : model->classify(random_image(3, 3, s)).predictions()) {
      EXPECT_NEAR(p.confidence, 0.25, 1e-15);
    }
  }
}

TEST(LinearClassifierTest, MatchesHandComputedSoftmax) {
  LinearWeights w = zero_weights({"dark", "bright"}, 1);
  w.weights[1] = {2.0, 2.0, 2.0};
  w.bias = {0.5, 0.0};
  const auto model = linear_classifier(w);
  const PredictionSet p = model->classify(Image(2, 2, Rgb{0.5, 0.5, 0.5}));
  // bright logit 2 * 1.5 = 3, dark logit 0.5
  EXPECT_NEAR(p.confidence_of("bright"), 1.0 / (1.0 + std::exp(0.5 - 3.0)), 1e-12);
}

TEST(LinearClassifierTest, LabelPermutationEquivariance) {
  LinearWeights w = zero_weights({"x", "y", "z"});
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < w.weights[k].size(); ++j) w.weights[k][j] = std::sin(1.0 + k * 7.0 + j);
  w.bias = {0.1, -0.2, 0.3};
  LinearWeights rev = w;
  std::reverse(rev.labels.begin(), rev.labels.end());
  std::reverse(rev.weights.begin(), rev.weights.end());
  std::reverse(rev.bias.begin(), rev.bias.end());
  const auto a = linear_classifier(w);
  const auto b = linear_classifier(rev);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image img = random_image(4, 4, s);
    for (const char* l : {"x", "y", "z"}) {
      EXPECT_NEAR(a->classify(img).confidence_of(l), b->classify(img).confidence_of(l), 1e-15);
    }
  }
}

TEST(LinearClassifierTest, WeightsFileRoundTrip) {
  TempDir dir;
  LinearWeights w = zero_weights({"p", "q"});
  w.weights[0][3] = 1.25;
  w.bias[1] = -0.5;
  save_linear_weights(w, dir / "w.json");
  const LinearWeights back = load_linear_weights(dir / "w.json");
  EXPECT_EQ(back.labels, w.labels);
  EXPECT_EQ(back.bins, w.bins);
  EXPECT_EQ(back.weights, w.weights);
  EXPECT_EQ(back.bias, w.bias);
  EXPECT_NO_THROW(linear_classifier(LabelSpace({"p", "q"}), dir / "w.json"));
  EXPECT_EQ(code_of([&] { linear_classifier(LabelSpace({"q", "p"}), dir / "w.json"); }), ErrorCode::kConfig);
}

TEST(LinearClassifierTest, WeightsFileErrors) {
  TempDir dir;
  std::ofstream(dir / "missing.json") << R"({"labels": ["a", "b"], "bins": 1, "bias": [0, 0]})";
  EXPECT_EQ(code_of([&] { load_linear_weights(dir / "missing.json"); }), ErrorCode::kMissingField);
  std::ofstream(dir / "shape.json") << R"({"labels": ["a", "b"], "bins": 1, "weights": [[1, 2]], "bias": [0, 0]})";
  EXPECT_THROW(linear_classifier(load_linear_weights(dir / "shape.json")), Error);
  std::ofstream(dir / "broken.json") << "[";
  EXPECT_EQ(code_of([&] { load_linear_weights(dir / "broken.json"); }), ErrorCode::kMalformedFile);
}

TEST(FilterViewsTest, AllNoneAndSome) {
  const auto model = red_blue();
  const std::vector<Image> reds(3, Image(2, 2, Rgb{0.9, 0, 0}));
  EXPECT_EQ(filter_views(*model, reds, "red"), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_TRUE(filter_views(*model, reds, "blue").empty());
}

TEST(FilterViewsTest, CameraFacingAwayIsDropped) {
  FieldGeometry g;
  g.resolution = 12;
  const RadianceField sphere = fixture_scene(FixtureKind::kSphere, g);
  OrbitOptions o;
  o.n_views = 4;
  o.resolution = 16;
  o.focal = 48;
  std::vector<Camera> cams = orbit_rig(o).cameras();
  // Rotate camera 2 by 180 degrees about world z so it looks away.
  Mat4 pose = cams[2].cam_to_world();
  Eigen::Matrix3d turn = Eigen::AngleAxisd(M_PI, Vec3::UnitZ()).toRotationMatrix();
  pose.block<3, 3>(0, 0) = turn * pose.block<3, 3>(0, 0);
  cams[2] = Camera(16, 16, 48, 48, 8, 8, pose);
  // Against a grey background, only views that see the sphere read as red.
  g.background = {0.5, 0.5, 0.5};
  const RadianceField lit(g, sphere.params());
  const auto model = histogram_classifier(LabelSpace({"red", "grey"}), {Rgb{1, 0, 0}, Rgb{0.5, 0.5, 0.5}}, 0.1);
  const auto images = render_rig(lit, CameraRig(cams));
  EXPECT_EQ(filter_views(*model, images, "red"), (std::vector<std::size_t>{0, 1, 3}));
}

}  // namespace
}  // namespace advirl
