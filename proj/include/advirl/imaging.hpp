#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace advirl {

using Rgb = std::array<double, 3>;

// Row-major RGB image with channels stored as reals in [0,1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {0.0, 0.0, 0.0});
  // Takes ownership of width*height*3 interleaved channel values.
  Image(int width, int height, std::vector<double> channels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool same_size(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  Rgb at(int x, int y) const;
  void set(int x, int y, const Rgb& color);

  // Interleaved r,g,b channel values, length width*height*3.
  const std::vector<double>& channels() const { return data_; }

  Rgb mean_color() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Per-pixel foreground indicator. The optional label holds the class name a
// segmenter predicted for the masked object.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, bool fill = true);
  Mask(int width, int height, std::vector<bool> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, bool value) { bits_[static_cast<std::size_t>(y) * width_ + x] = value; }
  std::size_t count() const;

  const std::optional<std::string>& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<bool> bits_;
  std::optional<std::string> label_;
};

// Mean squared difference over every channel entry, measured on the 8-bit
// [0,255] scale.
double mse(const Image& a, const Image& b);

Image apply_mask(const Image& img, const Mask& mask, const Rgb& background);

// Box-filter reduction: each output pixel is the mean of a factor x factor block.
Image downsample(const Image& img, int factor);

// Foreground wherever the pixel's distance from `key` exceeds `threshold`
// (Euclidean, unit-scale RGB).
Mask chroma_key_mask(const Image& img, const Rgb& key, double threshold);

// Lossless raster I/O. Format is picked from the extension: .png or .ppm.
Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path);

// Pixels with 8-bit luminance > 127 are foreground.
Mask load_mask(const std::filesystem::path& path);
void save_mask(const Mask& mask, const std::filesystem::path& path);

}  // namespace advirl
