#include "advirl/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "advirl/error.hpp"

namespace advirl {

namespace {

void check_channel(double v) {
  require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorCode::kInvalidArgument,
          "image channel value outside [0,1]");
}

std::string dims(int w, int h) {
  std::ostringstream os;
  os << w << "x" << h;
  return os.str();
}

void require_same_size(int aw, int ah, int bw, int bh, const char* what) {
  if (aw != bw || ah != bh) {
    fail(ErrorCode::kDimensionMismatch,
         std::string(what) + ": dimension mismatch " + dims(aw, ah) + " vs " + dims(bw, bh));
  }
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kOutOfBounds: return "out of bounds";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kMalformedFile: return "malformed file";
    case ErrorCode::kUnsupportedFormat: return "unsupported format";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kTruncated: return "truncated file";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kMissingField: return "missing field";
    case ErrorCode::kNonInvertible: return "non-invertible matrix";
    case ErrorCode::kInconsistentResolution: return "inconsistent resolution";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kNumerical: return "numerical failure";
    case ErrorCode::kNoViews: return "no usable views";
  }
  return "unknown";
}

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  require(width > 0 && height > 0, ErrorCode::kInvalidArgument, "image dimensions must be positive");
  for (double v : fill) check_channel(v);
  data_.resize(pixel_count() * 3);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    data_[3 * i] = fill[0];
    data_[3 * i + 1] = fill[1];
    data_[3 * i + 2] = fill[2];
  }
}

Image::Image(int width, int height, std::vector<double> channels)
    : width_(width), height_(height), data_(std::move(channels)) {
  require(width > 0 && height > 0, ErrorCode::kInvalidArgument, "image dimensions must be positive");
  require(data_.size() == pixel_count() * 3, ErrorCode::kDimensionMismatch,
          "channel buffer length does not match " + dims(width, height));
  for (double v : data_) check_channel(v);
}

Rgb Image::at(int x, int y) const {
  const std::size_t o = offset(x, y);
  return {data_[o], data_[o + 1], data_[o + 2]};
}

void Image::set(int x, int y, const Rgb& color) {
  const std::size_t o = offset(x, y);
  for (int c = 0; c < 3; ++c) {
    check_channel(color[c]);
    data_[o + c] = color[c];
  }
}

Rgb Image::mean_color() const {
  Rgb sum{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) sum[c] += data_[3 * i + c];
  }
  const double n = static_cast<double>(pixel_count());
  return {sum[0] / n, sum[1] / n, sum[2] / n};
}

Mask::Mask(int width, int height, bool fill)
    : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, fill) {
  require(width > 0 && height > 0, ErrorCode::kInvalidArgument, "mask dimensions must be positive");
}

Mask::Mask(int width, int height, std::vector<bool> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  require(width > 0 && height > 0, ErrorCode::kInvalidArgument, "mask dimensions must be positive");
  require(bits_.size() == static_cast<std::size_t>(width) * height, ErrorCode::kDimensionMismatch,
          "mask bit count does not match " + dims(width, height));
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

double mse(const Image& a, const Image& b) {
  require_same_size(a.width(), a.height(), b.width(), b.height(), "mse");
  const auto& x = a.channels();
  const auto& y = b.channels();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = 255.0 * x[i] - 255.0 * y[i];
    sum += d * d;
  }
  return sum / static_cast<double>(x.size());
}

Image apply_mask(const Image& img, const Mask& mask, const Rgb& background) {
  require_same_size(img.width(), img.height(), mask.width(), mask.height(), "apply_mask");
  Image out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!mask.at(x, y)) out.set(x, y, background);
    }
  }
  return out;
}

Image downsample(const Image& img, int factor) {
  require(factor > 0, ErrorCode::kInvalidArgument, "downsample factor must be positive");
  if (img.width() % factor != 0 || img.height() % factor != 0) {
    fail(ErrorCode::kDimensionMismatch, "downsample: " + dims(img.width(), img.height()) +
                                            " not divisible by factor " + std::to_string(factor));
  }
  if (factor == 1) return img;
  const int w = img.width() / factor;
  const int h = img.height() / factor;
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  std::vector<double> out(static_cast<std::size_t>(w) * h * 3, 0.0);
  const auto& src = img.channels();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (int dy = 0; dy < factor; ++dy) {
        const std::size_t row = static_cast<std::size_t>(y * factor + dy) * img.width();
        for (int dx = 0; dx < factor; ++dx) {
          const std::size_t o = (row + x * factor + dx) * 3;
          acc[0] += src[o];
          acc[1] += src[o + 1];
          acc[2] += src[o + 2];
        }
      }
      const std::size_t o = (static_cast<std::size_t>(y) * w + x) * 3;
      for (int c = 0; c < 3; ++c) out[o + c] = std::clamp(acc[c] * inv, 0.0, 1.0);
    }
  }
  return Image(w, h, std::move(out));
}

Mask chroma_key_mask(const Image& img, const Rgb& key, double threshold) {
  Mask m(img.width(), img.height(), false);
  const double t2 = threshold * threshold;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Rgb p = img.at(x, y);
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) d2 += (p[c] - key[c]) * (p[c] - key[c]);
      m.set(x, y, d2 > t2);
    }
  }
  return m;
}

}  // namespace advirl
