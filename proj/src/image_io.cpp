#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "advirl/error.hpp"
#include "advirl/imaging.hpp"

namespace advirl {

namespace {

enum class RasterFormat { kPng, kPpm };

RasterFormat format_for(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return RasterFormat::kPng;
  if (ext == ".ppm") return RasterFormat::kPpm;
  fail(ErrorCode::kUnsupportedFormat, "unsupported image extension '" + ext + "' for " + path.string());
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// 8-bit interleaved RGB bytes plus dimensions; the common currency between
// the two codecs.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

Raster read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(ErrorCode::kIo, "cannot open " + path.string());

  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    fail(ErrorCode::kMalformedFile, path.string() + " is not a PNG file");
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kIo, "libpng initialisation failed");
  }

  Raster raster;
  std::vector<png_bytep> rows;
  std::string problem;
  volatile ErrorCode problem_code = ErrorCode::kMalformedFile;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kMalformedFile, "corrupt PNG data in " + path.string());
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
  } else if (bit_depth != 8) {
    problem = "unsupported PNG bit depth " + std::to_string(bit_depth) + " in " + path.string();
    problem_code = ErrorCode::kUnsupportedFormat;
  }
  if (problem.empty()) {
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    if (png_get_rowbytes(png, info) != static_cast<png_size_t>(width) * 3) {
      problem = "unexpected PNG pixel layout in " + path.string();
      problem_code = ErrorCode::kUnsupportedFormat;
    }
  }
  if (!problem.empty()) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(problem_code, problem);
  }

  raster.width = static_cast<int>(width);
  raster.height = static_cast<int>(height);
  raster.rgb.resize(static_cast<std::size_t>(width) * height * 3);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) {
    rows[y] = raster.rgb.data() + static_cast<std::size_t>(y) * width * 3;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return raster;
}

void write_png(const Raster& raster, const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, "libpng initialisation failed");
  }
  std::vector<png_bytep> rows(raster.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, "failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, raster.width, raster.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < raster.height; ++y) {
    rows[y] = const_cast<png_bytep>(raster.rgb.data() + static_cast<std::size_t>(y) * raster.width * 3);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Reads the next whitespace-delimited PPM header token, skipping comments.
std::string next_token(std::istream& in) {
  std::string token;
  while (in) {
    int c = in.get();
    if (c == EOF) break;
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

int parse_header_int(const std::string& token, const std::filesystem::path& path) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), ::isdigit) || token.size() > 9) {
    fail(ErrorCode::kMalformedFile, "malformed PPM header in " + path.string());
  }
  return std::stoi(token);
}

Raster read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  if (next_token(in) != "P6") fail(ErrorCode::kMalformedFile, path.string() + " is not a binary PPM (P6)");
  Raster raster;
  raster.width = parse_header_int(next_token(in), path);
  raster.height = parse_header_int(next_token(in), path);
  const int maxval = parse_header_int(next_token(in), path);
  if (raster.width <= 0 || raster.height <= 0) {
    fail(ErrorCode::kMalformedFile, "PPM with empty dimensions: " + path.string());
  }
  if (maxval != 255) {
    fail(ErrorCode::kUnsupportedFormat,
         "unsupported PPM maxval " + std::to_string(maxval) + " in " + path.string());
  }
  raster.rgb.resize(static_cast<std::size_t>(raster.width) * raster.height * 3);
  in.read(reinterpret_cast<char*>(raster.rgb.data()), static_cast<std::streamsize>(raster.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(raster.rgb.size())) {
    fail(ErrorCode::kTruncated, "PPM pixel data truncated in " + path.string());
  }
  return raster;
}

void write_ppm(const Raster& raster, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << "P6\n" << raster.width << " " << raster.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(raster.rgb.data()), static_cast<std::streamsize>(raster.rgb.size()));
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

Raster read_raster(const std::filesystem::path& path) {
  const RasterFormat fmt = format_for(path);
  if (!std::filesystem::exists(path)) fail(ErrorCode::kIo, "no such file: " + path.string());
  return fmt == RasterFormat::kPng ? read_png(path) : read_ppm(path);
}

void write_raster(const Raster& raster, const std::filesystem::path& path) {
  if (format_for(path) == RasterFormat::kPng) {
    write_png(raster, path);
  } else {
    write_ppm(raster, path);
  }
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const Raster raster = read_raster(path);
  std::vector<double> channels(raster.rgb.size());
  std::transform(raster.rgb.begin(), raster.rgb.end(), channels.begin(),
                 [](std::uint8_t v) { return v / 255.0; });
  return Image(raster.width, raster.height, std::move(channels));
}

void save_image(const Image& img, const std::filesystem::path& path) {
  Raster raster{img.width(), img.height(), {}};
  raster.rgb.resize(img.channels().size());
  std::transform(img.channels().begin(), img.channels().end(), raster.rgb.begin(), quantize);
  write_raster(raster, path);
}

Mask load_mask(const std::filesystem::path& path) {
  const Raster raster = read_raster(path);
  std::vector<bool> bits(static_cast<std::size_t>(raster.width) * raster.height);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double luma = 0.299 * raster.rgb[3 * i] + 0.587 * raster.rgb[3 * i + 1] +
                        0.114 * raster.rgb[3 * i + 2];
    bits[i] = luma > 127.0;
  }
  return Mask(raster.width, raster.height, std::move(bits));
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
  Raster raster{mask.width(), mask.height(), {}};
  raster.rgb.resize(static_cast<std::size_t>(mask.width()) * mask.height() * 3);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const std::uint8_t v = mask.at(x, y) ? 255 : 0;
      const std::size_t o = (static_cast<std::size_t>(y) * mask.width() + x) * 3;
      raster.rgb[o] = raster.rgb[o + 1] = raster.rgb[o + 2] = v;
    }
  }
  write_raster(raster, path);
}

}  // namespace advirl
