#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace advirl {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

// Little-endian binary writer for the snapshot and checkpoint containers.
class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buffer_.insert(buffer_.end(), p, p + n);
  }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void f32(float v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }

  const std::vector<std::uint8_t>& buffer() const { return buffer_; }
  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<std::uint8_t> buffer_;
};

// Bounds-checked reader; running past the end raises ErrorCode::kTruncated.
class ByteReader {
 public:
  ByteReader(std::vector<std::uint8_t> data, std::string source)
      : data_(std::move(data)), source_(std::move(source)) {}

  void bytes(void* out, std::size_t n);
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  float f32() {
    float v;
    bytes(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, sizeof v);
    return v;
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::vector<std::uint8_t> data_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace advirl
