#include "advirl/serialization.hpp"

#include <fstream>
#include <iterator>

#include "advirl/error.hpp"

namespace advirl {

void ByteWriter::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

void ByteReader::bytes(void* out, std::size_t n) {
  if (remaining() < n) fail(ErrorCode::kTruncated, source_ + ": unexpected end of file");
  std::memcpy(out, data_.data() + pos_, n);
  pos_ += n;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace advirl
