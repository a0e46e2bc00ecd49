#include "clam/binary_io.hpp"

#include "clam/error.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace clam {

void ByteWriter::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void ByteWriter::put_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void ByteWriter::put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::put_matrix(const Matrix& m) {
  put_u32(static_cast<std::uint32_t>(m.rows()));
  put_u32(static_cast<std::uint32_t>(m.cols()));
  if constexpr (std::endian::native == std::endian::little) {
    // Row-major storage already is the wire layout.
    out_.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
  } else {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(m(r, c));
    }
  }
}

std::string_view ByteReader::get_bytes(std::uint64_t n, std::string_view what) {
  if (n > remaining()) {
    throw FormatError(pos_, "truncated while reading " + std::string(what) + " (need " + std::to_string(n) +
                                " bytes, have " + std::to_string(remaining()) + ")");
  }
  auto out = in_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint32_t ByteReader::get_u32(std::string_view what) {
  const auto b = get_bytes(4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

std::uint64_t ByteReader::get_u64(std::string_view what) {
  const auto b = get_bytes(8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

float ByteReader::get_f32(std::string_view what) { return std::bit_cast<float>(get_u32(what)); }

double ByteReader::get_f64(std::string_view what) { return std::bit_cast<double>(get_u64(what)); }

Matrix ByteReader::get_matrix(std::string_view what) {
  const std::uint64_t start = pos_;
  const std::uint64_t rows = get_u32(what);
  const std::uint64_t cols = get_u32(what);
  // rows, cols < 2^32 so the product cannot overflow 64 bits.
  const std::uint64_t count = rows * cols;
  if (count > remaining() / 8) {
    throw FormatError(start, std::string(what) + " declares " + std::to_string(rows) + "x" + std::to_string(cols) +
                                 " entries but only " + std::to_string(remaining()) + " bytes remain");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if constexpr (std::endian::native == std::endian::little) {
    const auto bytes = get_bytes(count * sizeof(double), what);
    if (count != 0) std::memcpy(m.data(), bytes.data(), bytes.size());
  } else {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get_f64(what);
    }
  }
  return m;
}

void ByteReader::expect_magic(std::string_view magic) {
  const std::uint64_t start = pos_;
  if (remaining() < magic.size() || in_.substr(pos_, magic.size()) != magic) {
    throw FormatError(start, "bad magic, expected \"" + std::string(magic.data(), std::strlen(magic.data())) + "\"");
  }
  pos_ += magic.size();
}

void ByteReader::expect_end() {
  if (remaining() != 0) throw FormatError(pos_, std::to_string(remaining()) + " trailing bytes");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot move '" + tmp + "' to '" + path + "'");
  }
}

}  // namespace clam
