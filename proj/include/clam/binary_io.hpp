#pragma once

#include "clam/numerics.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace clam {

// Little-endian encoder into a growing byte string.
class ByteWriter {
 public:
  void put_bytes(std::string_view bytes) { out_.append(bytes); }
  void put_u32(std::uint32_t v);
  void put_i32(std::int32_t v) { put_u32(static_cast<std::uint32_t>(v)); }
  void put_u64(std::uint64_t v);
  void put_f32(float v);
  void put_f64(double v);
  /// rows u32, cols u32, then row-major f64.
  void put_matrix(const Matrix& m);

  const std::string& bytes() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

// Little-endian decoder. Every failure is a FormatError carrying the offset
// of the field that could not be read.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : in_(bytes) {}

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return in_.size() - pos_; }

  std::string_view get_bytes(std::uint64_t n, std::string_view what);
  std::uint32_t get_u32(std::string_view what);
  std::int32_t get_i32(std::string_view what) { return static_cast<std::int32_t>(get_u32(what)); }
  std::uint64_t get_u64(std::string_view what);
  float get_f32(std::string_view what);
  double get_f64(std::string_view what);
  Matrix get_matrix(std::string_view what);

  void expect_magic(std::string_view magic);
  void expect_end();

 private:
  std::string_view in_;
  std::uint64_t pos_ = 0;
};

std::string read_file(const std::string& path);

/// Writes to `path + ".tmp"` then renames, so a failed write never leaves a
/// partial file at `path`.
void write_file_atomic(const std::string& path, std::string_view bytes);

}  // namespace clam
