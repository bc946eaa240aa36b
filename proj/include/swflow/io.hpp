#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "swflow/core.hpp"

namespace swflow::io {

/// Little-endian binary writer over a fresh file.
class BinaryWriter {
public:
  explicit BinaryWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw DataError("cannot open for writing: " + path);
  }

  void magic(const char tag[4]) { raw(tag, 4); }

  void u32(std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(buf, 4);
  }

  void u64(std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(buf, 8);
  }

  void u8(std::uint8_t v) { raw(&v, 1); }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void f64_array(const std::vector<double>& values) {
    for (double v : values) f64(v);
  }

  std::uint64_t offset() const { return offset_; }

  /// Rewrites a u32 written earlier (e.g. a count known only at the end).
  void patch_u32(std::uint64_t at, std::uint32_t v) {
    out_.seekp(static_cast<std::streamoff>(at));
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(buf), 4);
    out_.seekp(0, std::ios::end);
    if (!out_) throw DataError("write failed: " + path_);
  }

  void close() {
    out_.close();
    if (!out_) throw DataError("write failed: " + path_);
  }

private:
  void raw(const void* data, std::size_t bytes) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out_) throw DataError("write failed: " + path_);
    offset_ += bytes;
  }

  std::string path_;
  std::ofstream out_;
  std::uint64_t offset_ = 0;
};

/// Little-endian binary reader; failures report the byte offset.
class BinaryReader {
public:
  explicit BinaryReader(const std::string& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot open for reading: " + path);
  }

  void magic(const char tag[4]) {
    char buf[4];
    raw(buf, 4);
    if (std::memcmp(buf, tag, 4) != 0) {
      fail("bad magic, expected '" + std::string(tag, 4) + "'", offset_ - 4);
    }
  }

  std::uint32_t u32() {
    unsigned char buf[4];
    raw(buf, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    unsigned char buf[8];
    raw(buf, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }

  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::vector<double> f64_array(std::size_t count) {
    std::vector<double> values(count);
    for (auto& v : values) v = f64();
    return values;
  }

  void expect_version(std::uint32_t got, std::uint32_t want) {
    if (got != want) {
      fail("unsupported version " + std::to_string(got), offset_ - 4);
    }
  }

  void seek(std::uint64_t offset) {
    in_.seekg(static_cast<std::streamoff>(offset));
    if (!in_) fail("seek failed", offset);
    offset_ = offset;
  }

  std::uint64_t offset() const { return offset_; }

  [[noreturn]] void fail(const std::string& why, std::uint64_t at) const {
    throw DataError(path_ + ": " + why + " at offset " + std::to_string(at));
  }

private:
  void raw(void* data, std::size_t bytes) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in_.gcount()) != bytes) {
      fail("truncated file", offset_);
    }
    offset_ += bytes;
  }

  std::string path_;
  std::ifstream in_;
  std::uint64_t offset_ = 0;
};

}  // namespace swflow::io
