#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "glckpt/common.hpp"

// Little-endian byte codec shared by the log and checkpoint-image formats.
// Readers are bounds-checked and throw a caller-chosen error code on underrun,
// because "ran off the end" means TruncatedLog in one format and ImageCorrupt
// in the other.

namespace glckpt::wire {

class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { le(v, 2); }
  void u32(uint32_t v) { le(v, 4); }
  void u64(uint64_t v) { le(v, 8); }
  void i32(int32_t v) { le(static_cast<uint32_t>(v), 4); }
  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void bytes(const uint8_t* data, size_t len) { buf_.insert(buf_.end(), data, data + len); }
  void bytes(const std::vector<uint8_t>& data) { bytes(data.data(), data.size()); }
  void literal(const char* s) { bytes(reinterpret_cast<const uint8_t*>(s), std::strlen(s)); }
  void str(const std::string& s) { bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size()); }

  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }
  size_t size() const { return buf_.size(); }

  // Patches a u64 written earlier (section tables record offsets after the fact).
  void patch_u64(size_t pos, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_[pos + i] = static_cast<uint8_t>(v >> (8 * i));
  }

 private:
  void le(uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }

  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t len, Errc underrun)
      : data_(data), len_(len), underrun_(underrun) {}
  ByteReader(const std::vector<uint8_t>& data, Errc underrun)
      : ByteReader(data.data(), data.size(), underrun) {}

  uint8_t u8() { return static_cast<uint8_t>(le(1)); }
  uint16_t u16() { return static_cast<uint16_t>(le(2)); }
  uint32_t u32() { return static_cast<uint32_t>(le(4)); }
  uint64_t u64() { return le(8); }
  int32_t i32() { return static_cast<int32_t>(u32()); }
  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::vector<uint8_t> bytes(size_t n) {
    need(n);
    std::vector<uint8_t> out(data_ + pos_, data_ + pos_ + n);
    pos_ += n;
    return out;
  }
  std::string str(size_t n) {
    need(n);
    std::string out(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return out;
  }

  size_t pos() const { return pos_; }
  size_t remaining() const { return len_ - pos_; }
  bool done() const { return pos_ == len_; }
  void seek(size_t pos) {
    if (pos > len_) throw Error(underrun_, "seek past end");
    pos_ = pos;
  }

 private:
  void need(size_t n) {
    if (len_ - pos_ < n) throw Error(underrun_, "unexpected end of data");
  }
  uint64_t le(int n) {
    need(n);
    uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  const uint8_t* data_;
  size_t len_;
  size_t pos_ = 0;
  Errc underrun_;
};

}  // namespace glckpt::wire
