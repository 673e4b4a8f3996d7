#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dgsim {

using Bytes = std::vector<std::uint8_t>;

/// Thrown when a record cannot be decoded (truncated input, bad version,
/// unexpected tag).
class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Neutral binary record format shared by grid storage and the wire
/// protocol. Records are versioned and every variable-length field is
/// length-prefixed. All integers are big-endian.
inline constexpr std::uint8_t kRecordVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void boolean(bool v) { u8(v ? 1 : 0); }
  void bytes(std::span<const std::uint8_t> v);
  void str(std::string_view v);

  const Bytes& buffer() const { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  bool boolean() { return u8() != 0; }
  Bytes bytes();
  std::string str();

  bool atEnd() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

/// Starts a record: version byte followed by a caller-chosen type tag.
Writer recordWriter(std::uint8_t typeTag);

/// Opens a record and verifies version and tag.
Reader recordReader(std::span<const std::uint8_t> record, std::uint8_t expectedTag);

/// Reads only the type tag of a record.
std::uint8_t recordTag(std::span<const std::uint8_t> record);

// Convenience encodings used as grid keys and scalar values.
Bytes encodeI64(std::int64_t v);
std::int64_t decodeI64(std::span<const std::uint8_t> record);
Bytes encodeStr(std::string_view v);
std::string decodeStr(std::span<const std::uint8_t> record);

Bytes toBytes(std::string_view s);
std::string toString(std::span<const std::uint8_t> b);

}  // namespace dgsim
