#include "dgsim/codec.hpp"

#include <bit>
#include <cstring>

namespace dgsim {

namespace {
constexpr std::uint8_t kTagI64 = 1;
constexpr std::uint8_t kTagStr = 2;
}  // namespace

void Writer::u16(std::uint16_t v) {
  u8(static_cast<std::uint8_t>(v >> 8));
  u8(static_cast<std::uint8_t>(v));
}

void Writer::u32(std::uint32_t v) {
  u16(static_cast<std::uint16_t>(v >> 16));
  u16(static_cast<std::uint16_t>(v));
}

void Writer::u64(std::uint64_t v) {
  u32(static_cast<std::uint32_t>(v >> 32));
  u32(static_cast<std::uint32_t>(v));
}

void Writer::f64(double v) {
  static_assert(sizeof(double) == sizeof(std::uint64_t));
  u64(std::bit_cast<std::uint64_t>(v));
}

void Writer::bytes(std::span<const std::uint8_t> v) {
  u32(static_cast<std::uint32_t>(v.size()));
  out_.insert(out_.end(), v.begin(), v.end());
}

void Writer::str(std::string_view v) {
  u32(static_cast<std::uint32_t>(v.size()));
  out_.insert(out_.end(), v.begin(), v.end());
}

void Reader::need(std::size_t n) const {
  if (pos_ + n > in_.size()) {
    throw CodecError("record truncated");
  }
}

std::uint8_t Reader::u8() {
  need(1);
  return in_[pos_++];
}

std::uint16_t Reader::u16() {
  std::uint16_t hi = u8();
  return static_cast<std::uint16_t>(hi << 8 | u8());
}

std::uint32_t Reader::u32() {
  std::uint32_t hi = u16();
  return hi << 16 | u16();
}

std::uint64_t Reader::u64() {
  std::uint64_t hi = u32();
  return hi << 32 | u32();
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

Bytes Reader::bytes() {
  std::uint32_t n = u32();
  need(n);
  Bytes out(in_.begin() + pos_, in_.begin() + pos_ + n);
  pos_ += n;
  return out;
}

std::string Reader::str() {
  std::uint32_t n = u32();
  need(n);
  std::string out(reinterpret_cast<const char*>(in_.data()) + pos_, n);
  pos_ += n;
  return out;
}

Writer recordWriter(std::uint8_t typeTag) {
  Writer w;
  w.u8(kRecordVersion);
  w.u8(typeTag);
  return w;
}

Reader recordReader(std::span<const std::uint8_t> record, std::uint8_t expectedTag) {
  Reader r(record);
  std::uint8_t version = r.u8();
  if (version != kRecordVersion) {
    throw CodecError("unsupported record version " + std::to_string(version));
  }
  std::uint8_t tag = r.u8();
  if (tag != expectedTag) {
    throw CodecError("unexpected record tag " + std::to_string(tag) + ", wanted " +
                     std::to_string(expectedTag));
  }
  return r;
}

std::uint8_t recordTag(std::span<const std::uint8_t> record) {
  Reader r(record);
  r.u8();
  return r.u8();
}

Bytes encodeI64(std::int64_t v) {
  Writer w = recordWriter(kTagI64);
  w.i64(v);
  return w.take();
}

std::int64_t decodeI64(std::span<const std::uint8_t> record) {
  Reader r = recordReader(record, kTagI64);
  return r.i64();
}

Bytes encodeStr(std::string_view v) {
  Writer w = recordWriter(kTagStr);
  w.str(v);
  return w.take();
}

std::string decodeStr(std::span<const std::uint8_t> record) {
  Reader r = recordReader(record, kTagStr);
  return r.str();
}

Bytes toBytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

std::string toString(std::span<const std::uint8_t> b) {
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

}  // namespace dgsim
