#include "dgsim/codec.hpp"

#include <random>

#include "doctest.h"

using namespace dgsim;

TEST_CASE("scalar round trips") {
  Writer w;
  w.u8(0xAB);
  w.u16(0xBEEF);
  w.u32(0xDEADBEEF);
  w.u64(0x0123456789ABCDEFULL);
  w.i64(-42);
  w.f64(3.14159);
  w.boolean(true);
  w.str("hello");
  w.bytes(Bytes{1, 2, 3});

  Reader r(w.buffer());
  CHECK(r.u8() == 0xAB);
  CHECK(r.u16() == 0xBEEF);
  CHECK(r.u32() == 0xDEADBEEF);
  CHECK(r.u64() == 0x0123456789ABCDEFULL);
  CHECK(r.i64() == -42);
  CHECK(r.f64() == doctest::Approx(3.14159));
  CHECK(r.boolean());
  CHECK(r.str() == "hello");
  CHECK(r.bytes() == Bytes{1, 2, 3});
  CHECK(r.atEnd());
}

TEST_CASE("integers are encoded big-endian") {
  Writer w;
  w.u32(0x01020304);
  CHECK(w.buffer() == Bytes{1, 2, 3, 4});
}

TEST_CASE("record header carries version and tag") {
  Writer w = recordWriter(7);
  w.u32(99);
  Bytes rec = w.take();
  CHECK(recordTag(rec) == 7);
  Reader r = recordReader(rec, 7);
  CHECK(r.u32() == 99);
  CHECK_THROWS_AS(recordReader(rec, 8), CodecError);
}

TEST_CASE("truncated input throws") {
  Bytes tiny{1};
  Reader r(tiny);
  r.u8();
  CHECK_THROWS_AS(r.u32(), CodecError);
}

TEST_CASE("random writer payloads survive a reader pass") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint64_t> values;
    std::vector<std::string> strings;
    Writer w;
    int fields = static_cast<int>(rng() % 8) + 1;
    for (int i = 0; i < fields; ++i) {
      std::uint64_t v = rng();
      values.push_back(v);
      w.u64(v);
      std::string s(rng() % 17, 'x');
      strings.push_back(s);
      w.str(s);
    }
    Reader r(w.buffer());
    for (int i = 0; i < fields; ++i) {
      CHECK(r.u64() == values[i]);
      CHECK(r.str() == strings[i]);
    }
    CHECK(r.atEnd());
  }
}

TEST_CASE("i64 and string convenience records") {
  CHECK(decodeI64(encodeI64(-123456789)) == -123456789);
  CHECK(decodeStr(encodeStr("grid")) == "grid");
}
