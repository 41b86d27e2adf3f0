#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include "qkiter/binary_io.h"
#include "qkiter/digest.h"
#include "qkiter/error.h"
#include "qkiter/half.h"
#include "qkiter/store.h"
#include "test_util.h"

namespace qkiter {
namespace {

using testing::random_matrix;
using testing::TempDir;

// Independent binary16 decoder built from the bit layout.
double oracle_decode(std::uint16_t code) {
  const int sign = code >> 15;
  const int exponent = (code >> 10) & 0x1f;
  const int mantissa = code & 0x3ff;
  double magnitude;
  if (exponent == 0) {
    magnitude = std::ldexp(static_cast<double>(mantissa), -24);
  } else {
    magnitude = std::ldexp(1.0 + mantissa / 1024.0, exponent - 15);
  }
  return sign ? -magnitude : magnitude;
}

// Every finite non-negative binary16 value, ascending, paired with its code.
const std::vector<std::pair<double, std::uint16_t>>& finite_table() {
  static const auto table = [] {
    std::vector<std::pair<double, std::uint16_t>> t;
    for (std::uint32_t c = 0; c <= 0x7bff; ++c) {
      t.emplace_back(oracle_decode(static_cast<std::uint16_t>(c)), static_cast<std::uint16_t>(c));
    }
    return t;
  }();
  return table;
}

// Nearest representable value, ties to the even code.
double oracle_round(double x) {
  const auto& t = finite_table();
  const double a = std::abs(x);
  auto hi = std::lower_bound(t.begin(), t.end(), a,
                             [](const auto& e, double v) { return e.first < v; });
  double best;
  if (hi == t.begin()) {
    best = hi->first;
  } else {
    auto lo = hi - 1;
    const double dl = a - lo->first;
    const double dh = hi->first - a;
    if (dl < dh) {
      best = lo->first;
    } else if (dh < dl) {
      best = hi->first;
    } else {
      best = (lo->second % 2 == 0) ? lo->first : hi->first;
    }
  }
  return std::signbit(x) ? -best : best;
}

TEST(Half, DecodeMatchesBitLayoutForEveryCode) {
  for (std::uint32_t c = 0; c <= 0xffff; ++c) {
    const auto code = static_cast<std::uint16_t>(c);
    if (((code >> 10) & 0x1f) == 0x1f) continue;  // inf / nan are never written
    ASSERT_EQ(decode_half(code), oracle_decode(code)) << std::hex << c;
  }
}

TEST(Half, EveryFiniteValueRoundTripsExactly) {
  for (const auto& [value, code] : finite_table()) {
    ASSERT_EQ(encode_half(value), code);
    ASSERT_EQ(decode_half(encode_half(-value)), -value);
  }
}

TEST(Half, MidpointsRoundToEvenAndNeighboursRoundToNearest) {
  const auto& t = finite_table();
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double mid = 0.5 * (t[i].first + t[i + 1].first);
    const std::uint16_t even = t[i].second % 2 == 0 ? t[i].second : t[i + 1].second;
    ASSERT_EQ(encode_half(mid), even) << mid;
    ASSERT_EQ(encode_half(std::nextafter(mid, 0.0)), t[i].second) << mid;
    ASSERT_EQ(encode_half(std::nextafter(mid, 1e9)), t[i + 1].second) << mid;
  }
}

TEST(Half, RandomValuesMatchNearestOracle) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> exponent(-30.0, 15.9);
  std::uniform_real_distribution<double> mantissa(1.0, 2.0);
  for (int i = 0; i < 200000; ++i) {
    double x = std::ldexp(mantissa(rng), static_cast<int>(std::floor(exponent(rng))));
    if (x > kHalfMax) continue;
    if (i % 2) x = -x;
    const double got = decode_half(encode_half(x));
    ASSERT_EQ(got, oracle_round(x)) << x;
    ASSERT_LE(std::abs(got - x), half_rounding_bound(x)) << x;
  }
}

TEST(Half, SpecExamples) {
  for (double x : {0.0, 1.0, -1.0}) EXPECT_EQ(decode_half(encode_half(x)), x);
  EXPECT_LE(std::abs(decode_half(encode_half(0.1)) - 0.1), std::ldexp(0.1, -11));
  EXPECT_EQ(decode_half(encode_half(65504.0)), 65504.0);
}

TEST(Half, OutOfRangeAndNonFiniteThrow) {
  for (double x : std::vector<double>{70000.0, -70000.0, 65505.0, INFINITY, -INFINITY, std::nan("")}) {
    try {
      encode_half(x);
      FAIL() << "expected a range error for " << x;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kRange);
    }
  }
}

TEST(Half, RowErrorNamesTheRow) {
  try {
    encode_half_row(Vector{1.0, 1e6}, 42);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kRange);
    EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
  }
}

Digest tag_of(const std::string& text) {
  Sha256 h;
  h.update(text);
  return h.finish();
}

TEST(Digest, KnownSha256Vector) {
  EXPECT_EQ(to_hex(tag_of("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Store, ChunkSizesFollowArithmetic) {
  TempDir dir("store");
  std::mt19937_64 rng(1);
  const Matrix rows = random_matrix(rng, 5, 3);
  const IntermediateStore store = store_write(rows, 2, tag_of("t"), dir / "a.qkis");
  ASSERT_EQ(store.chunk_count(), 3u);
  EXPECT_EQ(store.chunk_rows(0), 2u);
  EXPECT_EQ(store.chunk_rows(1), 2u);
  EXPECT_EQ(store.chunk_rows(2), 1u);
  EXPECT_EQ(store.n_rows(), 5u);

  const IntermediateStore ten = store_write(random_matrix(rng, 10, 3), 4, tag_of("t"), dir / "b.qkis");
  EXPECT_EQ(ten.chunk_rows(0), 4u);
  EXPECT_EQ(ten.chunk_rows(1), 4u);
  EXPECT_EQ(ten.chunk_rows(2), 2u);
  EXPECT_THROW(ten.read_chunk(3), Error);
}

TEST(Store, EmptyStoreIsValidAndHasNoChunks) {
  TempDir dir("store");
  const IntermediateStore store = store_write(Matrix(0, 4), 8, tag_of("t"), dir / "e.qkis");
  EXPECT_EQ(store.n_rows(), 0u);
  EXPECT_EQ(store.d_mid(), 4u);
  try {
    store.read_chunk(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIndex);
  }
}

TEST(Store, RoundTripWithinPerValueRoundingAndReopenEqual) {
  TempDir dir("store");
  std::mt19937_64 rng(2);
  const Matrix rows = random_matrix(rng, 37, 6, 3.0);
  const Digest tag = tag_of("src");
  const IntermediateStore store = store_write(rows, 8, tag, dir / "r.qkis");
  const IntermediateStore reopened = IntermediateStore::open(dir / "r.qkis");
  EXPECT_EQ(reopened.source_tag(), tag);
  EXPECT_EQ(reopened.chunk_size(), 8u);
  for (std::size_t c = 0; c < store.chunk_count(); ++c) {
    const Matrix chunk = reopened.read_chunk(c);
    for (std::size_t r = 0; r < chunk.rows(); ++r) {
      const std::size_t row = store.chunk_begin(c) + r;
      const Vector direct = reopened.read_row(row);
      for (std::size_t j = 0; j < chunk.cols(); ++j) {
        const double x = rows(row, j);
        ASSERT_LE(std::abs(chunk(r, j) - x), half_rounding_bound(x));
        ASSERT_EQ(chunk(r, j), decode_half(encode_half(x)));
        ASSERT_EQ(direct[j], chunk(r, j));
      }
    }
  }
}

TEST(Store, WriterRejectsDimensionDrift) {
  TempDir dir("store");
  StoreWriter writer(dir / "d.qkis", 3, 4, tag_of("t"));
  writer.append(Vector{1, 2, 3});
  try {
    writer.append(Vector{1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(Store, UnfinishedWriterLeavesNoFile) {
  TempDir dir("store");
  {
    StoreWriter writer(dir / "u.qkis", 2, 4, tag_of("t"));
    writer.append(Vector{1, 2});
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "u.qkis"));
}

TEST(Store, TruncatedOrForeignFilesAreFormatErrors) {
  TempDir dir("store");
  std::mt19937_64 rng(4);
  store_write(random_matrix(rng, 9, 3), 4, tag_of("t"), dir / "f.qkis");
  std::filesystem::resize_file(dir / "f.qkis", std::filesystem::file_size(dir / "f.qkis") - 3);
  try {
    IntermediateStore::open(dir / "f.qkis");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
  {
    std::ofstream out(dir / "g.qkis", std::ios::binary);
    out << "NOPE and some more bytes to read";
  }
  EXPECT_THROW(IntermediateStore::open(dir / "g.qkis"), Error);
  try {
    IntermediateStore::open(dir / "missing.qkis");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(Store, RewritingIdenticalRowsIsBitwiseIdentical) {
  TempDir dir("store");
  std::mt19937_64 rng(8);
  const Matrix rows = random_matrix(rng, 20, 5);
  store_write(rows, 7, tag_of("t"), dir / "1.qkis");
  store_write(rows, 7, tag_of("t"), dir / "2.qkis");
  std::ifstream a(dir / "1.qkis", std::ios::binary), b(dir / "2.qkis", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

TEST(Store, ChunkingDoesNotChangeDecodedValues) {
  TempDir dir("store");
  std::mt19937_64 rng(9);
  const Matrix rows = random_matrix(rng, 23, 4);
  const IntermediateStore whole = store_write(rows, 1000, tag_of("t"), dir / "w.qkis");
  const IntermediateStore small = store_write(rows, 3, tag_of("t"), dir / "s.qkis");
  const Matrix all = whole.read_chunk(0);
  for (std::size_t c = 0; c < small.chunk_count(); ++c) {
    const Matrix part = small.read_chunk(c);
    for (std::size_t r = 0; r < part.rows(); ++r) {
      for (std::size_t j = 0; j < part.cols(); ++j) {
        ASSERT_EQ(part(r, j), all(small.chunk_begin(c) + r, j));
      }
    }
  }
}

}  // namespace
}  // namespace qkiter
