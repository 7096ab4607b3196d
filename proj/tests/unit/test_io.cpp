#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "kdlseg/binary_io.hpp"
#include "kdlseg/error.hpp"
#include "kdlseg/parallel.hpp"
#include "oracles.hpp"

using namespace kdlseg;

TEST_CASE("byte writer is little-endian") {
  io::ByteWriter w;
  w.put_u32(0x01020304u);
  w.put_u8(0xAB);
  w.put_u64(0x1122334455667788ull);
  const auto& b = w.bytes();
  REQUIRE(b.size() == 13);
  CHECK(b[0] == 0x04);
  CHECK(b[3] == 0x01);
  CHECK(b[4] == 0xAB);
  CHECK(b[5] == 0x88);
  CHECK(b[12] == 0x11);
}

TEST_CASE("reader round-trips every field bit for bit") {
  io::ByteWriter w;
  const double specials[] = {0.0, -0.0, 1.0 / 3.0, -1e-308, std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::denorm_min()};
  w.put_bytes("KDF1");
  w.put_u32(7);
  w.put_u64(1ull << 40);
  w.put_f64s(specials);
  io::ByteReader r(w.bytes(), "test");
  CHECK(r.get_bytes(4) == "KDF1");
  CHECK(r.get_u32() == 7);
  CHECK(r.get_u64() == (1ull << 40));
  for (double expected : specials) {
    const double got = r.get_f64();
    CHECK(std::memcmp(&got, &expected, sizeof got) == 0);
  }
  CHECK(r.remaining() == 0);
  CHECK_NOTHROW(r.expect_end());
}

TEST_CASE("reading past the end or leaving bytes is a format error") {
  io::ByteWriter w;
  w.put_u32(1);
  {
    io::ByteReader r(w.bytes(), "short");
    CHECK_THROWS_AS(r.get_u64(), FormatError);
  }
  {
    io::ByteReader r(w.bytes(), "long");
    r.get_u8();
    CHECK_THROWS_AS(r.expect_end(), FormatError);
  }
}

TEST_CASE("atomic write replaces the file and leaves no temporary") {
  const auto dir = oracle::scratch_dir("io_atomic");
  const auto path = dir / "out.bin";
  io::write_file_atomic(path, std::string_view("first"));
  io::write_file_atomic(path, std::string_view("second"));
  const auto bytes = io::read_file(path);
  CHECK(std::string(bytes.begin(), bytes.end()) == "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  CHECK_THROWS_AS(io::read_file(dir / "missing.bin"), IoError);
}

TEST_CASE("parallel_for covers every index exactly once") {
  for (std::size_t threads : {1u, 2u, 3u, 8u}) {
    for (std::size_t count : {0u, 1u, 5u, 97u}) {
      std::vector<std::atomic<int>> hits(count);
      parallel_for(count, threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) hits[i].fetch_add(1);
      });
      for (const auto& h : hits) CHECK(h.load() == 1);
    }
  }
}

TEST_CASE("parallel_for rethrows worker exceptions") {
  CHECK_THROWS_AS(parallel_for(10, 4,
                               [](std::size_t b, std::size_t) {
                                 if (b > 0) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
  CHECK(default_thread_count() >= 1);
}
