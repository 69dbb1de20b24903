#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "pry/container.hpp"
#include "pry/hashing.hpp"
#include "pry/image.hpp"
#include "pry/rng.hpp"

using namespace pry;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "pry_test_util";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("fnv1a64 matches published test vectors") {
  // Reference values for FNV-1a 64-bit.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("hash_hex is 16 lowercase hex digits") {
  std::string h = hash_hex(fnv1a64("foobar"));
  CHECK(h.size() == 16);
  CHECK(h == "85944171f73967e8");
  CHECK(hash_hex8(fnv1a64("foobar")) == "85944171");
}

TEST_CASE("rng uniform passes a coarse KS test") {
  Rng rng(12345);
  const int n = 20000;
  std::vector<double> xs(n);
  for (double& x : xs) x = rng.uniform();
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    d = std::max(d, std::abs(xs[size_t(i)] - double(i + 1) / n));
    d = std::max(d, std::abs(xs[size_t(i)] - double(i) / n));
  }
  // KS critical value at alpha = 0.001 is ~1.95 / sqrt(n).
  CHECK(d < 1.95 / std::sqrt(double(n)));
}

TEST_CASE("rng normal has the right first four moments") {
  Rng rng(777);
  const int n = 200000;
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    m1 += x;
    m2 += x * x;
    m3 += x * x * x;
    m4 += x * x * x * x;
  }
  m1 /= n; m2 /= n; m3 /= n; m4 /= n;
  CHECK(std::abs(m1) < 0.02);
  CHECK(m2 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(m3) < 0.05);
  CHECK(m4 == doctest::Approx(3.0).epsilon(0.06));
}

TEST_CASE("rng state roundtrip resumes the exact stream") {
  Rng a(99);
  for (int i = 0; i < 37; ++i) a.normal();  // odd count leaves a spare cached
  std::string s = a.state();
  Rng b(1);
  b.set_state(s);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  CHECK_THROWS_AS(b.set_state("not a state"), Error);
}

TEST_CASE("substream seeds are distinct across purpose and indices") {
  std::vector<u64> seeds;
  for (int i = 0; i < 50; ++i) {
    seeds.push_back(substream_seed(1, "alpha", u64(i)));
    seeds.push_back(substream_seed(1, "beta", u64(i)));
    seeds.push_back(substream_seed(2, "alpha", u64(i)));
    seeds.push_back(substream_seed(1, "alpha", u64(i), 1));
  }
  std::sort(seeds.begin(), seeds.end());
  CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
}

TEST_CASE("substream rngs look independent") {
  Rng a(substream_seed(42, "x", 0));
  Rng b(substream_seed(42, "x", 1));
  const int n = 20000;
  double ca = 0, cb = 0, cab = 0, sa = 0, sb = 0;
  for (int i = 0; i < n; ++i) {
    double x = a.uniform() - 0.5, y = b.uniform() - 0.5;
    ca += x * x;
    cb += y * y;
    cab += x * y;
    sa += x;
    sb += y;
  }
  double corr = (cab / n - sa / n * sb / n) /
                std::sqrt((ca / n - sa / n * sa / n) *
                          (cb / n - sb / n * sb / n));
  CHECK(std::abs(corr) < 0.03);
}

TEST_CASE("image crop extracts the expected window") {
  Image8 img(6, 8);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 8; ++c) {
      img.px(r, c)[0] = u8(r);
      img.px(r, c)[1] = u8(c);
      img.px(r, c)[2] = u8(r * 8 + c);
    }
  Image8 cc = center_crop(img, 4, 4);
  CHECK(cc.height == 4);
  CHECK(cc.width == 4);
  CHECK(cc.px(0, 0)[0] == 1);  // rows [1,5), cols [2,6)
  CHECK(cc.px(0, 0)[1] == 2);
  Image8 w = crop(img, 2, 3, 3, 4);
  CHECK(w.px(2, 3)[0] == 4);
  CHECK(w.px(2, 3)[1] == 6);
  CHECK_THROWS(crop(img, 4, 0, 3, 4));
}

TEST_CASE("quantize8 saturates and rounds") {
  CHECK(quantize8(-0.1) == 0);
  CHECK(quantize8(0.0) == 0);
  CHECK(quantize8(1.0) == 255);
  CHECK(quantize8(2.0) == 255);
  CHECK(quantize8(0.5) == 128);  // 127.5 + 0.5 rounds up
}

TEST_CASE("ppm writer emits a parseable P6 file") {
  Image8 img(2, 3);
  img.set(0, 0, {1.0, 0.0, 0.0});
  img.set(1, 2, {0.0, 0.0, 1.0});
  fs::path p = temp_file("img.ppm");
  write_ppm(img, p.string());
  std::ifstream in(p, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  CHECK(magic == "P6");
  CHECK(w == 3);
  CHECK(h == 2);
  CHECK(maxv == 255);
  in.get();
  std::vector<char> bytes(6 * 3);
  in.read(bytes.data(), std::streamsize(bytes.size()));
  CHECK(in.gcount() == std::streamsize(bytes.size()));
  CHECK(u8(bytes[0]) == 255);
  CHECK(u8(bytes[1]) == 0);
}

TEST_CASE("container roundtrip preserves header and arrays") {
  fs::path p = temp_file("cont.bin");
  ContainerWriter w("PRYTEST1", 3);
  std::vector<double> xs = {1.5, -2.25, 3.125};
  std::vector<u8> bs = {7, 9};
  w.add_array("xs", "f64", {3}, xs);
  w.add_array("bs", "u8", {2, 1}, bs);
  w.write(p.string(), R"({"kind":"demo","n":3})");

  ContainerReader r(p.string(), "PRYTEST1", 3);
  auto hdr = nlohmann::json::parse(r.header_json());
  CHECK(hdr.at("kind") == "demo");
  CHECK(hdr.at("arrays").size() == 2);
  CHECK(r.has_array("xs"));
  CHECK_FALSE(r.has_array("nope"));
  CHECK(r.read_array<double>("xs") == xs);
  CHECK(r.read_array<u8>("bs") == bs);
  CHECK(r.array_record("bs").shape == std::vector<i64>{2, 1});
  CHECK(r.array_record("bs").dtype == "u8");
  // Blobs are 8-byte aligned.
  CHECK(r.array_record("xs").offset % 8 == 0);
  CHECK(r.array_record("bs").offset % 8 == 0);
}

TEST_CASE("container rejects wrong magic, version, and truncation") {
  fs::path p = temp_file("cont2.bin");
  ContainerWriter w("PRYTEST1", 3);
  std::vector<u32> xs = {1, 2, 3, 4};
  w.add_array("xs", "u32", {4}, xs);
  w.write(p.string(), "{}");

  CHECK_THROWS_WITH_AS(ContainerReader(p.string(), "PRYOTHER", 3),
                       doctest::Contains("magic"), Error);
  try {
    ContainerReader r(p.string(), "PRYTEST1", 4);
    FAIL("version mismatch accepted");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("version") != std::string::npos);
    CHECK(msg.find('3') != std::string::npos);
    CHECK(msg.find('4') != std::string::npos);
  }

  // Truncate mid-blob: open must fail loudly, not return garbage.
  auto bytes = [&] {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }();
  fs::path t = temp_file("cont3.bin");
  std::ofstream(t, std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  CHECK_THROWS_AS(ContainerReader(t.string(), "PRYTEST1", 3), Error);

  CHECK_THROWS_AS(ContainerReader(temp_file("missing.bin").string(),
                                  "PRYTEST1", 3),
                  Error);
}

TEST_CASE("container writes are bitwise deterministic") {
  auto build = [](const fs::path& p) {
    ContainerWriter w("PRYTEST1", 1);
    std::vector<float> xs = {1.0f, 2.0f};
    w.add_array("xs", "f32", {2}, xs);
    w.write(p.string(), R"({"b":2,"a":1})");
  };
  fs::path p1 = temp_file("det1.bin"), p2 = temp_file("det2.bin");
  build(p1);
  build(p2);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(p1) == slurp(p2));
}
