#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "skfi/rng.hpp"

using namespace skfi;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32(A4{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, A2{0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32(A4{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, A2{0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
  StreamRng a(42, {StreamPurpose::chain, 3, 1});
  StreamRng b(42, {StreamPurpose::chain, 3, 1});
  StreamRng c(42, {StreamPurpose::chain, 3, 2});
  StreamRng d(43, {StreamPurpose::chain, 3, 1});
  StreamRng e(42, {StreamPurpose::disorder, 3, 1});
  bool differs_c = false, differs_d = false, differs_e = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u32();
    CHECK(x == b.next_u32());
    differs_c |= x != c.next_u32();
    differs_d |= x != d.next_u32();
    differs_e |= x != e.next_u32();
  }
  CHECK(differs_c);
  CHECK(differs_d);
  CHECK(differs_e);
}

TEST_CASE("uniform, below and normal sanity") {
  StreamRng r(7, {StreamPurpose::test, 0, 0});
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
  }
  CHECK(std::abs(s / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 30000; ++i) ++counts[r.below(3)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 5 * std::sqrt(30000 * (1.0 / 3) * (2.0 / 3)));
  s = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 5 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 5 * std::sqrt(2.0 / n));
}
