#pragma once

#include <array>
#include <cstdint>

namespace skfi {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Stateless: the output is a pure function of
/// (key, counter).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Purpose tags that separate independent uses of one root seed.
enum class StreamPurpose : std::uint32_t {
  disorder = 1,
  chain = 2,
  site_order = 3,
  parisi_restart = 4,
  random_tuples = 5,
  test = 99,
};

/// Coordinates of one independent stream: (purpose, disorder index, chain index).
struct StreamId {
  StreamPurpose purpose = StreamPurpose::test;
  std::uint32_t index = 0;
  std::uint32_t sub = 0;
};

/// Sequential reader over the Philox stream identified by (root_seed, id).
///
/// Any stream can be regenerated independently of every other one, so work
/// split across threads reproduces the serial result bit-for-bit.
class StreamRng {
 public:
  StreamRng(std::uint64_t root_seed, StreamId id);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n), n >= 1.
  std::uint32_t below(std::uint32_t n);
  /// Standard normal (Box-Muller; pairs are cached).
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace skfi
