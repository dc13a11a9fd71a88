#pragma once

#include <array>
#include <cstdint>

namespace relrep {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// The output block is a pure function of (key, counter), so streams are
/// reproducible bit-for-bit on any platform with IEEE doubles.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key) noexcept;
};

/// Sequential view over a Philox stream.
///
/// The 64-bit seed is the key; the counter starts at zero and increments by
/// one per 128-bit block.  Uniforms use 53 bits from two consecutive words,
/// normals use the Box-Muller transform (both outputs consumed in order).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double normal() noexcept;
  double normal(double mean, double sigma) noexcept { return mean + sigma * normal(); }

 private:
  void refill() noexcept;

  Philox4x32::Key key_;
  std::uint64_t counter_ = 0;
  Philox4x32::Counter buffer_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace relrep
