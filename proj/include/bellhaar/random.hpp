#pragma once

#include <cstdint>
#include <random>

namespace bellhaar {

/// Seedable random source with a platform-independent output sequence.
///
/// The engine is std::mt19937_64 (bit-exact by the standard). Uniforms are
/// derived here and normals come from Boost's ziggurat, because the std::
/// distributions are implementation-defined.
class Rng
{
public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream keyed by (seed, stream) via std::seed_seq.
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform()
  {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal.
  double normal();

private:
  std::mt19937_64 engine_;
};

/// Deterministic 64-bit sub-seed for (master, tag).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag);

}  // namespace bellhaar
