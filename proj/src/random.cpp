#include "bellhaar/random.hpp"

#include <array>
#include <cmath>

#include <boost/random/normal_distribution.hpp>

namespace bellhaar {

namespace {

std::seed_seq make_seq(std::uint64_t seed, std::uint64_t stream)
{
  return std::seed_seq{static_cast<std::uint32_t>(seed),
                       static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(stream),
                       static_cast<std::uint32_t>(stream >> 32),
                       0x62656c6cU};
}

}  // namespace

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
{
  auto seq = make_seq(seed, stream);
  engine_.seed(seq);
}

double Rng::normal()
{
  // Boost's ziggurat keeps no state between calls.
  boost::random::normal_distribution<double> standard;
  return standard(engine_);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag)
{
  auto seq = make_seq(master, tag);
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

}  // namespace bellhaar
