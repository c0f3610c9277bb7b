#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <vector>

namespace ioc_eiv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Every stochastic routine takes an explicit engine; nothing draws from a
// global generator.
using Rng = std::mt19937_64;

// Independent substream for a (seed, stream) pair. Used so that parallel and
// serial loops over demos / repetitions draw identical numbers.
inline Rng make_substream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5eedu};
  return Rng(seq);
}

}  // namespace ioc_eiv
