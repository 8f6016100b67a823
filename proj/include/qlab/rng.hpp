#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "qlab/linalg.hpp"

namespace qlab {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Independent stream seed for (master seed, named stage, trial index).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) noexcept;

/// Uniform double in [0, 1) built from the top 53 bits.
double uniform01(Rng& rng) noexcept;

/// Index i with probability weights[i] / sum(weights).
class DiscreteSampler {
 public:
  explicit DiscreteSampler(const std::vector<double>& weights);
  std::size_t operator()(Rng& rng) const;
  std::size_t size() const noexcept { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

/// Haar-distributed unit vector in C^d.
CVector haar_vector(std::size_t d, Rng& rng);

}  // namespace qlab
