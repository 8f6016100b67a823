#include "qlab/rng.hpp"

#include <algorithm>
#include <cmath>

#include "qlab/error.hpp"

namespace qlab {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) noexcept {
  // FNV-1a over the stream name
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

double uniform01(Rng& rng) noexcept { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

DiscreteSampler::DiscreteSampler(const std::vector<double>& weights) {
  double total = 0.0;
  cumulative_.reserve(weights.size());
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(Errc::BadWeights, "sampling weights must be finite and nonnegative");
    total += w;
    cumulative_.push_back(total);
  }
  if (!(total > 0.0)) fail(Errc::BadWeights, "sampling weights sum to zero");
  for (double& c : cumulative_) c /= total;
  cumulative_.back() = 1.0;
}

std::size_t DiscreteSampler::operator()(Rng& rng) const {
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                                           static_cast<std::ptrdiff_t>(cumulative_.size()) - 1));
}

CVector haar_vector(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    v(i) = Complex(re, im);
  }
  return v / v.norm();
}

}  // namespace qlab
