#pragma once

#include <cstdint>
#include <random>

namespace bondsim {

// Seeded random stream. A (seed, stream id) pair always reproduces the same
// sequence; distinct stream ids give statistically independent sequences, so
// each (trial, miner) pair can own a stream without any shared state.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal(double mean, double stddev);
  bool bernoulli(double p) { return uniform() < p; }

  // Child stream for sub-component `index`; deterministic in (this stream's
  // seed and id, index) and independent of how much this stream was used.
  RngStream derive(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bondsim
