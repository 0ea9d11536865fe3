#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cgp/model.hpp"

namespace cgp {

/// Gray-code Sobol generator (Joe-Kuo direction numbers, up to 1024
/// dimensions). A seeded generator applies a random digital shift, which
/// keeps the net structure and makes each seed a different point set.
class SobolSequence {
 public:
  static constexpr int kBits = 32;

  explicit SobolSequence(int dimension);
  SobolSequence(int dimension, std::uint64_t seed);

  int dimension() const { return dim_; }
  Point next();
  void skip(std::uint64_t n);

 private:
  int dim_;
  std::uint64_t index_ = 0;
  std::vector<std::array<std::uint32_t, kBits>> directions_;
  std::vector<std::uint32_t> state_;
  std::vector<std::uint32_t> shift_;
};

/// First k points of the seeded sequence in [0,1]^d.
std::vector<Point> sobol_init(int dimension, int count, std::uint64_t seed);

}  // namespace cgp
