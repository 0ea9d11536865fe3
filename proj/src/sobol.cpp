#include "cgp/sobol.hpp"

#include <bit>
#include <stdexcept>

#include "cgp/detail/sobol_table.hpp"

namespace cgp {

SobolSequence::SobolSequence(int dimension)
    : dim_(dimension), state_(static_cast<std::size_t>(dimension), 0u), shift_(static_cast<std::size_t>(dimension), 0u) {
  if (dimension < 1 || dimension > detail::kSobolMaxDim) {
    throw std::invalid_argument("Sobol dimension must lie in [1, " + std::to_string(detail::kSobolMaxDim) + "]");
  }
  directions_.resize(static_cast<std::size_t>(dimension));
  for (int j = 0; j < kBits; ++j) directions_[0][j] = 1u << (kBits - 1 - j);
  for (int d = 1; d < dimension; ++d) {
    const std::uint32_t poly = detail::kSobolPoly[d];
    const int degree = std::bit_width(poly) - 1;
    std::array<std::uint32_t, kBits> m{};
    for (int j = 0; j < degree; ++j) m[j] = detail::kSobolInit[d][j];
    for (int j = degree; j < kBits; ++j) {
      std::uint32_t v = m[j - degree];
      std::uint32_t pow2 = 1;
      for (int k = 0; k < degree; ++k) {
        pow2 <<= 1;
        if ((poly >> (degree - 1 - k)) & 1u) v ^= pow2 * m[j - k - 1];
      }
      m[j] = v;
    }
    for (int j = 0; j < kBits; ++j) directions_[d][j] = m[j] << (kBits - 1 - j);
  }
}

SobolSequence::SobolSequence(int dimension, std::uint64_t seed) : SobolSequence(dimension) {
  Rng rng = Rng(seed).split("sobol-shift");
  for (auto& s : shift_) s = static_cast<std::uint32_t>(rng.next_u64() >> 32);
}

Point SobolSequence::next() {
  // Point with index i uses state after XOR-ing direction ctz(i) for i >= 1.
  if (index_ > 0) {
    const int c = std::countr_zero(index_);
    if (c >= kBits) throw std::out_of_range("Sobol sequence exhausted");
    for (int d = 0; d < dim_; ++d) state_[d] ^= directions_[d][c];
  }
  ++index_;
  Point x(static_cast<std::size_t>(dim_));
  for (int d = 0; d < dim_; ++d) x[d] = static_cast<double>(state_[d] ^ shift_[d]) * 0x1.0p-32;
  return x;
}

void SobolSequence::skip(std::uint64_t n) {
  for (std::uint64_t i = 0; i < n; ++i) next();
}

std::vector<Point> sobol_init(int dimension, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sobol_init: count must be >= 1");
  SobolSequence seq(dimension, seed);
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(seq.next());
  return out;
}

}  // namespace cgp
