#pragma once

// Fixed-seed generators for property tests.

#include <cstdint>
#include <random>
#include <vector>

#include "bpsplit/fp_linalg.hpp"
#include "bpsplit/monomials.hpp"

namespace bpsplit::testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 g(0x5eed'b0a7'2024ULL);
  return g;
}

inline uint64_t uniform(uint64_t lo, uint64_t hi) { return std::uniform_int_distribution<uint64_t>(lo, hi)(rng()); }

inline uint32_t random_prime() {
  static const uint32_t ps[] = {3, 5, 7, 11, 13};
  return ps[uniform(0, 4)];
}

inline FpMatrix random_matrix(uint32_t p, size_t rows, size_t cols, double density = 0.5) {
  FpMatrix m(p, rows, cols);
  std::bernoulli_distribution nz(density);
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c)
      if (nz(rng())) m.set(r, c, static_cast<uint32_t>(uniform(1, p - 1)));
  return m;
}

inline FpVector random_vector(uint32_t p, size_t n) {
  FpVector v(n);
  for (auto& x : v) x = static_cast<uint32_t>(uniform(0, p - 1));
  return v;
}

// Random monomial of A//E(i)_* with small exponents.
inline Monomial random_monomial(int first_tau, int max_index = 4, uint32_t max_exp = 4) {
  Monomial m;
  for (int a = 1; a <= max_index; ++a) m.set_xi(a, static_cast<uint32_t>(uniform(0, max_exp)));
  for (int b = std::max(0, first_tau); b <= max_index + 1; ++b)
    if (uniform(0, 2) == 0) m.tau |= uint64_t{1} << b;
  return m;
}

}  // namespace bpsplit::testing
