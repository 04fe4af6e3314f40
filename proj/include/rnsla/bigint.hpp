#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <vector>

namespace rnsla {

// Arbitrary-precision nonnegative integer. Sign handling is left to callers;
// every value flowing through the reference path is kept in [0, m) for its
// respective modulus m.
using BigInt = mpz_class;

// x mod m in [0, m-1]. Throws std::invalid_argument on m == 0.
BigInt oracle_mod(const BigInt& x, const BigInt& m);

BigInt bigint_from_hex(const std::string& hex);
std::string bigint_to_hex(const BigInt& x);

// Uniform value in [0, bound) drawn from a caller-owned 64-bit generator
// stream. Deterministic for a fixed stream.
template <typename Rng>
BigInt random_below(Rng& rng, const BigInt& bound) {
  const std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
  const std::size_t words = (bits + 63) / 64 + 1;
  BigInt x = 0;
  for (std::size_t i = 0; i < words; ++i) {
    x <<= 64;
    x += BigInt(static_cast<unsigned long>(rng()));
  }
  return oracle_mod(x, bound);
}

}  // namespace rnsla
