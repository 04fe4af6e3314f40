#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rnsla/bigint.hpp"

namespace rnsla {

// Residue carrier: 64-bit machine words (k = 64) or doubles holding 52-bit
// integers (k = 52). Float residues are stored by value in uint64_t slots;
// the conversion is exact in both directions.
enum class RnsFlavor { Int64, Float52 };

inline constexpr int kUnboundedAccumulation = std::numeric_limits<int>::max();

// Arithmetic context for Z/ell Z carried on n pseudo-Mersenne moduli
// p_j = 2^k - c_j. Immutable after construction; shareable across threads.
struct RnsBasis {
  int k = 0;
  int n = 0;
  RnsFlavor flavor = RnsFlavor::Int64;
  std::vector<std::uint64_t> c;
  std::vector<std::uint64_t> p;
  BigInt P;    // product of the moduli
  BigInt ell;  // target ring order (prime, caller-asserted)

  // inv_P[j] = |(P/p_j)^-1|_{p_j}
  std::vector<std::uint64_t> inv_P;
  // Pi_mod_ell[i][j] = ||P/p_i|_ell|_{p_j}
  std::vector<std::vector<std::uint64_t>> Pi_mod_ell;
  // alphaP_mod_ell[a-1][j] = ||a*P|_ell|_{p_j}, a in {1..n-1}
  std::vector<std::vector<std::uint64_t>> alphaP_mod_ell;

  int s = 16;                     // quotient-estimate truncation bits
  std::uint64_t delta_scaled = 0; // floor(Delta * 2^s)
  int k0 = 8;                     // every c_j < 2^k0

  // n * 2^k * ell: upper bound on the value of a reduction output.
  BigInt reduce_output_bound() const;
  // floor((1 - Delta) * P): inputs to the reduction must stay below this.
  BigInt accumulation_limit() const;
};

// Smallest basis with r * n * 2^k * ell < (1 - Delta) * P. Moduli are taken
// with c ascending, primes first; once the primes with c < 2^k0 are used up,
// the scan continues with composite 2^k - c coprime to the moduli already
// chosen. Throws if the bound cannot be met with c < 2^k0.
RnsBasis build_basis(const BigInt& ell, std::uint64_t r, int k, RnsFlavor flavor);

// One Z/ell Z element as n relaxed k-bit residues (each in [0, 2^k), not
// necessarily below p_j).
struct RnsElement {
  std::vector<std::uint64_t> residues;
};

// N elements, element-major: element i occupies slots [i*n, (i+1)*n).
struct RnsVector {
  int n = 0;
  std::vector<std::uint64_t> residues;

  RnsVector() = default;
  RnsVector(std::size_t count, int n_residues)
      : n(n_residues), residues(count * n_residues, 0) {}

  std::size_t size() const { return n == 0 ? 0 : residues.size() / n; }
  std::uint64_t* element(std::size_t i) { return residues.data() + i * n; }
  const std::uint64_t* element(std::size_t i) const { return residues.data() + i * n; }
};

// ---- integer-flavor channel operations (k = 64) ----
//
// Inputs follow the relaxed-range contract: x < 2^64, y < p, lam < 2^(k-k0).
// Outputs are < 2^64 and congruent to the stated value mod p.

inline std::uint64_t rns_add_u64(std::uint64_t c, std::uint64_t x, std::uint64_t y) {
  std::uint64_t z = x + y;
  if (z < x) z += c;  // carry-out: 2^64 = c (mod p)
  return z;
}

inline std::uint64_t rns_addmul_u64(std::uint64_t c, std::uint64_t x,
                                    std::uint64_t lam, std::uint64_t y) {
  unsigned __int128 t = static_cast<unsigned __int128>(lam) * y + x;
  std::uint64_t lo = static_cast<std::uint64_t>(t);
  std::uint64_t hi = static_cast<std::uint64_t>(t >> 64);
  std::uint64_t z = lo + c * hi;
  if (z < lo) z += c;
  return z;
}

inline std::uint64_t rns_sub_u64(std::uint64_t p, std::uint64_t c,
                                 std::uint64_t x, std::uint64_t y) {
  // x - y via the complement p - y; y = 0 is a no-op.
  return y == 0 ? x : rns_add_u64(c, x, p - y);
}

inline std::uint64_t rns_submul_u64(std::uint64_t p, std::uint64_t c,
                                    std::uint64_t x, std::uint64_t lam,
                                    std::uint64_t y) {
  return y == 0 ? x : rns_addmul_u64(c, x, lam, p - y);
}

inline std::uint64_t rns_normalize_u64(std::uint64_t p, std::uint64_t x) {
  return x >= p ? x - p : x;  // x < 2^64 < 2p, one subtraction suffices
}

// ---- float-flavor channel operations (k = 52) ----

// Splits a nonnegative integer-valued double at the 2^52 boundary:
// t = hi + lo exactly, hi a multiple of 2^52, 0 <= lo < 2^52.
// Throws std::invalid_argument on non-finite input.
std::pair<double, double> veltkamp_split(double t, int bits = 52);

inline double rns_add_f52(double p, double x, double y) {
  double z = x + y;  // both < 2^52, sum < 2^53: exact
  if (z >= p) z -= p;
  return z;
}

// x + lam * y mod p for p = 2^52 - c. Exact two-product (FMA), fold of the
// >= 2^52 part by c, stepwise conditional subtractions keeping every
// intermediate an exact integer below 2^53. Output is fully reduced.
double rns_addmul_f52(double p, double c, double x, double lam, double y);

inline double rns_submul_f52(double p, double c, double x, double lam, double y) {
  return y == 0.0 ? (x >= p ? x - p : x) : rns_addmul_f52(p, c, x, lam, p - y);
}

inline double rns_sub_f52(double p, double x, double y) {
  return y == 0.0 ? (x >= p ? x - p : x) : rns_add_f52(p, x, p - y);
}

// ---- basis-level operations ----

// Per-channel dispatch on the basis flavor, operating on uint64_t storage.
// For Float52, operands are converted to double (exact below 2^53).
std::uint64_t rns_add(const RnsBasis& b, int j, std::uint64_t x, std::uint64_t y);
std::uint64_t rns_sub(const RnsBasis& b, int j, std::uint64_t x, std::uint64_t y);
std::uint64_t rns_addmul(const RnsBasis& b, int j, std::uint64_t x,
                         std::uint64_t lam, std::uint64_t y);
std::uint64_t rns_submul(const RnsBasis& b, int j, std::uint64_t x,
                         std::uint64_t lam, std::uint64_t y);

RnsElement rns_from_int(const RnsBasis& b, const BigInt& x);
BigInt int_from_rns(const RnsBasis& b, const RnsElement& x);

// Tightens relaxed residues back to [0, p_j).
RnsElement normalize(const RnsBasis& b, const RnsElement& x);
void normalize_in_place(const RnsBasis& b, std::uint64_t* residues);

// Reduction modulo ell inside RNS. Requires value(x) < (1 - Delta) * P;
// the output value is congruent to the input mod ell and below n * 2^k * ell,
// with every residue fully reduced (< p_j).
RnsElement rns_mod_reduce(const RnsBasis& b, const RnsElement& x);
void rns_mod_reduce_in_place(const RnsBasis& b, std::uint64_t* residues,
                             std::uint64_t* scratch_gamma);

// Largest F >= 1 with r^F * n * 2^k * ell < (1 - Delta) * P. Returns
// kUnboundedAccumulation for r == 1; throws for r == 0.
int max_accumulation_count(const RnsBasis& b, std::uint64_t r);

// One-line text form: k, n, the c_j list, ell in hex, Delta, s.
std::string basis_to_string(const RnsBasis& b);
RnsBasis basis_from_string(const std::string& text);

}  // namespace rnsla
