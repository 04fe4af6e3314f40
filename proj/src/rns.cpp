#include "rnsla/rns.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace rnsla {

namespace {

std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % p);
}

std::uint64_t addmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
  std::uint64_t t = a + b;
  if (t < a) return t + (0 - p);  // wrapped: subtract p from a + b - 2^64 + 2^64
  return t >= p ? t - p : t;
}

std::uint64_t submod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
  return a >= b ? a - b : a + (p - b);
}

std::uint64_t mod_u64(const BigInt& x, std::uint64_t p) {
  // mpz_fdiv_ui handles the full 64-bit modulus range on LP64.
  return mpz_fdiv_ui(x.get_mpz_t(), p);
}

bool is_prime(const BigInt& x) {
  return mpz_probab_prime_p(x.get_mpz_t(), 30) != 0;
}

// Precomputes P and all reduction tables for a fixed modulus list.
RnsBasis make_basis(const BigInt& ell, int k, RnsFlavor flavor,
                    const std::vector<std::uint64_t>& cs, int s,
                    std::uint64_t delta_scaled, int k0) {
  RnsBasis b;
  b.k = k;
  b.n = static_cast<int>(cs.size());
  b.flavor = flavor;
  b.c = cs;
  b.ell = ell;
  b.s = s;
  b.delta_scaled = delta_scaled;
  b.k0 = k0;

  const BigInt two_k = BigInt(1) << k;
  b.P = 1;
  for (std::uint64_t c : cs) {
    BigInt p = two_k - static_cast<unsigned long>(c);
    b.p.push_back(mpz_get_ui(p.get_mpz_t()));
    b.P *= p;
  }

  // epsilon + delta <= Delta, scaled by 2^(k+s) to stay exact.
  BigInt eps_delta = 0;
  for (std::uint64_t c : cs) eps_delta += BigInt(static_cast<unsigned long>(c)) << s;
  eps_delta += BigInt(b.n) * ((BigInt(1) << (k - s)) - 1) << s;
  if (eps_delta > BigInt(static_cast<unsigned long>(delta_scaled)) << k)
    throw std::logic_error("error-correcting term too small for this basis");

  b.inv_P.resize(b.n);
  b.Pi_mod_ell.assign(b.n, std::vector<std::uint64_t>(b.n));
  for (int i = 0; i < b.n; ++i) {
    BigInt p_i = two_k - static_cast<unsigned long>(cs[i]);
    BigInt P_i = b.P / p_i;
    BigInt inv;
    if (mpz_invert(inv.get_mpz_t(), P_i.get_mpz_t(), p_i.get_mpz_t()) == 0)
      throw std::logic_error("moduli are not pairwise coprime");
    b.inv_P[i] = mpz_get_ui(inv.get_mpz_t());
    BigInt P_i_mod_ell = oracle_mod(P_i, ell);
    for (int j = 0; j < b.n; ++j)
      b.Pi_mod_ell[i][j] = mod_u64(P_i_mod_ell, b.p[j]);
  }
  b.alphaP_mod_ell.assign(b.n > 0 ? b.n - 1 : 0,
                          std::vector<std::uint64_t>(b.n));
  for (int a = 1; a < b.n; ++a) {
    BigInt aP_mod_ell = oracle_mod(BigInt(a) * b.P, ell);
    for (int j = 0; j < b.n; ++j)
      b.alphaP_mod_ell[a - 1][j] = mod_u64(aP_mod_ell, b.p[j]);
  }
  return b;
}

}  // namespace

BigInt RnsBasis::reduce_output_bound() const {
  return BigInt(n) * (BigInt(1) << k) * ell;
}

BigInt RnsBasis::accumulation_limit() const {
  return P * ((BigInt(1) << s) - static_cast<unsigned long>(delta_scaled)) >> s;
}

RnsBasis build_basis(const BigInt& ell, std::uint64_t r, int k, RnsFlavor flavor) {
  const bool ok = (k == 64 && flavor == RnsFlavor::Int64) ||
                  (k == 52 && flavor == RnsFlavor::Float52);
  if (!ok) throw std::invalid_argument("unsupported modulus width");
  if (ell < 3) throw std::invalid_argument("ell must be at least 3");
  if (r < 1) throw std::invalid_argument("row norm must be positive");

  const int s = 16;
  const int k0 = 8;
  const std::uint64_t delta_scaled = std::uint64_t(1) << (s - 1);  // Delta = 1/2
  const BigInt two_k = BigInt(1) << k;
  const std::uint64_t c_limit = std::uint64_t(1) << k0;

  std::vector<std::uint64_t> cs;
  BigInt P = 1;
  auto bound_met = [&]() {
    if (cs.empty()) return false;
    BigInt lhs = BigInt(static_cast<unsigned long>(r)) * BigInt(cs.size()) *
                 two_k * ell << s;
    BigInt rhs = P * ((BigInt(1) << s) - static_cast<unsigned long>(delta_scaled));
    return lhs < rhs;
  };

  // Primes with c ascending, then coprime composites once primes run out.
  for (int pass = 0; pass < 2 && !bound_met(); ++pass) {
    for (std::uint64_t c = 1; c < c_limit && !bound_met(); ++c) {
      BigInt p = two_k - static_cast<unsigned long>(c);
      if (pass == 0) {
        if (!is_prime(p)) continue;
      } else {
        if (is_prime(p)) continue;  // taken in the first pass
        BigInt g;
        mpz_gcd(g.get_mpz_t(), p.get_mpz_t(), P.get_mpz_t());
        if (g != 1) continue;
      }
      cs.push_back(c);
      P *= p;
    }
  }
  if (!bound_met())
    throw std::runtime_error("no pseudo-Mersenne basis satisfies the bound");
  return make_basis(ell, k, flavor, cs, s, delta_scaled, k0);
}

RnsElement rns_from_int(const RnsBasis& b, const BigInt& x) {
  if (x < 0 || x >= b.P) throw std::out_of_range("out of RNS range");
  RnsElement e;
  e.residues.resize(b.n);
  for (int j = 0; j < b.n; ++j) e.residues[j] = mod_u64(x, b.p[j]);
  return e;
}

BigInt int_from_rns(const RnsBasis& b, const RnsElement& x) {
  BigInt acc = 0;
  const BigInt two_k = BigInt(1) << b.k;
  for (int j = 0; j < b.n; ++j) {
    std::uint64_t r = rns_normalize_u64(b.p[j], x.residues[j]);
    std::uint64_t gamma = mulmod_u64(r, b.inv_P[j], b.p[j]);
    BigInt p_j = two_k - static_cast<unsigned long>(b.c[j]);
    acc += BigInt(static_cast<unsigned long>(gamma)) * (b.P / p_j);
  }
  return oracle_mod(acc, b.P);
}

RnsElement normalize(const RnsBasis& b, const RnsElement& x) {
  RnsElement e = x;
  normalize_in_place(b, e.residues.data());
  return e;
}

void normalize_in_place(const RnsBasis& b, std::uint64_t* residues) {
  for (int j = 0; j < b.n; ++j)
    residues[j] = rns_normalize_u64(b.p[j], residues[j]);
}

void rns_mod_reduce_in_place(const RnsBasis& b, std::uint64_t* residues,
                             std::uint64_t* gamma) {
  normalize_in_place(b, residues);
  for (int j = 0; j < b.n; ++j)
    gamma[j] = mulmod_u64(residues[j], b.inv_P[j], b.p[j]);

  // Quotient estimate, scaled by 2^s so it stays in one word.
  const int shift = b.k - b.s;
  std::uint64_t acc = b.delta_scaled;
  for (int i = 0; i < b.n; ++i) acc += gamma[i] >> shift;
  const std::uint64_t alpha = acc >> b.s;
  assert(alpha < static_cast<std::uint64_t>(b.n));

  for (int j = 0; j < b.n; ++j) {
    std::uint64_t z = 0;
    for (int i = 0; i < b.n; ++i)
      z = addmod_u64(z, mulmod_u64(gamma[i], b.Pi_mod_ell[i][j], b.p[j]), b.p[j]);
    if (alpha > 0)
      z = submod_u64(z, b.alphaP_mod_ell[alpha - 1][j], b.p[j]);
    residues[j] = z;
  }
}

RnsElement rns_mod_reduce(const RnsBasis& b, const RnsElement& x) {
  RnsElement e = x;
  std::vector<std::uint64_t> gamma(b.n);
  rns_mod_reduce_in_place(b, e.residues.data(), gamma.data());
  return e;
}

int max_accumulation_count(const RnsBasis& b, std::uint64_t r) {
  if (r == 0) throw std::invalid_argument("row norm must be positive");
  if (r == 1) return kUnboundedAccumulation;
  const BigInt rhs = b.P * ((BigInt(1) << b.s) -
                            static_cast<unsigned long>(b.delta_scaled));
  BigInt cur = b.reduce_output_bound() << b.s;
  int f = 0;
  while (cur * static_cast<unsigned long>(r) < rhs) {
    cur *= static_cast<unsigned long>(r);
    ++f;
  }
  if (f == 0)
    throw std::invalid_argument("basis too small for the requested row norm");
  return f;
}

std::pair<double, double> veltkamp_split(double t, int bits) {
  if (!std::isfinite(t)) throw std::invalid_argument("non-finite split input");
  const double boundary = std::ldexp(1.0, bits);
  if (t < boundary) return {0.0, t};
  double hi = std::ldexp(std::floor(std::ldexp(t, -bits)), bits);
  return {hi, t - hi};
}

double rns_addmul_f52(double p, double c, double x, double lam, double y) {
  assert(x >= 0 && x < 0x1p52 && y >= 0 && y < p && lam >= 0 && lam < 0x1p44);
  double t_hi = lam * y;
  double t_lo = std::fma(lam, y, -t_hi);  // exact remainder of the product
  auto [hi, lo] = veltkamp_split(t_hi, 52);
  double q = std::ldexp(hi, -52);  // integer below 2^44

  // Fold stepwise so every intermediate is an exact integer below 2^53.
  double z = lo + t_lo;
  if (z < 0) z += p;
  else if (z >= p) z -= p;
  z += q * c;
  while (z >= p) z -= p;
  z += x;
  while (z >= p) z -= p;
  return z;
}

std::uint64_t rns_add(const RnsBasis& b, int j, std::uint64_t x, std::uint64_t y) {
  if (b.flavor == RnsFlavor::Int64) return rns_add_u64(b.c[j], x, y);
  return static_cast<std::uint64_t>(rns_add_f52(
      static_cast<double>(b.p[j]), static_cast<double>(x), static_cast<double>(y)));
}

std::uint64_t rns_sub(const RnsBasis& b, int j, std::uint64_t x, std::uint64_t y) {
  if (b.flavor == RnsFlavor::Int64) return rns_sub_u64(b.p[j], b.c[j], x, y);
  return static_cast<std::uint64_t>(rns_sub_f52(
      static_cast<double>(b.p[j]), static_cast<double>(x), static_cast<double>(y)));
}

std::uint64_t rns_addmul(const RnsBasis& b, int j, std::uint64_t x,
                         std::uint64_t lam, std::uint64_t y) {
  if (b.flavor == RnsFlavor::Int64) return rns_addmul_u64(b.c[j], x, lam, y);
  return static_cast<std::uint64_t>(rns_addmul_f52(
      static_cast<double>(b.p[j]), static_cast<double>(b.c[j]),
      static_cast<double>(x), static_cast<double>(lam), static_cast<double>(y)));
}

std::uint64_t rns_submul(const RnsBasis& b, int j, std::uint64_t x,
                         std::uint64_t lam, std::uint64_t y) {
  if (b.flavor == RnsFlavor::Int64) return rns_submul_u64(b.p[j], b.c[j], x, lam, y);
  return static_cast<std::uint64_t>(rns_submul_f52(
      static_cast<double>(b.p[j]), static_cast<double>(b.c[j]),
      static_cast<double>(x), static_cast<double>(lam), static_cast<double>(y)));
}

std::string basis_to_string(const RnsBasis& b) {
  std::ostringstream out;
  out << "k=" << b.k << " n=" << b.n << " c=";
  for (int j = 0; j < b.n; ++j) out << (j ? "," : "") << b.c[j];
  out << " ell=0x" << bigint_to_hex(b.ell);
  out << " delta=" << b.delta_scaled << "/" << (std::uint64_t(1) << b.s);
  out << " s=" << b.s;
  return out.str();
}

RnsBasis basis_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  int k = 0, n = 0, s = 0;
  std::uint64_t delta_num = 0, delta_den = 0;
  std::vector<std::uint64_t> cs;
  BigInt ell;
  bool have_ell = false;
  while (in >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("malformed basis field: " + tok);
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "k") k = std::stoi(val);
    else if (key == "n") n = std::stoi(val);
    else if (key == "s") s = std::stoi(val);
    else if (key == "ell") { ell = bigint_from_hex(val); have_ell = true; }
    else if (key == "delta") {
      auto slash = val.find('/');
      if (slash == std::string::npos) throw std::invalid_argument("malformed delta");
      delta_num = std::stoull(val.substr(0, slash));
      delta_den = std::stoull(val.substr(slash + 1));
    } else if (key == "c") {
      std::istringstream cls(val);
      std::string one;
      while (std::getline(cls, one, ',')) cs.push_back(std::stoull(one));
    } else {
      throw std::invalid_argument("unknown basis field: " + key);
    }
  }
  if (!have_ell || k == 0 || cs.empty() || s == 0 || delta_den == 0)
    throw std::invalid_argument("incomplete basis description");
  if (n != static_cast<int>(cs.size()))
    throw std::invalid_argument("basis modulus count mismatch");
  if (delta_den != (std::uint64_t(1) << s) || delta_num >= delta_den)
    throw std::invalid_argument("unsupported delta encoding");
  RnsFlavor flavor = (k == 52) ? RnsFlavor::Float52 : RnsFlavor::Int64;
  if (k != 52 && k != 64) throw std::invalid_argument("unsupported modulus width");
  return make_basis(ell, k, flavor, cs, s, delta_num, 8);
}

}  // namespace rnsla
