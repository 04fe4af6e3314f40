#include "rnsla/oracle.hpp"

#include <stdexcept>

#include "rnsla/bigint.hpp"

namespace rnsla {

BigInt oracle_mod(const BigInt& x, const BigInt& m) {
  if (m == 0) throw std::invalid_argument("zero modulus");
  BigInt r;
  mpz_mod(r.get_mpz_t(), x.get_mpz_t(), m.get_mpz_t());
  return r;
}

BigInt bigint_from_hex(const std::string& hex) {
  BigInt x;
  std::string body = hex;
  if (body.rfind("0x", 0) == 0 || body.rfind("0X", 0) == 0) body = body.substr(2);
  if (body.empty() || mpz_set_str(x.get_mpz_t(), body.c_str(), 16) != 0)
    throw std::invalid_argument("malformed hex integer: " + hex);
  return x;
}

std::string bigint_to_hex(const BigInt& x) { return x.get_str(16); }

std::vector<BigInt> oracle_spmv_mod(const CooMatrix& m,
                                    const std::vector<BigInt>& v,
                                    const BigInt& ell) {
  if (v.size() != m.n_cols) throw std::invalid_argument("dimension mismatch");
  std::vector<BigInt> w(m.n_rows, BigInt(0));
  for (std::size_t e = 0; e < m.nnz(); ++e) {
    w[m.row_id[e]] += BigInt(static_cast<long>(m.data[e])) * v[m.col_id[e]];
  }
  for (auto& x : w) x = oracle_mod(x, ell);
  return w;
}

std::vector<BigInt> oracle_spmv_mod(const CsrMatrix& m,
                                    const std::vector<BigInt>& v,
                                    const BigInt& ell) {
  if (v.size() != m.n_cols) throw std::invalid_argument("dimension mismatch");
  std::vector<BigInt> w(m.n_rows, BigInt(0));
  for (std::uint32_t r = 0; r < m.n_rows; ++r) {
    BigInt acc = 0;
    for (std::uint64_t e = m.ptr[r]; e < m.ptr[r + 1]; ++e) {
      acc += BigInt(static_cast<long>(m.data[e])) * v[m.id[e]];
    }
    w[r] = oracle_mod(acc, ell);
  }
  return w;
}

}  // namespace rnsla
