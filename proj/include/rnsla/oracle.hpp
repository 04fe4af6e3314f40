#pragma once

#include <vector>

#include "rnsla/bigint.hpp"
#include "rnsla/matrix.hpp"

namespace rnsla {

// Reference SpMV over Z/ell Z in arbitrary precision: w[i] = sum_j A[i][j] *
// v[j] mod ell, negative coefficients contributing as subtractions. Orders of
// magnitude slower than the RNS engines; used for conversions, verification,
// and the multi-precision comparison path.
std::vector<BigInt> oracle_spmv_mod(const CooMatrix& m,
                                    const std::vector<BigInt>& v,
                                    const BigInt& ell);
std::vector<BigInt> oracle_spmv_mod(const CsrMatrix& m,
                                    const std::vector<BigInt>& v,
                                    const BigInt& ell);

}  // namespace rnsla
