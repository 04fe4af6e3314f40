#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnsla/bigint.hpp"
#include "rnsla/matrix.hpp"
#include "rnsla/rns.hpp"
#include "rnsla/spmv.hpp"

namespace rnsla {

// a[i] = coordinate x_index of A^i y, canonical in [0, ell).
struct ScalarSequence {
  std::vector<BigInt> a;
  std::uint32_t x_index = 0;
  std::uint64_t y_seed = 0;
};

// Minimal F with sum_j F_j a_{i+j} = 0 (mod ell); monic, coeff[j] = F_j.
struct GeneratorPoly {
  std::vector<BigInt> coeff;
  std::size_t degree() const { return coeff.empty() ? 0 : coeff.size() - 1; }
};

// terms[t] is an m x n_blk matrix, row-major: cell (u, v) is coordinate u of
// A^t y_v.
struct BlockSequence {
  int m = 0;
  int n_blk = 0;
  std::vector<std::vector<BigInt>> terms;
};

ScalarSequence krylov(const CsrMatrix& A, std::uint32_t x_index,
                      const RnsVector& y, std::uint64_t length,
                      const RnsBasis& b, const SpmvPlan& plan);

// Iterative discrepancy Berlekamp-Massey over Z/ell Z (ell prime). All-zero
// input yields the degree-0 generator (1); throws std::invalid_argument
// "insufficient sequence" when fewer than two terms are supplied.
GeneratorPoly berlekamp_massey(const std::vector<BigInt>& a, const BigInt& ell);

// w = sum_i A^i F_i y, evaluated Horner-style descending in i with an
// adaptive deferred-reduction schedule. Output canonical. When `states` is
// non-null it receives the canonical partial sums w_t = sum_{i>=t} A^{i-t}
// F_i y, indexed by t (states[t]), for the zero-output fallback.
RnsVector mksol(const CsrMatrix& A, const GeneratorPoly& F, const RnsVector& y,
                const RnsBasis& b, const SpmvPlan& plan,
                std::vector<std::vector<BigInt>>* states = nullptr);

// True iff w is non-zero and A w = 0 (mod ell), computed on the
// arbitrary-precision reference path only.
bool check_kernel(const CsrMatrix& A, const std::vector<BigInt>& w,
                  const BigInt& ell);
bool check_kernel(const CsrMatrix& A, const RnsVector& w, const RnsBasis& b);

// Mid-Krylov restart state. y is re-derived from (seed, attempt), so only
// the sequence so far and the canonical current vector are stored.
struct Checkpoint {
  std::string basis_desc;
  std::uint64_t n_rows = 0;
  std::uint64_t seed = 0;
  int attempt = 0;
  std::uint32_t x_index = 0;
  std::uint64_t iter = 0;            // A-applications done; a has iter+1 terms
  std::vector<BigInt> sequence;
  std::vector<BigInt> vector_vals;   // canonical A^iter y
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct SolveOptions {
  std::uint64_t seed = 0;
  int max_retries = 5;
  SpmvPlan plan;
  std::string checkpoint_path;            // empty: checkpointing disabled
  std::uint64_t checkpoint_interval = 0;  // in Krylov iterations
  const Checkpoint* resume = nullptr;
  // Halt after this many Krylov iterations of the current attempt (0: run to
  // completion); the state is checkpointed and the result marked `stopped`.
  std::uint64_t stop_after = 0;
};

struct SolveReport {
  std::uint64_t n = 0;
  int attempts = 0;
  std::uint64_t krylov_iterations = 0;
  std::uint64_t sequence_length = 0;
  std::uint64_t bm_degree = 0;
  std::uint64_t mksol_iterations = 0;
  bool used_fallback = false;
  bool stopped = false;
  double krylov_seconds = 0.0;
  double bm_seconds = 0.0;
  double mksol_seconds = 0.0;
};

struct SolveResult {
  bool success = false;
  std::vector<BigInt> kernel;
  SolveReport report;
};

// Random y, canonical probe x at a non-zero coordinate (re-drawn per
// attempt), Krylov of length 2N + 16, BM, Mksol. When the probe
// underestimates the generator the non-zero residual F(A)y is deflated and
// the rounds repeat until the accumulated annihilator X^v * H kills y; the
// kernel vector is then the last non-zero element of H(A)y, A*H(A)y, ...
// (`used_fallback` in the report). Oracle-path verification throughout;
// retries with fresh randomness up to max_retries.
SolveResult solve(const CsrMatrix& A, const BigInt& ell, const RnsBasis& b,
                  const SolveOptions& opt);

// ceil(N/n_blk) + ceil(N/m) + 16 terms; the n_blk column-subsequences run as
// independent workers. 1 <= m, n_blk <= 64.
BlockSequence block_krylov(const CsrMatrix& A, int m, int n_blk,
                           const std::vector<std::uint64_t>& y_seeds,
                           const RnsBasis& b, const SpmvPlan& plan);

// Deterministic y derivation shared by solve, block_krylov, and resume.
std::vector<BigInt> derive_y(const BigInt& ell, std::size_t count,
                             std::uint64_t seed);

}  // namespace rnsla
