#include "rnsla/wiedemann.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <thread>

#include "rnsla/oracle.hpp"

namespace rnsla {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Exact canonical value of one vector coordinate; the vector itself is left
// untouched.
BigInt extract_coord(const RnsBasis& b, const RnsVector& v, std::uint32_t idx) {
  RnsElement e;
  e.residues.assign(v.element(idx), v.element(idx) + b.n);
  std::vector<std::uint64_t> gamma(b.n);
  rns_mod_reduce_in_place(b, e.residues.data(), gamma.data());
  return oracle_mod(int_from_rns(b, e), b.ell);
}

std::uint64_t max_row_norm(const CsrMatrix& m) {
  std::uint64_t best = 0;
  for (std::uint32_t r = 0; r < m.n_rows; ++r) {
    std::uint64_t norm = 0;
    for (std::uint64_t e = m.ptr[r]; e < m.ptr[r + 1]; ++e)
      norm += static_cast<std::uint64_t>(std::abs(static_cast<std::int64_t>(m.data[e])));
    best = std::max(best, norm);
  }
  return best;
}

BigInt invmod(const BigInt& x, const BigInt& ell) {
  BigInt inv;
  if (mpz_invert(inv.get_mpz_t(), x.get_mpz_t(), ell.get_mpz_t()) == 0)
    throw std::domain_error("non-invertible discrepancy (ell not prime?)");
  return inv;
}

std::uint64_t attempt_seed(std::uint64_t seed, int attempt) {
  return seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt + 1);
}

void add_scaled_element(const RnsBasis& b, std::uint64_t* dst,
                        const BigInt& value) {
  RnsElement e = rns_from_int(b, value);
  for (int j = 0; j < b.n; ++j) dst[j] = rns_add(b, j, dst[j], e.residues[j]);
}

std::vector<BigInt> canonical_values(const RnsBasis& b, const RnsVector& v) {
  std::vector<BigInt> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(extract_coord(b, v, static_cast<std::uint32_t>(i)));
  return out;
}

bool all_zero(const std::vector<BigInt>& v) {
  for (const BigInt& x : v)
    if (x != 0) return false;
  return true;
}

std::vector<BigInt> poly_mul_mod(const std::vector<BigInt>& a,
                                 const std::vector<BigInt>& c,
                                 const BigInt& ell) {
  std::vector<BigInt> out(a.size() + c.size() - 1, BigInt(0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < c.size(); ++j) out[i + j] += a[i] * c[j];
  }
  for (BigInt& x : out) x = oracle_mod(x, ell);
  return out;
}

}  // namespace

std::vector<BigInt> derive_y(const BigInt& ell, std::size_t count,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<BigInt> y;
  y.reserve(count);
  for (std::size_t i = 0; i < count; ++i) y.push_back(random_below(rng, ell));
  return y;
}

ScalarSequence krylov(const CsrMatrix& A, std::uint32_t x_index,
                      const RnsVector& y, std::uint64_t length,
                      const RnsBasis& b, const SpmvPlan& plan) {
  if (x_index >= A.n_rows) throw std::out_of_range("x_index out of range");
  if (length < 1) throw std::invalid_argument("sequence length must be positive");
  ScalarSequence seq;
  seq.x_index = x_index;
  seq.a.reserve(length);
  seq.a.push_back(extract_coord(b, y, x_index));
  RnsVector v = y;
  const std::uint64_t f =
      plan.reduce_every > 0 ? static_cast<std::uint64_t>(plan.reduce_every) : 1;
  for (std::uint64_t t = 1; t < length; ++t) {
    normalize_vector(b, v);
    v = spmv(A, v, b, plan);
    if (t % f == 0) reduce_vector(b, v);
    seq.a.push_back(extract_coord(b, v, x_index));
  }
  return seq;
}

GeneratorPoly berlekamp_massey(const std::vector<BigInt>& a, const BigInt& ell) {
  if (a.size() < 2) throw std::invalid_argument("insufficient sequence");
  std::vector<BigInt> C{BigInt(1)}, B{BigInt(1)};
  std::size_t L = 0;
  std::size_t m = 1;
  BigInt bb = 1;
  for (std::size_t n = 0; n < a.size(); ++n) {
    BigInt d = 0;
    for (std::size_t i = 0; i <= L && i < C.size(); ++i) d += C[i] * a[n - i];
    d = oracle_mod(d, ell);
    if (d == 0) {
      ++m;
      continue;
    }
    const BigInt coef = oracle_mod(d * invmod(bb, ell), ell);
    if (2 * L <= n) {
      std::vector<BigInt> T = C;
      if (C.size() < B.size() + m) C.resize(B.size() + m, BigInt(0));
      for (std::size_t j = 0; j < B.size(); ++j)
        C[j + m] = oracle_mod(C[j + m] - coef * B[j], ell);
      L = n + 1 - L;
      B = std::move(T);
      bb = d;
      m = 1;
    } else {
      if (C.size() < B.size() + m) C.resize(B.size() + m, BigInt(0));
      for (std::size_t j = 0; j < B.size(); ++j)
        C[j + m] = oracle_mod(C[j + m] - coef * B[j], ell);
      ++m;
    }
  }
  // Reciprocal of the connection polynomial: F_j = C_{L-j}, monic by C_0 = 1.
  GeneratorPoly F;
  F.coeff.assign(L + 1, BigInt(0));
  for (std::size_t j = 0; j <= L; ++j)
    if (L - j < C.size()) F.coeff[j] = C[L - j];
  return F;
}

RnsVector mksol(const CsrMatrix& A, const GeneratorPoly& F, const RnsVector& y,
                const RnsBasis& b, const SpmvPlan& plan,
                std::vector<std::vector<BigInt>>* states) {
  if (F.coeff.empty()) throw std::invalid_argument("empty generator");
  const std::size_t d = F.degree();
  const std::vector<BigInt> y_vals = canonical_values(b, y);
  const std::size_t N = y_vals.size();

  const std::uint64_t r = std::max<std::uint64_t>(1, max_row_norm(A));
  const BigInt limit = b.accumulation_limit();
  // Prefer the in-RNS reduction between steps; fall back to exact
  // canonicalization when even one step from its output bound would overflow.
  const bool use_reduce = BigInt(r) * b.reduce_output_bound() + b.ell < limit;
  const BigInt post_bound = use_reduce ? b.reduce_output_bound() : b.ell;

  std::vector<BigInt> w_vals(N);
  for (std::size_t j = 0; j < N; ++j)
    w_vals[j] = oracle_mod(F.coeff[d] * y_vals[j], b.ell);
  RnsVector w = rns_vector_from_ints(b, w_vals);
  BigInt bound = b.ell;
  if (states) {
    states->assign(d + 1, {});
    (*states)[d] = w_vals;
  }

  for (std::size_t step = 0; step < d; ++step) {
    const std::size_t i = d - 1 - step;
    if (BigInt(r) * bound + b.ell >= limit) {
      if (use_reduce)
        reduce_vector(b, w);
      else
        canonicalize_vector(b, w);
      bound = post_bound;
    }
    normalize_vector(b, w);
    w = spmv(A, w, b, plan);
    bound *= r;
    for (std::size_t j = 0; j < N; ++j)
      add_scaled_element(b, w.element(j),
                         oracle_mod(F.coeff[i] * y_vals[j], b.ell));
    bound += b.ell;
    if (states) (*states)[i] = canonical_values(b, w);
  }
  canonicalize_vector(b, w);
  return w;
}

bool check_kernel(const CsrMatrix& A, const std::vector<BigInt>& w,
                  const BigInt& ell) {
  if (w.size() != A.n_cols) throw std::invalid_argument("dimension mismatch");
  if (all_zero(w)) return false;
  const std::vector<BigInt> Aw = oracle_spmv_mod(A, w, ell);
  return all_zero(Aw);
}

bool check_kernel(const CsrMatrix& A, const RnsVector& w, const RnsBasis& b) {
  return check_kernel(A, canonical_values(b, w), b.ell);
}

SolveResult solve(const CsrMatrix& A, const BigInt& ell, const RnsBasis& b,
                  const SolveOptions& opt) {
  if (A.n_rows != A.n_cols) throw std::invalid_argument("matrix must be square");
  if (A.n_rows == 0) throw std::invalid_argument("empty matrix");

  SolveResult res;
  const std::uint32_t N = A.n_rows;
  res.report.n = N;
  const std::uint64_t L = 2 * static_cast<std::uint64_t>(N) + 16;
  const std::uint64_t f =
      opt.plan.reduce_every > 0 ? static_cast<std::uint64_t>(opt.plan.reduce_every)
                                : 1;

  int first_attempt = 0;
  if (opt.resume) {
    if (opt.resume->basis_desc != basis_to_string(b))
      throw std::invalid_argument("checkpoint basis mismatch");
    if (opt.resume->n_rows != N)
      throw std::invalid_argument("checkpoint dimension mismatch");
    first_attempt = opt.resume->attempt;
  }

  for (int attempt = first_attempt; attempt <= opt.max_retries; ++attempt) {
    ++res.report.attempts;
    const std::uint64_t y_seed = attempt_seed(opt.seed, attempt);
    const std::vector<BigInt> y0_vals = derive_y(ell, N, y_seed);
    if (all_zero(y0_vals)) continue;  // useless draw
    const RnsVector y0 = rns_vector_from_ints(b, y0_vals);
    // Probe coordinate: re-drawn per attempt and per deflation round so a
    // retry also varies the x side of the bilinear projection, not just y.
    std::mt19937_64 xrng(y_seed ^ 0x5851f42d4c957f2dULL);

    // Product of the round generators; divides the minimal polynomial of
    // y's Krylov space throughout.
    std::vector<BigInt> annihilator{BigInt(1)};
    std::vector<BigInt> cur_vals = y0_vals;
    bool annihilated = false;

    // Deflation rounds. A canonical-basis probe can underestimate the
    // generator: F then properly divides the minimal polynomial of the
    // current vector and F(A)·cur is a non-zero residual whose minimal
    // polynomial is the missing cofactor. Each round shrinks that cofactor
    // by at least one degree, so the loop terminates with a residual of
    // zero and a full annihilator of y.
    for (int round = 0; round < 32 && !all_zero(cur_vals); ++round) {
      std::uint32_t x_index = static_cast<std::uint32_t>(xrng() % N);
      while (cur_vals[x_index] == 0) x_index = (x_index + 1) % N;

      const RnsVector y = rns_vector_from_ints(b, cur_vals);
      std::vector<BigInt> seq;
      RnsVector v;
      std::uint64_t t0 = 0;
      const bool resuming =
          opt.resume && attempt == first_attempt && round == 0;
      if (resuming) {
        x_index = opt.resume->x_index;
        seq = opt.resume->sequence;
        v = rns_vector_from_ints(b, opt.resume->vector_vals);
        t0 = opt.resume->iter;
      } else {
        seq.push_back(cur_vals[x_index]);
        v = y;
      }

      auto tk = std::chrono::steady_clock::now();
      for (std::uint64_t t = t0 + 1; t < L; ++t) {
        normalize_vector(b, v);
        v = spmv(A, v, b, opt.plan);
        if (t % f == 0) reduce_vector(b, v);
        seq.push_back(extract_coord(b, v, x_index));
        ++res.report.krylov_iterations;

        const bool at_interval = round == 0 && opt.checkpoint_interval > 0 &&
                                 !opt.checkpoint_path.empty() &&
                                 t % opt.checkpoint_interval == 0;
        const bool stopping = round == 0 && opt.stop_after > 0 &&
                              t >= opt.stop_after && t + 1 < L;
        if (at_interval || stopping) {
          RnsVector snap = v;
          canonicalize_vector(b, snap);
          Checkpoint ck;
          ck.basis_desc = basis_to_string(b);
          ck.n_rows = N;
          ck.seed = opt.seed;
          ck.attempt = attempt;
          ck.x_index = x_index;
          ck.iter = t;
          ck.sequence = seq;
          ck.vector_vals = canonical_values(b, snap);
          if (!opt.checkpoint_path.empty()) save_checkpoint(ck, opt.checkpoint_path);
          if (stopping) {
            res.report.krylov_seconds += seconds_since(tk);
            res.report.stopped = true;
            return res;
          }
        }
      }
      res.report.krylov_seconds += seconds_since(tk);
      res.report.sequence_length = seq.size();

      auto tb = std::chrono::steady_clock::now();
      const GeneratorPoly F = berlekamp_massey(seq, ell);
      res.report.bm_seconds += seconds_since(tb);
      res.report.bm_degree = F.degree();
      annihilator = poly_mul_mod(annihilator, F.coeff, ell);

      auto tm = std::chrono::steady_clock::now();
      RnsVector w = mksol(A, F, y, b, opt.plan);
      res.report.mksol_iterations += F.degree();
      std::vector<BigInt> w_vals = canonical_values(b, w);
      res.report.mksol_seconds += seconds_since(tm);

      if (all_zero(w_vals)) {
        annihilated = true;
        break;
      }
      if (check_kernel(A, w_vals, ell)) {
        res.success = true;
        res.kernel = std::move(w_vals);
        return res;
      }
      cur_vals = std::move(w_vals);
    }
    if (!annihilated) continue;

    // annihilator(A)·y = 0. Split annihilator = X^v · H with H(0) != 0:
    // u = H(A)·y is non-zero whenever y has a generalized-kernel component,
    // and A^v·u = 0, so the last non-zero vector of u, Au, A^2 u, ... lies
    // in the kernel.
    std::size_t v_mult = 0;
    while (v_mult < annihilator.size() && annihilator[v_mult] == 0) ++v_mult;
    if (v_mult == 0 || v_mult >= annihilator.size()) continue;
    GeneratorPoly H;
    H.coeff.assign(annihilator.begin() + static_cast<std::ptrdiff_t>(v_mult),
                   annihilator.end());

    auto tm = std::chrono::steady_clock::now();
    std::vector<BigInt> u = canonical_values(b, mksol(A, H, y0, b, opt.plan));
    res.report.mksol_iterations += H.degree();
    for (std::size_t j = 0; j < v_mult && !all_zero(u); ++j) {
      if (check_kernel(A, u, ell)) {
        res.report.used_fallback = true;
        res.report.mksol_seconds += seconds_since(tm);
        res.success = true;
        res.kernel = std::move(u);
        return res;
      }
      u = oracle_spmv_mod(A, u, ell);
    }
    res.report.mksol_seconds += seconds_since(tm);
  }
  return res;  // retries exhausted; success stays false
}

BlockSequence block_krylov(const CsrMatrix& A, int m, int n_blk,
                           const std::vector<std::uint64_t>& y_seeds,
                           const RnsBasis& b, const SpmvPlan& plan) {
  if (m < 1 || m > 64 || n_blk < 1 || n_blk > 64)
    throw std::invalid_argument("blocking parameter out of range");
  if (y_seeds.size() != static_cast<std::size_t>(n_blk))
    throw std::invalid_argument("one seed per right-hand block required");
  if (A.n_rows != A.n_cols) throw std::invalid_argument("matrix must be square");
  if (static_cast<std::uint32_t>(m) > A.n_rows)
    throw std::invalid_argument("blocking parameter out of range");

  const std::uint32_t N = A.n_rows;
  const std::uint64_t terms = (N + n_blk - 1) / n_blk + (N + m - 1) / m + 16;
  BlockSequence seq;
  seq.m = m;
  seq.n_blk = n_blk;
  seq.terms.assign(terms, std::vector<BigInt>(static_cast<std::size_t>(m) * n_blk,
                                              BigInt(0)));

  const std::uint64_t f =
      plan.reduce_every > 0 ? static_cast<std::uint64_t>(plan.reduce_every) : 1;
  // One worker per right-hand vector; each writes only its own column cells.
  auto run_column = [&](int v_idx) {
    RnsVector v = rns_vector_from_ints(b, derive_y(b.ell, N, y_seeds[v_idx]));
    for (std::uint64_t t = 0; t < terms; ++t) {
      for (int u = 0; u < m; ++u)
        seq.terms[t][static_cast<std::size_t>(u) * n_blk + v_idx] =
            extract_coord(b, v, static_cast<std::uint32_t>(u));
      if (t + 1 == terms) break;
      normalize_vector(b, v);
      v = spmv(A, v, b, plan);
      if ((t + 1) % f == 0) reduce_vector(b, v);
    }
  };
  if (n_blk == 1) {
    run_column(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_blk);
    for (int v_idx = 0; v_idx < n_blk; ++v_idx) pool.emplace_back(run_column, v_idx);
    for (auto& th : pool) th.join();
  }
  return seq;
}

}  // namespace rnsla
