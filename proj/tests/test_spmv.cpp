#include <doctest.h>

#include <random>

#include "rnsla/matrix.hpp"
#include "rnsla/oracle.hpp"
#include "rnsla/spmv.hpp"

using namespace rnsla;

namespace {

BigInt prime_above(int bits) {
  BigInt p;
  mpz_nextprime(p.get_mpz_t(), BigInt(BigInt(1) << bits).get_mpz_t());
  return p;
}

CooMatrix gen(std::uint32_t n, std::uint64_t seed, double pct_pm1 = 0.85,
              std::int32_t max_coeff = 9) {
  GeneratorParams gp;
  gp.n = n;
  gp.mean_row_weight = 6;
  gp.pct_pm1 = pct_pm1;
  gp.max_coeff = max_coeff;
  gp.seed = seed;
  return gen_ffs_like(gp);
}

std::vector<BigInt> random_vec(std::size_t n, const BigInt& ell, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<BigInt> v;
  v.reserve(n);
  for (std::size_t i = 0; i < n; ++i) v.push_back(random_below(rng, ell));
  return v;
}

std::vector<BigInt> canonical_ints(const RnsBasis& b, RnsVector v) {
  reduce_vector(b, v);
  canonicalize_vector(b, v);
  return ints_from_rns_vector(b, v);
}

}  // namespace

TEST_CASE("spmv on the identity returns the input") {
  const BigInt ell = prime_above(216);
  for (RnsFlavor flavor : {RnsFlavor::Int64, RnsFlavor::Float52}) {
    const int k = flavor == RnsFlavor::Int64 ? 64 : 52;
    const RnsBasis b = build_basis(ell, 1, k, flavor);
    CooMatrix id;
    id.n_rows = id.n_cols = 5;
    for (std::uint32_t i = 0; i < 5; ++i) {
      id.row_id.push_back(i);
      id.col_id.push_back(i);
      id.data.push_back(1);
    }
    const std::vector<BigInt> ints = random_vec(5, ell, 2);
    const RnsVector src = rns_vector_from_ints(b, ints);
    const RnsVector dst = spmv(id, src, b, SpmvPlan{});
    CHECK(dst.residues == src.residues);
  }
}

TEST_CASE("opposite unit coefficients cancel exactly") {
  const BigInt ell = prime_above(160);
  const RnsBasis b = build_basis(ell, 2, 64, RnsFlavor::Int64);
  CooMatrix m;
  m.n_rows = 1;
  m.n_cols = 2;
  m.row_id = {0, 0};
  m.col_id = {0, 1};
  m.data = {1, -1};
  const std::vector<BigInt> ints{ell - 1, ell - 1};
  const RnsVector src = rns_vector_from_ints(b, ints);
  RnsVector dst = spmv(csr_to_coo(coo_to_csr(m)), src, b, SpmvPlan{});
  // relaxed residues, but every channel is congruent to zero
  for (int j = 0; j < b.n; ++j)
    CHECK(dst.element(0)[j] % b.p[j] == 0);
  CHECK(canonical_ints(b, dst) == std::vector<BigInt>{0});
}

TEST_CASE("all formats agree residue-for-residue and match the oracle") {
  const BigInt ell = prime_above(216);
  for (RnsFlavor flavor : {RnsFlavor::Int64, RnsFlavor::Float52}) {
    const int k = flavor == RnsFlavor::Int64 ? 64 : 52;
    const CooMatrix coo = gen(120, 7 + (flavor == RnsFlavor::Float52));
    const MatrixStats st = matrix_stats(coo);
    const RnsBasis b = build_basis(ell, st.max_row_norm, k, flavor);
    const CsrMatrix csr = coo_to_csr(coo);

    const std::vector<BigInt> ints = random_vec(120, ell, 11);
    const RnsVector src = rns_vector_from_ints(b, ints);
    SpmvPlan plan;
    const RnsVector ref = spmv(csr, src, b, plan);

    CHECK(spmv(coo, src, b, plan).residues == ref.residues);
    for (std::uint32_t slice : {2u, 4u, 8u})
      CHECK(spmv(csr_to_slcoo(csr, slice), src, b, plan).residues == ref.residues);
    std::uint32_t max_len = 0;
    for (std::uint32_t r = 0; r < csr.n_rows; ++r)
      max_len = std::max<std::uint32_t>(max_len, csr.row_len(r));
    CHECK(spmv(csr_to_ell(csr, max_len + 2), src, b, plan).residues == ref.residues);
    CHECK(spmv(split_hybrid(csr, choose_hybrid_k(csr)), src, b, plan).residues ==
          ref.residues);
    const CsrMatrix reord = reorder_row_categories(csr);
    CHECK(spmv(reord, src, b, plan).residues == ref.residues);
    CHECK(spmv(compress_values(reord), src, b, plan).residues == ref.residues);

    CHECK(canonical_ints(b, ref) == oracle_spmv_mod(coo, ints, ell));
  }
}

TEST_CASE("worker count and partition never change the output") {
  const BigInt ell = prime_above(320);
  const CooMatrix coo = gen(90, 13);
  const MatrixStats st = matrix_stats(coo);
  const RnsBasis b = build_basis(ell, st.max_row_norm, 64, RnsFlavor::Int64);
  const CsrMatrix csr = coo_to_csr(coo);
  const RnsVector src = rns_vector_from_ints(b, random_vec(90, ell, 17));

  SpmvPlan base;
  const RnsVector ref = spmv(csr, src, b, base);
  const SlcooMatrix sl = csr_to_slcoo(csr, 4);
  for (int workers : {1, 2, 3, 5, 8}) {
    for (WorkPartition part :
         {WorkPartition::RowBlocks, WorkPartition::ResidueChannels}) {
      SpmvPlan plan;
      plan.workers = workers;
      plan.partition = part;
      CHECK(spmv(csr, src, b, plan).residues == ref.residues);
      CHECK(spmv(sl, src, b, plan).residues == ref.residues);
    }
  }
}

TEST_CASE("balanced row permutation permutes the output accordingly") {
  const BigInt ell = prime_above(216);
  const CooMatrix coo = gen(64, 23);
  const MatrixStats st = matrix_stats(coo);
  const RnsBasis b = build_basis(ell, st.max_row_norm, 64, RnsFlavor::Int64);
  const CsrMatrix csr = coo_to_csr(coo);
  const auto [perm_csr, perm] = permute_rows_balanced(csr, 4);
  const std::vector<BigInt> ints = random_vec(64, ell, 29);
  const RnsVector src = rns_vector_from_ints(b, ints);
  SpmvPlan plan;
  plan.workers = 4;
  const std::vector<BigInt> plain = canonical_ints(b, spmv(csr, src, b, plan));
  const std::vector<BigInt> permuted =
      canonical_ints(b, spmv(perm_csr, src, b, plan));
  for (std::uint32_t i = 0; i < 64; ++i) CHECK(permuted[i] == plain[perm[i]]);
}

TEST_CASE("spmv_iterate matches repeated oracle application") {
  const BigInt ell = prime_above(202);
  const CooMatrix coo = gen(70, 31);
  const MatrixStats st = matrix_stats(coo);
  const RnsBasis b = build_basis(ell, st.max_row_norm, 64, RnsFlavor::Int64);
  const CsrMatrix csr = coo_to_csr(coo);
  SpmvPlan plan;
  plan.reduce_every = max_accumulation_count(b, st.max_row_norm);
  plan.row_norm = st.max_row_norm;

  const std::vector<BigInt> ints = random_vec(70, ell, 37);
  const RnsVector v0 = rns_vector_from_ints(b, ints);

  // t = 0 is the identity
  CHECK(spmv_iterate(csr, v0, 0, b, plan).residues == v0.residues);

  std::vector<BigInt> expect = ints;
  for (int t = 1; t <= 10; ++t) {
    expect = oracle_spmv_mod(coo, expect, ell);
    IterationStats stats;
    const RnsVector out = spmv_iterate(csr, v0, t, b, plan, &stats);
    CHECK(ints_from_rns_vector(b, out) == expect);
    CHECK(stats.spmv_calls == static_cast<std::uint64_t>(t));
    CHECK(stats.reductions == static_cast<std::uint64_t>(t / plan.reduce_every));
    CHECK(!stats.overflow_guard_tripped);
  }
}

TEST_CASE("iteration is linear") {
  const BigInt ell = prime_above(160);
  const CooMatrix coo = gen(40, 41);
  const MatrixStats st = matrix_stats(coo);
  const RnsBasis b = build_basis(ell, st.max_row_norm, 64, RnsFlavor::Int64);
  const CsrMatrix csr = coo_to_csr(coo);
  SpmvPlan plan;
  plan.reduce_every = max_accumulation_count(b, st.max_row_norm);

  const std::vector<BigInt> u = random_vec(40, ell, 43);
  const std::vector<BigInt> v = random_vec(40, ell, 47);
  std::vector<BigInt> sum;
  for (int i = 0; i < 40; ++i) sum.push_back(oracle_mod(u[i] + v[i], ell));

  const auto au = ints_from_rns_vector(
      b, spmv_iterate(csr, rns_vector_from_ints(b, u), 5, b, plan));
  const auto av = ints_from_rns_vector(
      b, spmv_iterate(csr, rns_vector_from_ints(b, v), 5, b, plan));
  const auto asum = ints_from_rns_vector(
      b, spmv_iterate(csr, rns_vector_from_ints(b, sum), 5, b, plan));
  for (int i = 0; i < 40; ++i) CHECK(asum[i] == oracle_mod(au[i] + av[i], ell));
}

TEST_CASE("overflow guard trips when the schedule is too lax") {
  const BigInt ell = prime_above(216);
  const CooMatrix coo = gen(40, 53, 0.5, 40);
  const MatrixStats st = matrix_stats(coo);
  const RnsBasis b = build_basis(ell, st.max_row_norm, 64, RnsFlavor::Int64);
  const int f = max_accumulation_count(b, st.max_row_norm);
  SpmvPlan plan;
  plan.reduce_every = f + 1;  // one step beyond the proven bound
  plan.row_norm = st.max_row_norm;
  IterationStats stats;
  spmv_iterate(coo_to_csr(coo), rns_vector_from_ints(b, random_vec(40, ell, 59)),
               2 * (static_cast<std::uint64_t>(f) + 1), b, plan, &stats);
  CHECK(stats.overflow_guard_tripped);
}

TEST_CASE("benchmark accounting is exact") {
  const BigInt ell = prime_above(216);
  const CooMatrix coo = gen(80, 61);
  const MatrixStats st = matrix_stats(coo);
  const RnsBasis b = build_basis(ell, st.max_row_norm, 64, RnsFlavor::Int64);
  const CsrMatrix csr = coo_to_csr(coo);
  SpmvPlan plan;
  plan.reduce_every = max_accumulation_count(b, st.max_row_norm);

  const ThroughputReport r10 = benchmark(csr, b, plan, 10);
  CHECK(r10.nnz == coo.nnz());
  CHECK(r10.residues == b.n);
  CHECK(r10.ops_per_iteration ==
        2 * static_cast<std::uint64_t>(coo.nnz()) * 2 *
            static_cast<std::uint64_t>(b.n));
  CHECK(r10.total_ops == r10.ops_per_iteration * 10);
  CHECK(r10.reduce_count == 10u / plan.reduce_every);
  CHECK(r10.wall_seconds > 0.0);

  const ThroughputReport r20 = benchmark(csr, b, plan, 20);
  CHECK(r20.total_ops == 2 * r10.total_ops);

  // padding never enters the accounting
  std::uint32_t max_len = 0;
  for (std::uint32_t r = 0; r < csr.n_rows; ++r)
    max_len = std::max<std::uint32_t>(max_len, csr.row_len(r));
  const ThroughputReport re = benchmark(csr_to_ell(csr, max_len + 5), b, plan, 5);
  CHECK(re.nnz == coo.nnz());

  CHECK_THROWS_AS(benchmark(csr, b, plan, 0), std::invalid_argument);
}

TEST_CASE("dimension mismatch is rejected") {
  const BigInt ell = prime_above(160);
  const RnsBasis b = build_basis(ell, 1, 64, RnsFlavor::Int64);
  const CooMatrix coo = gen(30, 67);
  const RnsVector bad = rns_vector_from_ints(b, random_vec(29, ell, 71));
  CHECK_THROWS_AS(spmv(coo, bad, b, SpmvPlan{}), std::invalid_argument);
  CHECK_THROWS_AS(spmv(coo_to_csr(coo), bad, b, SpmvPlan{}), std::invalid_argument);
}
