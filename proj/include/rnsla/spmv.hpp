#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "rnsla/bigint.hpp"
#include "rnsla/matrix.hpp"
#include "rnsla/rns.hpp"

namespace rnsla {

// Work partitioning across workers. RowBlocks gives each worker a block of
// destination rows with all residue channels; ResidueChannels gives each
// worker a block of residue channels across all rows. Outputs are
// bit-identical either way: every destination residue is written by exactly
// one worker, in the canonical per-row accumulation order (category blocks
// +1, -1, >1, <-1, column order inside each block).
enum class WorkPartition { RowBlocks, ResidueChannels };

struct SpmvPlan {
  int workers = 1;
  WorkPartition partition = WorkPartition::RowBlocks;
  int reduce_every = 1;        // F, from max_accumulation_count
  std::uint64_t row_norm = 0;  // r backing the schedule; 0 disables the guard
};

struct IterationStats {
  std::uint64_t spmv_calls = 0;
  std::uint64_t reductions = 0;  // scheduled full-vector reductions
  double reduce_seconds = 0.0;
  bool overflow_guard_tripped = false;
};

// Operation accounting follows the 2 * n_NZ * 2 * n convention.
struct ThroughputReport {
  std::uint64_t iterations = 0;
  std::uint64_t nnz = 0;
  int residues = 0;
  int reduce_every = 1;
  std::uint64_t ops_per_iteration = 0;
  std::uint64_t total_ops = 0;
  std::uint64_t reduce_count = 0;
  double wall_seconds = 0.0;
  double per_iteration_seconds = 0.0;
  double ops_per_second = 0.0;
  double reduction_seconds = 0.0;
  double reduction_share = 0.0;  // fraction of wall time in the reduction
};

// One SpMV pass: dst = A * src in un-reduced relaxed RNS form. src must be
// normalized (every residue < p_j); dst residues stay < 2^k.
RnsVector spmv(const CsrMatrix& m, const RnsVector& src, const RnsBasis& b,
               const SpmvPlan& plan);
RnsVector spmv(const CompressedCsrMatrix& m, const RnsVector& src,
               const RnsBasis& b, const SpmvPlan& plan);
RnsVector spmv(const CooMatrix& m, const RnsVector& src, const RnsBasis& b,
               const SpmvPlan& plan);
RnsVector spmv(const SlcooMatrix& m, const RnsVector& src, const RnsBasis& b,
               const SpmvPlan& plan);
RnsVector spmv(const EllMatrix& m, const RnsVector& src, const RnsBasis& b,
               const SpmvPlan& plan);
RnsVector spmv(const HybridMatrix& m, const RnsVector& src, const RnsBasis& b,
               const SpmvPlan& plan);

void normalize_vector(const RnsBasis& b, RnsVector& v);
void reduce_vector(const RnsBasis& b, RnsVector& v);
// Exact reduction of every element to its canonical representative in
// [0, ell).
void canonicalize_vector(const RnsBasis& b, RnsVector& v);

RnsVector rns_vector_from_ints(const RnsBasis& b, const std::vector<BigInt>& v);
// CRT values of the elements (after normalization), not reduced mod ell.
std::vector<BigInt> ints_from_rns_vector(const RnsBasis& b, const RnsVector& v);

std::uint64_t logical_nnz(const CsrMatrix& m);
std::uint64_t logical_nnz(const CompressedCsrMatrix& m);
std::uint64_t logical_nnz(const CooMatrix& m);
std::uint64_t logical_nnz(const SlcooMatrix& m);
std::uint64_t logical_nnz(const EllMatrix& m);  // padding excluded
std::uint64_t logical_nnz(const HybridMatrix& m);

inline std::size_t logical_cols(const CsrMatrix& m) { return m.n_cols; }
inline std::size_t logical_cols(const CompressedCsrMatrix& m) { return m.n_cols; }
inline std::size_t logical_cols(const CooMatrix& m) { return m.n_cols; }
inline std::size_t logical_cols(const SlcooMatrix& m) { return m.n_cols; }
inline std::size_t logical_cols(const EllMatrix& m) { return m.n_cols; }
inline std::size_t logical_cols(const HybridMatrix& m) { return m.ell.n_cols; }

// t applications of A with the deferred-reduction schedule: a full-vector
// reduction every plan.reduce_every iterations and an exact canonical
// reduction at the end. v0 must be canonical (values < ell).
template <typename Matrix>
RnsVector spmv_iterate(const Matrix& m, const RnsVector& v0, std::uint64_t t,
                       const RnsBasis& b, const SpmvPlan& plan,
                       IterationStats* stats = nullptr) {
  RnsVector v = v0;
  if (t == 0) return v;
  IterationStats local;
  IterationStats& st = stats ? *stats : local;
  const BigInt limit = b.accumulation_limit();
  BigInt bound = b.ell;  // canonical input
  const int f = plan.reduce_every > 0 ? plan.reduce_every : 1;
  for (std::uint64_t it = 1; it <= t; ++it) {
    normalize_vector(b, v);
    if (plan.row_norm > 0) {
      bound *= static_cast<unsigned long>(plan.row_norm);
      if (bound > limit) st.overflow_guard_tripped = true;
    }
    v = spmv(m, v, b, plan);
    ++st.spmv_calls;
    if (it % static_cast<std::uint64_t>(f) == 0) {
      auto t0 = std::chrono::steady_clock::now();
      reduce_vector(b, v);
      st.reduce_seconds +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      ++st.reductions;
      bound = b.reduce_output_bound();
    }
  }
  canonicalize_vector(b, v);
  return v;
}

// Timed iteration run; v0 is derived deterministically from `seed`.
template <typename Matrix>
ThroughputReport benchmark(const Matrix& m, const RnsBasis& b,
                           const SpmvPlan& plan, std::uint64_t iterations,
                           std::uint64_t seed = 1) {
  if (iterations < 1) throw std::invalid_argument("iteration count must be positive");
  std::vector<BigInt> init;
  std::mt19937_64 rng(seed);
  const std::size_t cols = logical_cols(m);
  init.reserve(cols);
  for (std::size_t i = 0; i < cols; ++i) init.push_back(random_below(rng, b.ell));
  RnsVector v0 = rns_vector_from_ints(b, init);

  IterationStats stats;
  auto t0 = std::chrono::steady_clock::now();
  RnsVector out = spmv_iterate(m, v0, iterations, b, plan, &stats);
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  (void)out;

  ThroughputReport rep;
  rep.iterations = iterations;
  rep.nnz = logical_nnz(m);
  rep.residues = b.n;
  rep.reduce_every = plan.reduce_every;
  rep.ops_per_iteration = 2 * rep.nnz * 2 * static_cast<std::uint64_t>(b.n);
  rep.total_ops = rep.ops_per_iteration * iterations;
  rep.reduce_count = stats.reductions;
  rep.wall_seconds = wall;
  rep.per_iteration_seconds = wall / static_cast<double>(iterations);
  rep.ops_per_second = wall > 0 ? static_cast<double>(rep.total_ops) / wall : 0.0;
  rep.reduction_seconds = stats.reduce_seconds;
  rep.reduction_share = wall > 0 ? stats.reduce_seconds / wall : 0.0;
  return rep;
}

}  // namespace rnsla
