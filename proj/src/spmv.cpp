#include "rnsla/spmv.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace rnsla {

namespace {

int category_rank(std::int32_t v) {
  if (v == 1) return 0;
  if (v == -1) return 1;
  return v > 0 ? 2 : 3;
}

struct OpsInt {
  static std::uint64_t add(std::uint64_t, std::uint64_t c, std::uint64_t x,
                           std::uint64_t y) {
    return rns_add_u64(c, x, y);
  }
  static std::uint64_t sub(std::uint64_t p, std::uint64_t c, std::uint64_t x,
                           std::uint64_t y) {
    return rns_sub_u64(p, c, x, y);
  }
  static std::uint64_t addmul(std::uint64_t, std::uint64_t c, std::uint64_t x,
                              std::uint64_t lam, std::uint64_t y) {
    return rns_addmul_u64(c, x, lam, y);
  }
  static std::uint64_t submul(std::uint64_t p, std::uint64_t c, std::uint64_t x,
                              std::uint64_t lam, std::uint64_t y) {
    return rns_submul_u64(p, c, x, lam, y);
  }
};

struct OpsF52 {
  static std::uint64_t add(std::uint64_t p, std::uint64_t, std::uint64_t x,
                           std::uint64_t y) {
    return static_cast<std::uint64_t>(rns_add_f52(
        static_cast<double>(p), static_cast<double>(x), static_cast<double>(y)));
  }
  static std::uint64_t sub(std::uint64_t p, std::uint64_t, std::uint64_t x,
                           std::uint64_t y) {
    return static_cast<std::uint64_t>(rns_sub_f52(
        static_cast<double>(p), static_cast<double>(x), static_cast<double>(y)));
  }
  static std::uint64_t addmul(std::uint64_t p, std::uint64_t c, std::uint64_t x,
                              std::uint64_t lam, std::uint64_t y) {
    return static_cast<std::uint64_t>(rns_addmul_f52(
        static_cast<double>(p), static_cast<double>(c), static_cast<double>(x),
        static_cast<double>(lam), static_cast<double>(y)));
  }
  static std::uint64_t submul(std::uint64_t p, std::uint64_t c, std::uint64_t x,
                              std::uint64_t lam, std::uint64_t y) {
    return static_cast<std::uint64_t>(rns_submul_f52(
        static_cast<double>(p), static_cast<double>(c), static_cast<double>(x),
        static_cast<double>(lam), static_cast<double>(y)));
  }
};

template <typename Ops>
void accum(const RnsBasis& b, std::uint64_t* dst, const std::uint64_t* src,
           std::int32_t v, int j0, int j1) {
  if (v == 1) {
    for (int j = j0; j < j1; ++j) dst[j] = Ops::add(b.p[j], b.c[j], dst[j], src[j]);
  } else if (v == -1) {
    for (int j = j0; j < j1; ++j) dst[j] = Ops::sub(b.p[j], b.c[j], dst[j], src[j]);
  } else if (v > 1) {
    const std::uint64_t lam = static_cast<std::uint64_t>(v);
    for (int j = j0; j < j1; ++j)
      dst[j] = Ops::addmul(b.p[j], b.c[j], dst[j], lam, src[j]);
  } else {
    const std::uint64_t lam = static_cast<std::uint64_t>(-static_cast<std::int64_t>(v));
    for (int j = j0; j < j1; ++j)
      dst[j] = Ops::submul(b.p[j], b.c[j], dst[j], lam, src[j]);
  }
}

// ---- per-format row kernels (canonical order: category blocks, column
// order inside a block) ----

template <typename Ops>
void rows_csr(const CsrMatrix& m, const RnsBasis& b, const RnsVector& src,
              RnsVector& dst, std::uint32_t r0, std::uint32_t r1, int j0, int j1) {
  for (std::uint32_t r = r0; r < r1; ++r) {
    std::uint64_t* d = dst.element(r);
    for (int cat = 0; cat < 4; ++cat)
      for (std::uint64_t e = m.ptr[r]; e < m.ptr[r + 1]; ++e)
        if (category_rank(m.data[e]) == cat)
          accum<Ops>(b, d, src.element(m.id[e]), m.data[e], j0, j1);
  }
}

template <typename Ops>
void rows_compressed(const CompressedCsrMatrix& m, const RnsBasis& b,
                     const RnsVector& src, RnsVector& dst, std::uint32_t r0,
                     std::uint32_t r1, int j0, int j1) {
  for (std::uint32_t r = r0; r < r1; ++r) {
    std::uint64_t* d = dst.element(r);
    std::uint64_t e = m.ptr[r];
    const std::uint64_t dd = m.ptr_data[r];
    const std::int32_t n_plus = m.data[dd];
    const std::int32_t n_minus = m.data[dd + 1];
    for (std::int32_t i = 0; i < n_plus; ++i, ++e)
      accum<Ops>(b, d, src.element(m.id[e]), 1, j0, j1);
    for (std::int32_t i = 0; i < n_minus; ++i, ++e)
      accum<Ops>(b, d, src.element(m.id[e]), -1, j0, j1);
    for (std::uint64_t t = dd + 2; t < m.ptr_data[r + 1]; ++t, ++e)
      accum<Ops>(b, d, src.element(m.id[e]), m.data[t], j0, j1);
  }
}

template <typename Ops>
void rows_coo(const CooMatrix& m, const std::vector<std::uint64_t>& rp,
              const RnsBasis& b, const RnsVector& src, RnsVector& dst,
              std::uint32_t r0, std::uint32_t r1, int j0, int j1) {
  for (std::uint32_t r = r0; r < r1; ++r) {
    std::uint64_t* d = dst.element(r);
    for (int cat = 0; cat < 4; ++cat)
      for (std::uint64_t e = rp[r]; e < rp[r + 1]; ++e)
        if (category_rank(m.data[e]) == cat)
          accum<Ops>(b, d, src.element(m.col_id[e]), m.data[e], j0, j1);
  }
}

template <typename Ops>
void slices_slcoo(const SlcooMatrix& m, const RnsBasis& b, const RnsVector& src,
                  RnsVector& dst, std::uint32_t s0, std::uint32_t s1, int j0,
                  int j1) {
  std::vector<std::vector<std::uint64_t>> bucket(m.slice_size);
  for (std::uint32_t sl = s0; sl < s1; ++sl) {
    const std::uint32_t row_begin = sl * m.slice_size;
    for (auto& v : bucket) v.clear();
    // Slice entries are column-sorted, so each bucket ends up column-sorted.
    for (std::uint64_t e = m.ptr_slice[sl]; e < m.ptr_slice[sl + 1]; ++e)
      bucket[m.row_id[e] - row_begin].push_back(e);
    for (std::uint32_t i = 0; i < m.slice_size; ++i) {
      if (bucket[i].empty()) continue;
      std::uint64_t* d = dst.element(row_begin + i);
      for (int cat = 0; cat < 4; ++cat)
        for (std::uint64_t e : bucket[i])
          if (category_rank(m.data[e]) == cat)
            accum<Ops>(b, d, src.element(m.col_id[e]), m.data[e], j0, j1);
    }
  }
}

template <typename Ops>
void rows_ell(const EllMatrix& m, const RnsBasis& b, const RnsVector& src,
              RnsVector& dst, std::uint32_t r0, std::uint32_t r1, int j0, int j1) {
  for (std::uint32_t r = r0; r < r1; ++r) {
    std::uint64_t* d = dst.element(r);
    const std::size_t base = static_cast<std::size_t>(r) * m.width;
    for (int cat = 0; cat < 4; ++cat)
      for (std::uint32_t kk = 0; kk < m.width; ++kk) {
        const std::int32_t v = m.data[base + kk];
        if (v == 0 || category_rank(v) != cat) continue;
        accum<Ops>(b, d, src.element(m.id[base + kk]), v, j0, j1);
      }
  }
}

template <typename Ops>
void rows_hybrid(const HybridMatrix& m, const std::vector<std::uint64_t>& rp,
                 const RnsBasis& b, const RnsVector& src, RnsVector& dst,
                 std::uint32_t r0, std::uint32_t r1, int j0, int j1) {
  const EllMatrix& ell = m.ell;
  for (std::uint32_t r = r0; r < r1; ++r) {
    std::uint64_t* d = dst.element(r);
    const std::size_t base = static_cast<std::size_t>(r) * ell.width;
    for (int cat = 0; cat < 4; ++cat) {
      for (std::uint32_t kk = 0; kk < ell.width; ++kk) {
        const std::int32_t v = ell.data[base + kk];
        if (v == 0 || category_rank(v) != cat) continue;
        accum<Ops>(b, d, src.element(ell.id[base + kk]), v, j0, j1);
      }
      for (std::uint64_t e = rp[r]; e < rp[r + 1]; ++e)
        if (category_rank(m.tail.data[e]) == cat)
          accum<Ops>(b, d, src.element(m.tail.col_id[e]), m.tail.data[e], j0, j1);
    }
  }
}

// ---- driver ----

std::vector<std::uint64_t> row_offsets(const std::vector<std::uint32_t>& row_id,
                                       std::uint32_t n_rows) {
  std::vector<std::uint64_t> rp(n_rows + 1, 0);
  for (std::uint32_t r : row_id) rp[r + 1]++;
  for (std::uint32_t r = 0; r < n_rows; ++r) rp[r + 1] += rp[r];
  return rp;
}

void check_src(const RnsVector& src, std::size_t cols, const RnsBasis& b) {
  if (src.size() != cols) throw std::invalid_argument("dimension mismatch");
  if (src.n != b.n) throw std::invalid_argument("residue count mismatch");
}

// Runs fn(chunk_begin, chunk_end, j0, j1) on every worker. RowBlocks splits
// [0, units) across workers with all channels; ResidueChannels gives every
// worker all units and a channel sub-range.
template <typename Fn>
void dispatch(const SpmvPlan& plan, std::uint32_t units, int n_residues, Fn fn) {
  const int w = std::max(1, plan.workers);
  if (w == 1) {
    fn(0u, units, 0, n_residues);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (int i = 0; i < w; ++i) {
    std::uint32_t u0, u1;
    int j0, j1;
    if (plan.partition == WorkPartition::RowBlocks) {
      u0 = static_cast<std::uint32_t>(static_cast<std::uint64_t>(units) * i / w);
      u1 = static_cast<std::uint32_t>(static_cast<std::uint64_t>(units) * (i + 1) / w);
      j0 = 0;
      j1 = n_residues;
    } else {
      u0 = 0;
      u1 = units;
      j0 = n_residues * i / w;
      j1 = n_residues * (i + 1) / w;
    }
    if (u0 == u1 || j0 == j1) continue;
    pool.emplace_back(fn, u0, u1, j0, j1);
  }
  for (auto& t : pool) t.join();
}

}  // namespace

RnsVector spmv(const CsrMatrix& m, const RnsVector& src, const RnsBasis& b,
               const SpmvPlan& plan) {
  check_src(src, m.n_cols, b);
  RnsVector dst(m.n_rows, b.n);
  dispatch(plan, m.n_rows, b.n,
           [&](std::uint32_t r0, std::uint32_t r1, int j0, int j1) {
             if (b.flavor == RnsFlavor::Int64)
               rows_csr<OpsInt>(m, b, src, dst, r0, r1, j0, j1);
             else
               rows_csr<OpsF52>(m, b, src, dst, r0, r1, j0, j1);
           });
  return dst;
}

RnsVector spmv(const CompressedCsrMatrix& m, const RnsVector& src,
               const RnsBasis& b, const SpmvPlan& plan) {
  check_src(src, m.n_cols, b);
  RnsVector dst(m.n_rows, b.n);
  dispatch(plan, m.n_rows, b.n,
           [&](std::uint32_t r0, std::uint32_t r1, int j0, int j1) {
             if (b.flavor == RnsFlavor::Int64)
               rows_compressed<OpsInt>(m, b, src, dst, r0, r1, j0, j1);
             else
               rows_compressed<OpsF52>(m, b, src, dst, r0, r1, j0, j1);
           });
  return dst;
}

RnsVector spmv(const CooMatrix& m, const RnsVector& src, const RnsBasis& b,
               const SpmvPlan& plan) {
  check_src(src, m.n_cols, b);
  RnsVector dst(m.n_rows, b.n);
  const auto rp = row_offsets(m.row_id, m.n_rows);
  dispatch(plan, m.n_rows, b.n,
           [&](std::uint32_t r0, std::uint32_t r1, int j0, int j1) {
             if (b.flavor == RnsFlavor::Int64)
               rows_coo<OpsInt>(m, rp, b, src, dst, r0, r1, j0, j1);
             else
               rows_coo<OpsF52>(m, rp, b, src, dst, r0, r1, j0, j1);
           });
  return dst;
}

RnsVector spmv(const SlcooMatrix& m, const RnsVector& src, const RnsBasis& b,
               const SpmvPlan& plan) {
  check_src(src, m.n_cols, b);
  RnsVector dst(m.n_rows, b.n);
  // Workers own whole slices so rows never straddle a boundary.
  dispatch(plan, m.slice_count(), b.n,
           [&](std::uint32_t s0, std::uint32_t s1, int j0, int j1) {
             if (b.flavor == RnsFlavor::Int64)
               slices_slcoo<OpsInt>(m, b, src, dst, s0, s1, j0, j1);
             else
               slices_slcoo<OpsF52>(m, b, src, dst, s0, s1, j0, j1);
           });
  return dst;
}

RnsVector spmv(const EllMatrix& m, const RnsVector& src, const RnsBasis& b,
               const SpmvPlan& plan) {
  check_src(src, m.n_cols, b);
  RnsVector dst(m.n_rows, b.n);
  dispatch(plan, m.n_rows, b.n,
           [&](std::uint32_t r0, std::uint32_t r1, int j0, int j1) {
             if (b.flavor == RnsFlavor::Int64)
               rows_ell<OpsInt>(m, b, src, dst, r0, r1, j0, j1);
             else
               rows_ell<OpsF52>(m, b, src, dst, r0, r1, j0, j1);
           });
  return dst;
}

RnsVector spmv(const HybridMatrix& m, const RnsVector& src, const RnsBasis& b,
               const SpmvPlan& plan) {
  check_src(src, m.ell.n_cols, b);
  RnsVector dst(m.ell.n_rows, b.n);
  const auto rp = row_offsets(m.tail.row_id, m.ell.n_rows);
  dispatch(plan, m.ell.n_rows, b.n,
           [&](std::uint32_t r0, std::uint32_t r1, int j0, int j1) {
             if (b.flavor == RnsFlavor::Int64)
               rows_hybrid<OpsInt>(m, rp, b, src, dst, r0, r1, j0, j1);
             else
               rows_hybrid<OpsF52>(m, rp, b, src, dst, r0, r1, j0, j1);
           });
  return dst;
}

void normalize_vector(const RnsBasis& b, RnsVector& v) {
  for (std::size_t i = 0; i < v.size(); ++i) normalize_in_place(b, v.element(i));
}

void reduce_vector(const RnsBasis& b, RnsVector& v) {
  std::vector<std::uint64_t> gamma(b.n);
  for (std::size_t i = 0; i < v.size(); ++i)
    rns_mod_reduce_in_place(b, v.element(i), gamma.data());
}

void canonicalize_vector(const RnsBasis& b, RnsVector& v) {
  std::vector<std::uint64_t> gamma(b.n);
  RnsElement e;
  e.residues.resize(b.n);
  for (std::size_t i = 0; i < v.size(); ++i) {
    rns_mod_reduce_in_place(b, v.element(i), gamma.data());
    std::copy(v.element(i), v.element(i) + b.n, e.residues.begin());
    BigInt value = oracle_mod(int_from_rns(b, e), b.ell);
    RnsElement canon = rns_from_int(b, value);
    std::copy(canon.residues.begin(), canon.residues.end(), v.element(i));
  }
}

RnsVector rns_vector_from_ints(const RnsBasis& b, const std::vector<BigInt>& v) {
  RnsVector out(v.size(), b.n);
  for (std::size_t i = 0; i < v.size(); ++i) {
    RnsElement e = rns_from_int(b, v[i]);
    std::copy(e.residues.begin(), e.residues.end(), out.element(i));
  }
  return out;
}

std::vector<BigInt> ints_from_rns_vector(const RnsBasis& b, const RnsVector& v) {
  std::vector<BigInt> out;
  out.reserve(v.size());
  RnsElement e;
  e.residues.resize(b.n);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::copy(v.element(i), v.element(i) + b.n, e.residues.begin());
    out.push_back(int_from_rns(b, e));
  }
  return out;
}

std::uint64_t logical_nnz(const CsrMatrix& m) { return m.nnz(); }
std::uint64_t logical_nnz(const CompressedCsrMatrix& m) { return m.nnz(); }
std::uint64_t logical_nnz(const CooMatrix& m) { return m.nnz(); }
std::uint64_t logical_nnz(const SlcooMatrix& m) { return m.nnz(); }
std::uint64_t logical_nnz(const EllMatrix& m) {
  std::uint64_t count = 0;
  for (std::int32_t v : m.data) count += v != 0;
  return count;
}
std::uint64_t logical_nnz(const HybridMatrix& m) {
  return logical_nnz(m.ell) + m.tail.nnz();
}

}  // namespace rnsla
