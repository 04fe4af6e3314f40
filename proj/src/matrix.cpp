#include "rnsla/matrix.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace rnsla {

namespace {

// Category rank drives the canonical per-row processing order shared by every
// engine: +1, -1, values > 1, values < -1.
int category_rank(std::int32_t v) {
  if (v == 1) return 0;
  if (v == -1) return 1;
  return v > 0 ? 2 : 3;
}

}  // namespace

void validate(const CooMatrix& m) {
  if (m.row_id.size() != m.data.size() || m.col_id.size() != m.data.size())
    throw MatrixIoException(MatrixIoError::Truncated, "triplet arrays disagree in length");
  for (std::size_t e = 0; e < m.nnz(); ++e) {
    if (m.row_id[e] >= m.n_rows || m.col_id[e] >= m.n_cols)
      throw MatrixIoException(MatrixIoError::IndexOutOfRange, "index out of range");
    if (m.data[e] == 0)
      throw MatrixIoException(MatrixIoError::ZeroValue, "explicit zero coefficient");
    if (e > 0) {
      auto prev = std::make_pair(m.row_id[e - 1], m.col_id[e - 1]);
      auto cur = std::make_pair(m.row_id[e], m.col_id[e]);
      if (cur < prev)
        throw MatrixIoException(MatrixIoError::Unsorted, "entries not sorted by (row, col)");
      if (cur == prev)
        throw MatrixIoException(MatrixIoError::Duplicate, "duplicate (row, col) entry");
    }
  }
}

CsrMatrix coo_to_csr(const CooMatrix& m) {
  CsrMatrix out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.ptr.assign(m.n_rows + 1, 0);
  for (std::uint32_t r : m.row_id) out.ptr[r + 1]++;
  for (std::uint32_t r = 0; r < m.n_rows; ++r) out.ptr[r + 1] += out.ptr[r];
  out.id = m.col_id;
  out.data = m.data;
  return out;
}

CooMatrix csr_to_coo(const CsrMatrix& m) {
  CooMatrix out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.row_id.reserve(m.nnz());
  out.col_id.reserve(m.nnz());
  out.data.reserve(m.nnz());
  for (std::uint32_t r = 0; r < m.n_rows; ++r) {
    // Gather the row and restore column order so the COO is canonically sorted
    // even when the source rows are category-ordered.
    std::vector<std::pair<std::uint32_t, std::int32_t>> row;
    for (std::uint64_t e = m.ptr[r]; e < m.ptr[r + 1]; ++e)
      row.emplace_back(m.id[e], m.data[e]);
    std::sort(row.begin(), row.end());
    for (auto& [col, val] : row) {
      out.row_id.push_back(r);
      out.col_id.push_back(col);
      out.data.push_back(val);
    }
  }
  return out;
}

SlcooMatrix csr_to_slcoo(const CsrMatrix& m, std::uint32_t slice_size) {
  if (slice_size == 0) throw std::invalid_argument("slice size must be positive");
  SlcooMatrix out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.slice_size = slice_size;
  const std::uint32_t slices = out.slice_count();
  out.ptr_slice.assign(slices + 1, 0);
  out.row_id.reserve(m.nnz());
  out.col_id.reserve(m.nnz());
  out.data.reserve(m.nnz());
  for (std::uint32_t sl = 0; sl < slices; ++sl) {
    const std::uint32_t row_begin = sl * slice_size;
    const std::uint32_t row_end = std::min(m.n_rows, row_begin + slice_size);
    std::vector<std::size_t> order;  // (col, row) sort over the slice entries
    std::vector<std::uint32_t> rows;
    std::vector<std::uint64_t> offs;
    for (std::uint32_t r = row_begin; r < row_end; ++r)
      for (std::uint64_t e = m.ptr[r]; e < m.ptr[r + 1]; ++e) {
        order.push_back(order.size());
        rows.push_back(r);
        offs.push_back(e);
      }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (m.id[offs[a]] != m.id[offs[b]]) return m.id[offs[a]] < m.id[offs[b]];
      return rows[a] < rows[b];
    });
    for (std::size_t idx : order) {
      out.row_id.push_back(rows[idx]);
      out.col_id.push_back(m.id[offs[idx]]);
      out.data.push_back(m.data[offs[idx]]);
    }
    out.ptr_slice[sl + 1] = out.data.size();
  }
  return out;
}

CooMatrix slcoo_to_coo(const SlcooMatrix& m) {
  CooMatrix out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  std::vector<std::size_t> order(m.nnz());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (m.row_id[a] != m.row_id[b]) return m.row_id[a] < m.row_id[b];
    return m.col_id[a] < m.col_id[b];
  });
  for (std::size_t idx : order) {
    out.row_id.push_back(m.row_id[idx]);
    out.col_id.push_back(m.col_id[idx]);
    out.data.push_back(m.data[idx]);
  }
  return out;
}

EllMatrix csr_to_ell(const CsrMatrix& m, std::uint32_t width) {
  for (std::uint32_t r = 0; r < m.n_rows; ++r)
    if (m.row_len(r) > width) throw std::invalid_argument("row overflow");
  EllMatrix out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.width = width;
  out.id.assign(static_cast<std::size_t>(m.n_rows) * width, 0);
  out.data.assign(static_cast<std::size_t>(m.n_rows) * width, 0);
  for (std::uint32_t r = 0; r < m.n_rows; ++r) {
    std::size_t slot = static_cast<std::size_t>(r) * width;
    for (std::uint64_t e = m.ptr[r]; e < m.ptr[r + 1]; ++e, ++slot) {
      out.id[slot] = m.id[e];
      out.data[slot] = m.data[e];
    }
  }
  return out;
}

CooMatrix ell_to_coo(const EllMatrix& m) {
  CooMatrix out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  for (std::uint32_t r = 0; r < m.n_rows; ++r) {
    std::vector<std::pair<std::uint32_t, std::int32_t>> row;
    for (std::uint32_t kk = 0; kk < m.width; ++kk) {
      std::size_t slot = static_cast<std::size_t>(r) * m.width + kk;
      if (m.data[slot] != 0) row.emplace_back(m.id[slot], m.data[slot]);
    }
    std::sort(row.begin(), row.end());
    for (auto& [col, val] : row) {
      out.row_id.push_back(r);
      out.col_id.push_back(col);
      out.data.push_back(val);
    }
  }
  return out;
}

HybridMatrix split_hybrid(const CsrMatrix& m, std::uint32_t width) {
  if (width == 0) throw std::invalid_argument("hybrid width must be positive");
  HybridMatrix out;
  out.ell.n_rows = m.n_rows;
  out.ell.n_cols = m.n_cols;
  out.ell.width = width;
  out.ell.id.assign(static_cast<std::size_t>(m.n_rows) * width, 0);
  out.ell.data.assign(static_cast<std::size_t>(m.n_rows) * width, 0);
  out.tail.n_rows = m.n_rows;
  out.tail.n_cols = m.n_cols;
  for (std::uint32_t r = 0; r < m.n_rows; ++r) {
    std::size_t slot = static_cast<std::size_t>(r) * width;
    std::uint64_t e = m.ptr[r];
    for (std::uint32_t kk = 0; kk < width && e < m.ptr[r + 1]; ++kk, ++e, ++slot) {
      out.ell.id[slot] = m.id[e];
      out.ell.data[slot] = m.data[e];
    }
    for (; e < m.ptr[r + 1]; ++e) {
      out.tail.row_id.push_back(r);
      out.tail.col_id.push_back(m.id[e]);
      out.tail.data.push_back(m.data[e]);
    }
  }
  return out;
}

CooMatrix hybrid_to_coo(const HybridMatrix& m) {
  CooMatrix ell_part = ell_to_coo(m.ell);
  CooMatrix out;
  out.n_rows = m.ell.n_rows;
  out.n_cols = m.ell.n_cols;
  std::vector<std::pair<std::pair<std::uint32_t, std::uint32_t>, std::int32_t>> all;
  for (std::size_t e = 0; e < ell_part.nnz(); ++e)
    all.push_back({{ell_part.row_id[e], ell_part.col_id[e]}, ell_part.data[e]});
  for (std::size_t e = 0; e < m.tail.nnz(); ++e)
    all.push_back({{m.tail.row_id[e], m.tail.col_id[e]}, m.tail.data[e]});
  std::sort(all.begin(), all.end());
  for (auto& [pos, val] : all) {
    out.row_id.push_back(pos.first);
    out.col_id.push_back(pos.second);
    out.data.push_back(val);
  }
  return out;
}

std::uint32_t choose_hybrid_k(const CsrMatrix& m) {
  if (m.nnz() == 0) throw std::invalid_argument("empty matrix");
  std::uint32_t max_len = 0;
  std::vector<std::uint64_t> len_hist;
  for (std::uint32_t r = 0; r < m.n_rows; ++r)
    max_len = std::max<std::uint32_t>(max_len, m.row_len(r));
  len_hist.assign(max_len + 1, 0);
  for (std::uint32_t r = 0; r < m.n_rows; ++r) len_hist[m.row_len(r)]++;

  // tail_nnz(K) = sum over rows of max(len - K, 0), via suffix sums.
  std::vector<std::uint64_t> rows_longer(max_len + 2, 0);
  std::vector<std::uint64_t> nnz_longer(max_len + 2, 0);
  for (std::uint32_t len = max_len; len + 1 > 0 && len > 0; --len) {
    rows_longer[len] = rows_longer[len + 1] + len_hist[len];
    nnz_longer[len] = nnz_longer[len + 1] + len_hist[len] * len;
  }
  std::uint32_t best_k = 1;
  std::uint64_t best_cost = UINT64_MAX;
  constexpr std::uint64_t kTailWeight = 3;
  for (std::uint32_t k = 1; k <= max_len; ++k) {
    std::uint64_t tail = (k + 1 <= max_len)
                             ? nnz_longer[k + 1] - rows_longer[k + 1] * k
                             : 0;
    std::uint64_t cost = static_cast<std::uint64_t>(m.n_rows) * k + kTailWeight * tail;
    if (cost < best_cost) {
      best_cost = cost;
      best_k = k;
    }
  }
  return best_k;
}

CsrMatrix reorder_row_categories(const CsrMatrix& m) {
  CsrMatrix out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.ptr = m.ptr;
  out.id.resize(m.nnz());
  out.data.resize(m.nnz());
  out.category_ordered = true;
  for (std::uint32_t r = 0; r < m.n_rows; ++r) {
    std::uint64_t w = m.ptr[r];
    for (int cat = 0; cat < 4; ++cat)
      for (std::uint64_t e = m.ptr[r]; e < m.ptr[r + 1]; ++e)
        if (category_rank(m.data[e]) == cat) {
          out.id[w] = m.id[e];
          out.data[w] = m.data[e];
          ++w;
        }
  }
  return out;
}

CompressedCsrMatrix compress_values(const CsrMatrix& m) {
  if (!m.category_ordered)
    throw std::invalid_argument("input is not category-reordered");
  CompressedCsrMatrix out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.ptr = m.ptr;
  out.id = m.id;
  out.ptr_data.assign(m.n_rows + 1, 0);
  for (std::uint32_t r = 0; r < m.n_rows; ++r) {
    std::int32_t n_plus = 0, n_minus = 0;
    std::vector<std::int32_t> wide_pos, wide_neg;
    int last_cat = -1;
    for (std::uint64_t e = m.ptr[r]; e < m.ptr[r + 1]; ++e) {
      int cat = category_rank(m.data[e]);
      if (cat < last_cat)
        throw std::invalid_argument("input is not category-reordered");
      last_cat = cat;
      switch (cat) {
        case 0: ++n_plus; break;
        case 1: ++n_minus; break;
        case 2: wide_pos.push_back(m.data[e]); break;
        default: wide_neg.push_back(m.data[e]); break;
      }
    }
    out.data.push_back(n_plus);
    out.data.push_back(n_minus);
    out.data.insert(out.data.end(), wide_pos.begin(), wide_pos.end());
    // The negative block keeps its sign: it marks the block boundary, which
    // is otherwise unrecoverable from the counts alone.
    out.data.insert(out.data.end(), wide_neg.begin(), wide_neg.end());
    out.ptr_data[r + 1] = out.data.size();
  }
  return out;
}

CsrMatrix decompress_values(const CompressedCsrMatrix& m) {
  CsrMatrix out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.ptr = m.ptr;
  out.id = m.id;
  out.category_ordered = true;
  out.data.reserve(m.nnz());
  for (std::uint32_t r = 0; r < m.n_rows; ++r) {
    std::uint64_t d = m.ptr_data[r];
    std::int32_t n_plus = m.data[d];
    std::int32_t n_minus = m.data[d + 1];
    std::uint64_t explicit_count = m.ptr_data[r + 1] - d - 2;
    std::uint64_t row_len = m.ptr[r + 1] - m.ptr[r];
    if (static_cast<std::uint64_t>(n_plus) + n_minus + explicit_count != row_len)
      throw std::invalid_argument("corrupt compressed row");
    for (std::int32_t i = 0; i < n_plus; ++i) out.data.push_back(1);
    for (std::int32_t i = 0; i < n_minus; ++i) out.data.push_back(-1);
    for (std::uint64_t i = 0; i < explicit_count; ++i)
      out.data.push_back(m.data[d + 2 + i]);
  }
  return out;
}

std::pair<CsrMatrix, std::vector<std::uint32_t>> permute_rows_balanced(
    const CsrMatrix& m, int workers) {
  if (workers < 1) throw std::invalid_argument("worker count must be positive");
  const std::uint32_t n = m.n_rows;
  const std::uint32_t w = static_cast<std::uint32_t>(workers);
  std::vector<std::uint32_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  std::stable_sort(rows.begin(), rows.end(), [&](std::uint32_t a, std::uint32_t b) {
    return m.row_len(a) > m.row_len(b);
  });

  // Greedy LPT with per-bin capacity so the round-robin deal stays aligned.
  const std::uint32_t cap = (n + w - 1) / w;
  std::vector<std::vector<std::uint32_t>> bins(w);
  std::vector<std::uint64_t> weight(w, 0);
  for (std::uint32_t row : rows) {
    int best = -1;
    for (std::uint32_t b = 0; b < w; ++b) {
      if (bins[b].size() >= cap) continue;
      if (best < 0 || weight[b] < weight[best]) best = static_cast<int>(b);
    }
    bins[best].push_back(row);
    weight[best] += m.row_len(row);
  }
  // Larger bins first so trailing deal positions hit the short bins.
  std::vector<std::uint32_t> bin_order(w);
  std::iota(bin_order.begin(), bin_order.end(), 0);
  std::stable_sort(bin_order.begin(), bin_order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return bins[a].size() > bins[b].size();
                   });
  // Keep each bin's rows in source order so uniform inputs yield the identity.
  for (auto& bin : bins) std::sort(bin.begin(), bin.end());

  std::vector<std::uint32_t> perm;
  perm.reserve(n);
  for (std::uint32_t t = 0; t < cap; ++t)
    for (std::uint32_t b = 0; b < w; ++b) {
      const auto& bin = bins[bin_order[b]];
      if (t < bin.size()) perm.push_back(bin[t]);
    }
  assert(perm.size() == n);

  CsrMatrix out;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.category_ordered = m.category_ordered;
  out.ptr.assign(n + 1, 0);
  for (std::uint32_t i = 0; i < n; ++i)
    out.ptr[i + 1] = out.ptr[i] + m.row_len(perm[i]);
  out.id.resize(m.nnz());
  out.data.resize(m.nnz());
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint64_t src = m.ptr[perm[i]];
    for (std::uint64_t e = out.ptr[i]; e < out.ptr[i + 1]; ++e, ++src) {
      out.id[e] = m.id[src];
      out.data[e] = m.data[src];
    }
  }
  return {out, perm};
}

MatrixStats matrix_stats(const CsrMatrix& m) {
  MatrixStats st;
  st.n_rows = m.n_rows;
  st.n_cols = m.n_cols;
  st.nnz = m.nnz();
  st.col_density.assign(m.n_cols, 0);
  std::uint64_t pm1 = 0;
  for (std::uint32_t r = 0; r < m.n_rows; ++r) {
    std::uint64_t norm = 0;
    for (std::uint64_t e = m.ptr[r]; e < m.ptr[r + 1]; ++e) {
      norm += static_cast<std::uint64_t>(std::llabs(m.data[e]));
      if (m.data[e] == 1 || m.data[e] == -1) ++pm1;
      st.col_density[m.id[e]]++;
    }
    st.max_row_norm = std::max(st.max_row_norm, norm);
    st.row_weight_hist[m.row_len(r)]++;
  }
  st.pct_pm1 = st.nnz == 0 ? 0.0 : static_cast<double>(pm1) / st.nnz;
  return st;
}

MatrixStats matrix_stats(const CooMatrix& m) { return matrix_stats(coo_to_csr(m)); }

CooMatrix gen_ffs_like(const GeneratorParams& params) {
  if (params.n < 2) throw std::invalid_argument("matrix dimension too small");
  if (params.mean_row_weight < 1 || params.mean_row_weight >= params.n)
    throw std::invalid_argument("mean row weight out of range");
  if (params.pct_pm1 < 0.0 || params.pct_pm1 > 1.0)
    throw std::invalid_argument("pm1 fraction out of range");
  if (params.max_coeff < 1)
    throw std::invalid_argument("max coefficient must be positive");

  std::mt19937_64 rng(params.seed);
  const std::uint32_t n = params.n;

  // Column weights ~ 1/(j + j0): a dense head over roughly the first
  // dense_cols columns with a gradually decaying tail.
  const std::uint64_t j0 = std::max<std::uint64_t>(1, params.dense_cols);
  std::vector<std::uint64_t> cum(n);
  std::uint64_t total = 0;
  for (std::uint32_t j = 0; j < n; ++j) {
    total += (std::uint64_t(1) << 32) / (j + j0) + 1;
    cum[j] = total;
  }

  auto draw_col = [&]() -> std::uint32_t {
    std::uint64_t u = rng() % total;
    return static_cast<std::uint32_t>(
        std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
  };

  const std::uint32_t w_lo =
      std::max<std::uint32_t>(1, (params.mean_row_weight * 8 + 5) / 10);
  const std::uint32_t w_hi =
      std::min<std::uint32_t>(n - 1, (params.mean_row_weight * 12) / 10);

  CooMatrix out;
  out.n_rows = n;
  out.n_cols = n;
  for (std::uint32_t r = 0; r < n; ++r) {
    std::uint32_t weight =
        w_lo + static_cast<std::uint32_t>(rng() % (w_hi - w_lo + 1));
    std::set<std::uint32_t> cols;
    while (cols.size() < weight) cols.insert(draw_col());
    for (std::uint32_t col : cols) {
      double u = static_cast<double>(rng() >> 11) * 0x1p-53;
      std::int32_t mag = 1;
      if (u >= params.pct_pm1 && params.max_coeff >= 2)
        mag = 2 + static_cast<std::int32_t>(
                      rng() % static_cast<std::uint64_t>(params.max_coeff - 1));
      bool negative = (rng() & 1) != 0;
      out.row_id.push_back(r);
      out.col_id.push_back(col);
      out.data.push_back(negative ? -mag : mag);
    }
  }
  if (params.force_singular) {
    std::map<std::uint32_t, std::int64_t> last;
    std::size_t keep = 0;
    for (std::size_t e = 0; e < out.nnz(); ++e) {
      if (out.row_id[e] <= 1) last[out.col_id[e]] += out.data[e];
      if (out.row_id[e] != n - 1) {
        out.row_id[keep] = out.row_id[e];
        out.col_id[keep] = out.col_id[e];
        out.data[keep] = out.data[e];
        ++keep;
      }
    }
    out.row_id.resize(keep);
    out.col_id.resize(keep);
    out.data.resize(keep);
    for (const auto& [col, v] : last) {
      if (v == 0) continue;
      out.row_id.push_back(n - 1);
      out.col_id.push_back(col);
      out.data.push_back(static_cast<std::int32_t>(v));
    }
  }
  return out;
}

}  // namespace rnsla
