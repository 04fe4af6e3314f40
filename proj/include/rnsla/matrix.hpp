#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rnsla {

// Sparse matrices over signed 32-bit coefficients. All formats are immutable
// after construction; transformations build new objects.

// Triplets sorted by (row, col), no duplicates, no zero values.
struct CooMatrix {
  std::uint32_t n_rows = 0;
  std::uint32_t n_cols = 0;
  std::vector<std::uint32_t> row_id;
  std::vector<std::uint32_t> col_id;
  std::vector<std::int32_t> data;

  std::size_t nnz() const { return data.size(); }
};

// Row pointers + column indices + values. `category_ordered` records whether
// rows hold the four coefficient-category blocks (+1, -1, >1, <-1)
// contiguously (column order inside each block) instead of plain column order.
struct CsrMatrix {
  std::uint32_t n_rows = 0;
  std::uint32_t n_cols = 0;
  std::vector<std::uint64_t> ptr;  // length n_rows + 1
  std::vector<std::uint32_t> id;
  std::vector<std::int32_t> data;
  bool category_ordered = false;

  std::size_t nnz() const { return data.size(); }
  std::size_t row_len(std::uint32_t r) const { return ptr[r + 1] - ptr[r]; }
};

// Category-reordered CSR with the value stream compressed: per row,
// [count of +1, count of -1, explicit values > 1, explicit values < -1].
// The trailing block keeps its sign so the block boundary stays decodable.
struct CompressedCsrMatrix {
  std::uint32_t n_rows = 0;
  std::uint32_t n_cols = 0;
  std::vector<std::uint64_t> ptr;       // row offsets into id
  std::vector<std::uint32_t> id;        // category-reordered column indices
  std::vector<std::uint64_t> ptr_data;  // row offsets into data
  std::vector<std::int32_t> data;

  std::size_t nnz() const { return id.size(); }
};

// Horizontal slices of `slice_size` rows; inside a slice entries are sorted
// by column index (row interleaving is the point of the format).
struct SlcooMatrix {
  std::uint32_t n_rows = 0;
  std::uint32_t n_cols = 0;
  std::uint32_t slice_size = 0;
  std::vector<std::uint64_t> ptr_slice;  // length ceil(n_rows/slice_size) + 1
  std::vector<std::uint32_t> row_id;
  std::vector<std::uint32_t> col_id;
  std::vector<std::int32_t> data;

  std::size_t nnz() const { return data.size(); }
  std::uint32_t slice_count() const {
    return slice_size == 0 ? 0 : (n_rows + slice_size - 1) / slice_size;
  }
};

// Fixed row width K, row-major; padding entries hold value 0 at column 0 and
// follow the real entries of their row.
struct EllMatrix {
  std::uint32_t n_rows = 0;
  std::uint32_t n_cols = 0;
  std::uint32_t width = 0;  // K
  std::vector<std::uint32_t> id;    // n_rows * width
  std::vector<std::int32_t> data;   // n_rows * width
};

// ELL part holding the first min(K, row length) entries of each row, COO tail
// holding the overflow. Logical sum equals the source exactly.
struct HybridMatrix {
  EllMatrix ell;
  CooMatrix tail;
};

struct MatrixStats {
  std::uint32_t n_rows = 0;
  std::uint32_t n_cols = 0;
  std::uint64_t nnz = 0;
  std::uint64_t max_row_norm = 0;  // max over rows of sum |value|
  double pct_pm1 = 0.0;            // fraction of +-1 coefficients
  std::map<std::uint64_t, std::uint64_t> row_weight_hist;  // weight -> rows
  std::vector<std::uint64_t> col_density;                  // per-column nnz
};

// ---- conversions ----

CsrMatrix coo_to_csr(const CooMatrix& m);
CooMatrix csr_to_coo(const CsrMatrix& m);

SlcooMatrix csr_to_slcoo(const CsrMatrix& m, std::uint32_t slice_size);
CooMatrix slcoo_to_coo(const SlcooMatrix& m);

// Throws std::invalid_argument("row overflow") when K is below the longest row.
EllMatrix csr_to_ell(const CsrMatrix& m, std::uint32_t width);
CooMatrix ell_to_coo(const EllMatrix& m);

HybridMatrix split_hybrid(const CsrMatrix& m, std::uint32_t width);
CooMatrix hybrid_to_coo(const HybridMatrix& m);

// K minimizing n_rows * K + 3 * tail_nnz(K): the COO tail touches three
// streams per entry where ELL's row index is implicit.
std::uint32_t choose_hybrid_k(const CsrMatrix& m);

// ---- row transformations ----

// Stable per-row partition into the blocks (+1, -1, >1, <-1).
CsrMatrix reorder_row_categories(const CsrMatrix& m);

// Requires a category-reordered input (throws otherwise). Decompression via
// decompress_values is exact.
CompressedCsrMatrix compress_values(const CsrMatrix& m);
CsrMatrix decompress_values(const CompressedCsrMatrix& m);

// Row permutation such that dealing rows round-robin to `workers` partitions
// balances the per-partition entry counts (greedy longest-processing-time).
// perm[i] is the source row placed at row i; apply_row_permutation composes.
std::pair<CsrMatrix, std::vector<std::uint32_t>> permute_rows_balanced(
    const CsrMatrix& m, int workers);

// ---- statistics & generation ----

MatrixStats matrix_stats(const CooMatrix& m);
MatrixStats matrix_stats(const CsrMatrix& m);

struct GeneratorParams {
  std::uint32_t n = 0;               // square dimension
  std::uint32_t mean_row_weight = 1;
  double pct_pm1 = 1.0;
  std::int32_t max_coeff = 1;
  std::uint32_t dense_cols = 32;     // flattens the heavy head of the profile
  std::uint64_t seed = 0;
  // Replace the last row with the sum of the first two rows, forcing a
  // non-trivial kernel (rank deficiency of at least 1).
  bool force_singular = false;
};

// Deterministic sparse matrix with the column-density shape of a filtered
// relation matrix: dense leading columns, gradually decaying tail, row
// weights within +-20% of the mean, +-1 coefficients with probability
// pct_pm1.
CooMatrix gen_ffs_like(const GeneratorParams& params);

// ---- file I/O ----

enum class MatrixIoError {
  OpenFailed,
  BadMagic,
  BadVersion,
  Truncated,
  IndexOutOfRange,
  ValueOutOfRange,
  Unsorted,
  Duplicate,
  ZeroValue,
  BadHeader,
};

class MatrixIoException : public std::runtime_error {
 public:
  MatrixIoException(MatrixIoError code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  MatrixIoError code() const { return code_; }

 private:
  MatrixIoError code_;
};

// Binary container: magic "SMZL", version u32, N_rows u64, N_cols u64,
// n_NZ u64, then (row u32, col u32, value i32) records sorted by (row, col).
// Little-endian throughout.
CooMatrix load_matrix(const std::string& path);
void store_matrix(const CooMatrix& m, const std::string& path);

// Text interchange: MatrixMarket coordinate layout, 1-based indices, with a
// "%%field: integer" header line.
CooMatrix load_matrix_text(const std::string& path);
void store_matrix_text(const CooMatrix& m, const std::string& path);

// Structural validation shared by loaders and tests; throws MatrixIoException.
void validate(const CooMatrix& m);

}  // namespace rnsla
