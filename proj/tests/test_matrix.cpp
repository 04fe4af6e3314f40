#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "rnsla/matrix.hpp"

using namespace rnsla;

namespace {

CooMatrix identity2() {
  CooMatrix m;
  m.n_rows = m.n_cols = 2;
  m.row_id = {0, 1};
  m.col_id = {0, 1};
  m.data = {1, 1};
  return m;
}

CsrMatrix row_matrix(const std::vector<std::vector<std::int32_t>>& rows) {
  CsrMatrix m;
  m.n_rows = static_cast<std::uint32_t>(rows.size());
  m.n_cols = 0;
  m.ptr.push_back(0);
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j)
      if (row[j] != 0) {
        m.id.push_back(static_cast<std::uint32_t>(j));
        m.data.push_back(row[j]);
        m.n_cols = std::max<std::uint32_t>(m.n_cols, static_cast<std::uint32_t>(j + 1));
      }
    m.ptr.push_back(m.id.size());
  }
  return m;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("coo_to_csr basics") {
  CooMatrix empty;
  empty.n_rows = empty.n_cols = 3;
  const CsrMatrix ec = coo_to_csr(empty);
  CHECK(ec.ptr == std::vector<std::uint64_t>{0, 0, 0, 0});

  const CsrMatrix id = coo_to_csr(identity2());
  CHECK(id.ptr == std::vector<std::uint64_t>{0, 1, 2});
  CHECK(id.id == std::vector<std::uint32_t>{0, 1});
  CHECK(id.data == std::vector<std::int32_t>{1, 1});
}

TEST_CASE("format round trips on a generated matrix") {
  GeneratorParams gp;
  gp.n = 100;
  gp.mean_row_weight = 7;
  gp.pct_pm1 = 0.85;
  gp.max_coeff = 11;
  gp.seed = 21;
  const CooMatrix coo = gen_ffs_like(gp);
  const CsrMatrix csr = coo_to_csr(coo);

  auto same = [&](const CooMatrix& other) {
    return other.row_id == coo.row_id && other.col_id == coo.col_id &&
           other.data == coo.data;
  };
  CHECK(same(csr_to_coo(csr)));
  for (std::uint32_t slice : {1u, 4u, 200u})
    CHECK(same(slcoo_to_coo(csr_to_slcoo(csr, slice))));
  std::uint32_t max_len = 0;
  for (std::uint32_t r = 0; r < csr.n_rows; ++r)
    max_len = std::max<std::uint32_t>(max_len, csr.row_len(r));
  CHECK(same(ell_to_coo(csr_to_ell(csr, max_len))));
  for (std::uint32_t k : {1u, 3u, max_len})
    CHECK(same(hybrid_to_coo(split_hybrid(csr, k))));
  CHECK(same(csr_to_coo(decompress_values(compress_values(reorder_row_categories(csr))))));
}

TEST_CASE("slcoo structure") {
  GeneratorParams gp;
  gp.n = 20;
  gp.mean_row_weight = 4;
  gp.seed = 5;
  const CsrMatrix csr = coo_to_csr(gen_ffs_like(gp));
  CHECK_THROWS_AS(csr_to_slcoo(csr, 0), std::invalid_argument);
  const SlcooMatrix sl = csr_to_slcoo(csr, 4);
  CHECK(sl.slice_count() == 5);
  for (std::uint32_t s = 0; s < sl.slice_count(); ++s)
    for (std::uint64_t e = sl.ptr_slice[s]; e < sl.ptr_slice[s + 1]; ++e) {
      CHECK(sl.row_id[e] / 4 == s);
      if (e > sl.ptr_slice[s]) CHECK(sl.col_id[e] >= sl.col_id[e - 1]);
    }
  // a single slice is globally column-sorted
  const SlcooMatrix one = csr_to_slcoo(csr, 32);
  CHECK(one.slice_count() == 1);
}

TEST_CASE("ell padding and overflow") {
  const CsrMatrix m = row_matrix({{1}, {2, 0, 3, -1}});
  CHECK_THROWS_WITH_AS(csr_to_ell(m, 2), "row overflow", std::invalid_argument);
  const EllMatrix e = csr_to_ell(m, 3);
  CHECK(e.width == 3);
  CHECK(e.data[0] == 1);
  CHECK(e.data[1] == 0);  // padding: value 0, column 0
  CHECK(e.id[1] == 0);
  CHECK(e.data[3] == 2);
  CHECK(e.data[5] == -1);
}

TEST_CASE("split_hybrid") {
  const CsrMatrix m = row_matrix({{1, 2}, {3, 4, 5, 6}});
  CHECK_THROWS_AS(split_hybrid(m, 0), std::invalid_argument);
  const HybridMatrix big = split_hybrid(m, 4);
  CHECK(big.tail.nnz() == 0);
  const HybridMatrix one = split_hybrid(m, 1);
  CHECK(one.tail.nnz() == 4);
  CHECK(one.ell.data[0] == 1);
  CHECK(one.ell.data[1] == 3);
}

TEST_CASE("choose_hybrid_k") {
  // uniform row length -> K equals that length
  const CsrMatrix uni = row_matrix({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
  CHECK(choose_hybrid_k(uni) == 3);
  // one long row among many short ones -> K = 1
  std::vector<std::vector<std::int32_t>> rows(100, std::vector<std::int32_t>{1});
  rows[0].assign(100, 1);
  CHECK(choose_hybrid_k(row_matrix(rows)) == 1);
  CsrMatrix empty;
  empty.n_rows = empty.n_cols = 1;
  empty.ptr = {0, 0};
  CHECK_THROWS_AS(choose_hybrid_k(empty), std::invalid_argument);
}

TEST_CASE("reorder_row_categories") {
  const CsrMatrix m = row_matrix({{0, -1, 3, 1, -2, 1}});
  const CsrMatrix r = reorder_row_categories(m);
  CHECK(r.category_ordered);
  CHECK(r.data == std::vector<std::int32_t>{1, 1, -1, 3, -2});
  CHECK(r.id == std::vector<std::uint32_t>{3, 5, 1, 2, 4});
  // already ordered input is unchanged
  const CsrMatrix r2 = reorder_row_categories(r);
  CHECK(r2.data == r.data);
  CHECK(r2.id == r.id);
}

TEST_CASE("compress and decompress") {
  const CsrMatrix plus = reorder_row_categories(row_matrix({{1, 1, 1, 1, 1, 1, 1}}));
  const CompressedCsrMatrix cp = compress_values(plus);
  CHECK(cp.data == std::vector<std::int32_t>{7, 0});

  const CsrMatrix mixed = reorder_row_categories(row_matrix({{1, 1, -1, 3, -2}}));
  const CompressedCsrMatrix cm = compress_values(mixed);
  CHECK(cm.data == std::vector<std::int32_t>{2, 1, 3, -2});

  const CsrMatrix back = decompress_values(cm);
  CHECK(back.data == mixed.data);
  CHECK(back.id == mixed.id);

  CHECK_THROWS_AS(compress_values(row_matrix({{3, 1}})), std::invalid_argument);
}

TEST_CASE("permute_rows_balanced") {
  // uniform rows: identity permutation
  const CsrMatrix uni = row_matrix({{1, 1}, {2, 2}, {3, 3}, {4, 4}});
  const auto [pu, permu] = permute_rows_balanced(uni, 2);
  CHECK(permu == std::vector<std::uint32_t>{0, 1, 2, 3});
  CHECK(pu.data == uni.data);

  // lengths [10,1,1,1,1,1,1,10] dealt to 2 workers -> 13/13
  std::vector<std::vector<std::int32_t>> rows(8, std::vector<std::int32_t>{1});
  rows[0].assign(10, 1);
  rows[7].assign(10, 1);
  const CsrMatrix m = row_matrix(rows);
  const auto [pm, perm] = permute_rows_balanced(m, 2);
  std::uint64_t w0 = 0, w1 = 0;
  for (std::uint32_t r = 0; r < pm.n_rows; ++r)
    (r % 2 == 0 ? w0 : w1) += pm.row_len(r);
  CHECK(w0 == 13);
  CHECK(w1 == 13);
  // permutation is a bijection carrying the right rows
  std::vector<bool> seen(8, false);
  for (std::uint32_t i = 0; i < 8; ++i) {
    CHECK(!seen[perm[i]]);
    seen[perm[i]] = true;
    CHECK(pm.row_len(i) == m.row_len(perm[i]));
  }
  CHECK_THROWS_AS(permute_rows_balanced(m, 0), std::invalid_argument);
}

TEST_CASE("matrix_stats") {
  const MatrixStats id = matrix_stats(identity2());
  CHECK(id.max_row_norm == 1);
  CHECK(id.pct_pm1 == 1.0);
  CHECK(id.nnz == 2);

  const MatrixStats st = matrix_stats(row_matrix({{1, 1, -1, 3, -2}}));
  CHECK(st.max_row_norm == 8);
  CHECK(st.pct_pm1 == doctest::Approx(0.6));
  CHECK(st.row_weight_hist.at(5) == 1);
  CHECK(st.col_density == std::vector<std::uint64_t>{1, 1, 1, 1, 1});
}

TEST_CASE("generator basics") {
  GeneratorParams gp;
  gp.n = 10;
  gp.mean_row_weight = 1;
  gp.pct_pm1 = 1.0;
  gp.seed = 1;
  const CooMatrix m = gen_ffs_like(gp);
  CHECK(m.nnz() == 10);
  for (std::size_t e = 0; e < 10; ++e) {
    CHECK(m.row_id[e] == e);
    CHECK((m.data[e] == 1 || m.data[e] == -1));
  }
  // determinism
  const CooMatrix again = gen_ffs_like(gp);
  CHECK(again.row_id == m.row_id);
  CHECK(again.col_id == m.col_id);
  CHECK(again.data == m.data);

  GeneratorParams bad = gp;
  bad.mean_row_weight = 10;
  CHECK_THROWS_AS(gen_ffs_like(bad), std::invalid_argument);
}

TEST_CASE("generator statistics") {
  GeneratorParams gp;
  gp.n = 1000;
  gp.mean_row_weight = 100;
  gp.pct_pm1 = 0.927;
  gp.max_coeff = 9;
  gp.seed = 42;
  const CooMatrix m = gen_ffs_like(gp);
  validate(m);
  const MatrixStats st = matrix_stats(m);
  CHECK(st.pct_pm1 == doctest::Approx(0.927).epsilon(0.011));
  const double mean_weight = static_cast<double>(st.nnz) / gp.n;
  CHECK(mean_weight > 80.0);
  CHECK(mean_weight < 120.0);
  // column density decays: head denser than tail
  std::uint64_t head = 0, tail = 0;
  for (int j = 0; j < 100; ++j) head += st.col_density[j];
  for (int j = 900; j < 1000; ++j) tail += st.col_density[j];
  CHECK(head > 3 * tail);
}

TEST_CASE("generator singular option") {
  GeneratorParams gp;
  gp.n = 40;
  gp.mean_row_weight = 5;
  gp.pct_pm1 = 0.9;
  gp.max_coeff = 4;
  gp.seed = 17;
  gp.force_singular = true;
  const CooMatrix m = gen_ffs_like(gp);
  validate(m);
  // last row equals row0 + row1 entry-wise
  std::map<std::uint32_t, std::int64_t> expect, got;
  for (std::size_t e = 0; e < m.nnz(); ++e) {
    if (m.row_id[e] <= 1) expect[m.col_id[e]] += m.data[e];
    if (m.row_id[e] == 39) got[m.col_id[e]] = m.data[e];
  }
  for (auto it = expect.begin(); it != expect.end();)
    it = it->second == 0 ? expect.erase(it) : std::next(it);
  CHECK(got == expect);
}

TEST_CASE("binary file round trip and validation errors") {
  GeneratorParams gp;
  gp.n = 50;
  gp.mean_row_weight = 5;
  gp.seed = 33;
  const CooMatrix m = gen_ffs_like(gp);
  const std::string path = temp_path("rnsla_test_m.smz");
  store_matrix(m, path);
  const CooMatrix back = load_matrix(path);
  CHECK(back.row_id == m.row_id);
  CHECK(back.col_id == m.col_id);
  CHECK(back.data == m.data);

  // store(load(f)) byte-identical
  const std::string path2 = temp_path("rnsla_test_m2.smz");
  store_matrix(back, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);

  try {
    load_matrix(temp_path("rnsla_does_not_exist.smz"));
    CHECK(false);
  } catch (const MatrixIoException& e) {
    CHECK(e.code() == MatrixIoError::OpenFailed);
  }

  // corrupt the magic
  std::string corrupt = b1;
  corrupt[0] = 'X';
  const std::string badpath = temp_path("rnsla_test_bad.smz");
  std::ofstream(badpath, std::ios::binary) << corrupt;
  try {
    load_matrix(badpath);
    CHECK(false);
  } catch (const MatrixIoException& e) {
    CHECK(e.code() == MatrixIoError::BadMagic);
  }

  // truncate the records
  std::ofstream(badpath, std::ios::binary) << b1.substr(0, b1.size() - 4);
  try {
    load_matrix(badpath);
    CHECK(false);
  } catch (const MatrixIoException& e) {
    CHECK(e.code() == MatrixIoError::Truncated);
  }
  std::remove(path.c_str());
  std::remove(path2.c_str());
  std::remove(badpath.c_str());
}

TEST_CASE("structural validation") {
  CooMatrix m = identity2();
  m.col_id[1] = 2;  // out of range
  CHECK_THROWS_AS(validate(m), MatrixIoException);
  m = identity2();
  m.data[0] = 0;
  try {
    validate(m);
    CHECK(false);
  } catch (const MatrixIoException& e) {
    CHECK(e.code() == MatrixIoError::ZeroValue);
  }
  m = identity2();
  std::swap(m.row_id[0], m.row_id[1]);
  try {
    validate(m);
    CHECK(false);
  } catch (const MatrixIoException& e) {
    CHECK(e.code() == MatrixIoError::Unsorted);
  }
  m = identity2();
  m.row_id[1] = 0;
  m.col_id[1] = 0;
  try {
    validate(m);
    CHECK(false);
  } catch (const MatrixIoException& e) {
    CHECK(e.code() == MatrixIoError::Duplicate);
  }
}

TEST_CASE("text file round trip") {
  GeneratorParams gp;
  gp.n = 30;
  gp.mean_row_weight = 4;
  gp.max_coeff = 7;
  gp.pct_pm1 = 0.7;
  gp.seed = 8;
  const CooMatrix m = gen_ffs_like(gp);
  const std::string path = temp_path("rnsla_test_m.mtx");
  store_matrix_text(m, path);
  const CooMatrix back = load_matrix_text(path);
  CHECK(back.row_id == m.row_id);
  CHECK(back.col_id == m.col_id);
  CHECK(back.data == m.data);
  std::remove(path.c_str());
}
