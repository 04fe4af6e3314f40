#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rnsla/matrix.hpp"

namespace rnsla {

namespace {

constexpr char kMagic[4] = {'S', 'M', 'Z', 'L'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in)
    throw MatrixIoException(MatrixIoError::Truncated, "unexpected end of file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

void store_matrix(const CooMatrix& m, const std::string& path) {
  validate(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw MatrixIoException(MatrixIoError::OpenFailed, "cannot open " + path);
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, m.n_rows);
  put_le<std::uint64_t>(out, m.n_cols);
  put_le<std::uint64_t>(out, m.nnz());
  for (std::size_t e = 0; e < m.nnz(); ++e) {
    put_le<std::uint32_t>(out, m.row_id[e]);
    put_le<std::uint32_t>(out, m.col_id[e]);
    put_le<std::int32_t>(out, m.data[e]);
  }
  if (!out)
    throw MatrixIoException(MatrixIoError::OpenFailed, "write failed: " + path);
}

CooMatrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw MatrixIoException(MatrixIoError::OpenFailed, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw MatrixIoException(MatrixIoError::BadMagic, "bad magic in " + path);
  if (get_le<std::uint32_t>(in) != kVersion)
    throw MatrixIoException(MatrixIoError::BadVersion, "unsupported version");
  CooMatrix m;
  std::uint64_t n_rows = get_le<std::uint64_t>(in);
  std::uint64_t n_cols = get_le<std::uint64_t>(in);
  std::uint64_t nnz = get_le<std::uint64_t>(in);
  if (n_rows > UINT32_MAX || n_cols > UINT32_MAX)
    throw MatrixIoException(MatrixIoError::BadHeader, "dimension overflow");
  m.n_rows = static_cast<std::uint32_t>(n_rows);
  m.n_cols = static_cast<std::uint32_t>(n_cols);
  m.row_id.reserve(nnz);
  m.col_id.reserve(nnz);
  m.data.reserve(nnz);
  for (std::uint64_t e = 0; e < nnz; ++e) {
    m.row_id.push_back(get_le<std::uint32_t>(in));
    m.col_id.push_back(get_le<std::uint32_t>(in));
    m.data.push_back(get_le<std::int32_t>(in));
  }
  validate(m);
  return m;
}

void store_matrix_text(const CooMatrix& m, const std::string& path) {
  validate(m);
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw MatrixIoException(MatrixIoError::OpenFailed, "cannot open " + path);
  out << "%%MatrixMarket matrix coordinate integer general\n";
  out << "%%field: integer\n";
  out << m.n_rows << " " << m.n_cols << " " << m.nnz() << "\n";
  for (std::size_t e = 0; e < m.nnz(); ++e)
    out << m.row_id[e] + 1 << " " << m.col_id[e] + 1 << " " << m.data[e] << "\n";
}

CooMatrix load_matrix_text(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw MatrixIoException(MatrixIoError::OpenFailed, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw MatrixIoException(MatrixIoError::BadHeader, "missing MatrixMarket banner");
  std::streampos body = in.tellg();
  while (std::getline(in, line) && !line.empty() && line[0] == '%')
    body = in.tellg();
  std::istringstream header(line);
  std::uint64_t n_rows, n_cols, nnz;
  if (!(header >> n_rows >> n_cols >> nnz))
    throw MatrixIoException(MatrixIoError::BadHeader, "malformed size line");
  CooMatrix m;
  m.n_rows = static_cast<std::uint32_t>(n_rows);
  m.n_cols = static_cast<std::uint32_t>(n_cols);
  for (std::uint64_t e = 0; e < nnz; ++e) {
    std::uint64_t r, c;
    long long v;
    if (!(in >> r >> c >> v))
      throw MatrixIoException(MatrixIoError::Truncated, "missing entries");
    if (r == 0 || c == 0)
      throw MatrixIoException(MatrixIoError::IndexOutOfRange, "indices are 1-based");
    if (v > INT32_MAX || v < INT32_MIN)
      throw MatrixIoException(MatrixIoError::ValueOutOfRange, "coefficient too wide");
    m.row_id.push_back(static_cast<std::uint32_t>(r - 1));
    m.col_id.push_back(static_cast<std::uint32_t>(c - 1));
    m.data.push_back(static_cast<std::int32_t>(v));
  }
  validate(m);
  return m;
}

}  // namespace rnsla
