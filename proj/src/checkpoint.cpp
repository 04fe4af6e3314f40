#include <cstdio>
#include <fstream>
#include <sstream>

#include "rnsla/wiedemann.hpp"

namespace rnsla {

namespace {

constexpr const char* kHeader = "rnsla checkpoint 1";

void write_values(std::ostream& out, const std::vector<BigInt>& v) {
  out << v.size() << "\n";
  for (const BigInt& x : v) out << bigint_to_hex(x) << "\n";
}

std::vector<BigInt> read_values(std::istream& in) {
  std::size_t count = 0;
  if (!(in >> count)) throw std::runtime_error("truncated checkpoint");
  std::vector<BigInt> v;
  v.reserve(count);
  std::string tok;
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> tok)) throw std::runtime_error("truncated checkpoint");
    v.push_back(bigint_from_hex(tok));
  }
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  // Write to a side file first so an interrupted save never clobbers the
  // previous good checkpoint.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint file " + tmp);
    out << kHeader << "\n";
    out << "basis " << ck.basis_desc << "\n";
    out << "n_rows " << ck.n_rows << "\n";
    out << "seed " << ck.seed << "\n";
    out << "attempt " << ck.attempt << "\n";
    out << "x_index " << ck.x_index << "\n";
    out << "iter " << ck.iter << "\n";
    out << "seq ";
    write_values(out, ck.sequence);
    out << "vec ";
    write_values(out, ck.vector_vals);
    if (!out) throw std::runtime_error("checkpoint write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move checkpoint into place: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint file " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw std::runtime_error("not a checkpoint file: " + path);
  Checkpoint ck;
  std::string key;
  bool have_seq = false, have_vec = false;
  while (in >> key) {
    if (key == "basis") {
      std::getline(in, ck.basis_desc);
      const auto start = ck.basis_desc.find_first_not_of(' ');
      ck.basis_desc =
          start == std::string::npos ? "" : ck.basis_desc.substr(start);
    } else if (key == "n_rows") {
      in >> ck.n_rows;
    } else if (key == "seed") {
      in >> ck.seed;
    } else if (key == "attempt") {
      in >> ck.attempt;
    } else if (key == "x_index") {
      in >> ck.x_index;
    } else if (key == "iter") {
      in >> ck.iter;
    } else if (key == "seq") {
      ck.sequence = read_values(in);
      have_seq = true;
    } else if (key == "vec") {
      ck.vector_vals = read_values(in);
      have_vec = true;
    } else {
      throw std::runtime_error("unknown checkpoint field: " + key);
    }
    if (!in) throw std::runtime_error("truncated checkpoint");
  }
  if (!have_seq || !have_vec || ck.basis_desc.empty())
    throw std::runtime_error("incomplete checkpoint");
  if (ck.sequence.size() != ck.iter + 1)
    throw std::runtime_error("checkpoint sequence length mismatch");
  return ck;
}

}  // namespace rnsla
