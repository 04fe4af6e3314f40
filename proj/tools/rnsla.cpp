#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "rnsla/matrix.hpp"
#include "rnsla/oracle.hpp"
#include "rnsla/rns.hpp"
#include "rnsla/spmv.hpp"
#include "rnsla/wiedemann.hpp"

namespace {

using namespace rnsla;

constexpr int kOk = 0;
constexpr int kUsageError = 2;
constexpr int kIoError = 3;
constexpr int kVerifyFailure = 4;
constexpr int kSolverFailure = 5;

int default_workers() {
  if (const char* env = std::getenv("RNSLA_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return 1;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_text_path(const std::string& path) {
  return has_suffix(path, ".mtx") || has_suffix(path, ".txt");
}

CooMatrix load_any(const std::string& path) {
  return is_text_path(path) ? load_matrix_text(path) : load_matrix(path);
}

void store_any(const CooMatrix& m, const std::string& path) {
  if (is_text_path(path))
    store_matrix_text(m, path);
  else
    store_matrix(m, path);
}

struct BasisArgs {
  std::string ell_hex;
  int k = 64;
  std::string flavor = "integer";

  RnsFlavor parsed_flavor() const {
    if (flavor == "integer") return RnsFlavor::Int64;
    if (flavor == "float") return RnsFlavor::Float52;
    throw CLI::ValidationError("--flavor", "expected 'integer' or 'float'");
  }
  void echo(std::ostream& out) const {
    out << "config.ell: 0x" << ell_hex << "\n";
    out << "config.k: " << k << "\n";
    out << "config.flavor: " << flavor << "\n";
  }
};

void add_basis_options(CLI::App* cmd, BasisArgs& args) {
  cmd->add_option("--ell", args.ell_hex, "group order, hex")->required();
  cmd->add_option("--k", args.k, "residue width (64 integer, 52 float)");
  cmd->add_option("--flavor", args.flavor, "integer|float");
}

struct MatrixPipeline {
  std::string format = "csr";  // csr|compressed|coo|slcoo|ell|hybrid
  std::uint32_t slice = 4;
  bool reorder = false;
  bool compress = false;
  bool balance = false;

  void echo(std::ostream& out) const {
    out << "config.format: " << format << "\n";
    if (format == "slcoo") out << "config.slice: " << slice << "\n";
    out << "config.reorder: " << reorder << "\n";
    out << "config.compress: " << compress << "\n";
    out << "config.balance: " << balance << "\n";
  }
};

void add_pipeline_options(CLI::App* cmd, MatrixPipeline& pipe) {
  cmd->add_option("--format", pipe.format,
                  "csr|compressed|coo|slcoo|ell|hybrid");
  cmd->add_option("--slice", pipe.slice, "SLCOO slice size");
  cmd->add_flag("--reorder", pipe.reorder, "category-reorder rows");
  cmd->add_flag("--compress", pipe.compress, "compress the value stream");
  cmd->add_flag("--balance", pipe.balance, "balance rows across workers");
}

CsrMatrix prepare_csr(const CooMatrix& coo, const MatrixPipeline& pipe,
                      int workers) {
  CsrMatrix csr = coo_to_csr(coo);
  if (pipe.balance) csr = permute_rows_balanced(csr, workers).first;
  if (pipe.reorder || pipe.compress || pipe.format == "compressed")
    csr = reorder_row_categories(csr);
  return csr;
}

void write_kernel(const std::string& path, const BigInt& ell,
                  const std::vector<BigInt>& w) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw MatrixIoException(MatrixIoError::OpenFailed, "cannot open " + path);
  out << "# kernel mod " << bigint_to_hex(ell) << " dim " << w.size() << "\n";
  for (const BigInt& x : w) out << bigint_to_hex(x) << "\n";
  if (!out) throw MatrixIoException(MatrixIoError::OpenFailed, "write failed: " + path);
}

std::pair<BigInt, std::vector<BigInt>> read_kernel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MatrixIoException(MatrixIoError::OpenFailed, "cannot open " + path);
  std::string hash, kw1, kw2, ell_hex, kw3;
  std::size_t dim = 0;
  if (!(in >> hash >> kw1 >> kw2 >> ell_hex >> kw3 >> dim) || hash != "#" ||
      kw1 != "kernel" || kw2 != "mod" || kw3 != "dim")
    throw MatrixIoException(MatrixIoError::BadHeader, "bad kernel header");
  std::vector<BigInt> w;
  w.reserve(dim);
  std::string tok;
  for (std::size_t i = 0; i < dim; ++i) {
    if (!(in >> tok))
      throw MatrixIoException(MatrixIoError::Truncated, "missing coordinates");
    w.push_back(bigint_from_hex(tok));
  }
  return {bigint_from_hex(ell_hex), w};
}

// ---- subcommands ----

struct GenArgs {
  GeneratorParams params;
  std::string out_path;
};

int run_gen(const GenArgs& a) {
  CooMatrix m = gen_ffs_like(a.params);
  store_any(m, a.out_path);
  std::cout << "config.subcommand: gen\n";
  std::cout << "config.n: " << a.params.n << "\n";
  std::cout << "config.row_weight: " << a.params.mean_row_weight << "\n";
  std::cout << "config.pm1: " << a.params.pct_pm1 << "\n";
  std::cout << "config.max_coeff: " << a.params.max_coeff << "\n";
  std::cout << "config.dense_cols: " << a.params.dense_cols << "\n";
  std::cout << "config.seed: " << a.params.seed << "\n";
  std::cout << "config.singular: " << a.params.force_singular << "\n";
  std::cout << "config.output: " << a.out_path << "\n";
  std::cout << "nnz: " << m.nnz() << "\n";
  return kOk;
}

struct ConvertArgs {
  std::string in_path, out_path, via;
};

int run_convert(const ConvertArgs& a) {
  CooMatrix m = load_any(a.in_path);
  if (!a.via.empty()) {
    // Round-trip through the requested layout; must be lossless.
    CsrMatrix csr = coo_to_csr(m);
    CooMatrix back;
    if (a.via == "csr") {
      back = csr_to_coo(csr);
    } else if (a.via == "compressed") {
      back = csr_to_coo(decompress_values(compress_values(reorder_row_categories(csr))));
    } else if (a.via == "slcoo") {
      back = slcoo_to_coo(csr_to_slcoo(csr, 4));
    } else if (a.via == "ell") {
      std::uint32_t width = 1;
      for (std::uint32_t r = 0; r < csr.n_rows; ++r)
        width = std::max<std::uint32_t>(width, csr.row_len(r));
      back = ell_to_coo(csr_to_ell(csr, width));
    } else if (a.via == "hybrid") {
      back = hybrid_to_coo(split_hybrid(csr, choose_hybrid_k(csr)));
    } else {
      std::cerr << "unknown format: " << a.via << "\n";
      return kUsageError;
    }
    if (back.row_id != m.row_id || back.col_id != m.col_id || back.data != m.data) {
      std::cerr << "round-trip mismatch through " << a.via << "\n";
      return kVerifyFailure;
    }
    m = back;
  }
  store_any(m, a.out_path);
  std::cout << "config.subcommand: convert\n";
  std::cout << "config.input: " << a.in_path << "\n";
  std::cout << "config.output: " << a.out_path << "\n";
  if (!a.via.empty()) std::cout << "config.via: " << a.via << "\n";
  return kOk;
}

int run_stats(const std::string& path) {
  const CooMatrix m = load_any(path);
  const MatrixStats st = matrix_stats(m);
  std::cout << "config.subcommand: stats\n";
  std::cout << "config.input: " << path << "\n";
  std::cout << "n_rows: " << st.n_rows << "\n";
  std::cout << "n_cols: " << st.n_cols << "\n";
  std::cout << "nnz: " << st.nnz << "\n";
  std::cout << "max_row_norm: " << st.max_row_norm << "\n";
  std::cout << "pct_pm1: " << st.pct_pm1 << "\n";
  for (const auto& [w, count] : st.row_weight_hist)
    std::cout << "row_weight[" << w << "]: " << count << "\n";
  std::uint64_t dense_max = 0;
  for (std::uint64_t d : st.col_density) dense_max = std::max(dense_max, d);
  std::cout << "max_col_density: " << dense_max << "\n";
  return kOk;
}

struct BenchArgs {
  std::string matrix_path;
  BasisArgs basis;
  MatrixPipeline pipe;
  int workers = default_workers();
  std::string partition = "rows";
  std::uint64_t iterations = 10;
  std::uint64_t seed = 1;
};

void print_report(const ThroughputReport& rep) {
  std::cout << "iterations: " << rep.iterations << "\n";
  std::cout << "nnz: " << rep.nnz << "\n";
  std::cout << "residues: " << rep.residues << "\n";
  std::cout << "reduce_every: " << rep.reduce_every << "\n";
  std::cout << "ops_per_iteration: " << rep.ops_per_iteration << "\n";
  std::cout << "total_ops: " << rep.total_ops << "\n";
  std::cout << "reduce_count: " << rep.reduce_count << "\n";
  std::cout << "time.wall_seconds: " << rep.wall_seconds << "\n";
  std::cout << "time.per_iteration_seconds: " << rep.per_iteration_seconds << "\n";
  std::cout << "time.ops_per_second: " << rep.ops_per_second << "\n";
  std::cout << "time.reduction_seconds: " << rep.reduction_seconds << "\n";
  std::cout << "time.reduction_share: " << rep.reduction_share << "\n";
}

int run_bench(const BenchArgs& a) {
  const CooMatrix coo = load_any(a.matrix_path);
  const BigInt ell = bigint_from_hex(a.basis.ell_hex);
  const MatrixStats st = matrix_stats(coo);
  const std::uint64_t r = std::max<std::uint64_t>(1, st.max_row_norm);
  const RnsBasis b = build_basis(ell, r, a.basis.k, a.basis.parsed_flavor());

  SpmvPlan plan;
  plan.workers = a.workers;
  plan.partition = a.partition == "residues" ? WorkPartition::ResidueChannels
                                             : WorkPartition::RowBlocks;
  const int f = max_accumulation_count(b, r);
  plan.reduce_every = f == kUnboundedAccumulation ? 1 << 20 : f;
  plan.row_norm = r;

  const CsrMatrix csr = prepare_csr(coo, a.pipe, a.workers);
  ThroughputReport rep;
  if (a.pipe.format == "csr") {
    rep = benchmark(csr, b, plan, a.iterations, a.seed);
  } else if (a.pipe.format == "compressed") {
    rep = benchmark(compress_values(csr), b, plan, a.iterations, a.seed);
  } else if (a.pipe.format == "coo") {
    rep = benchmark(csr_to_coo(csr), b, plan, a.iterations, a.seed);
  } else if (a.pipe.format == "slcoo") {
    rep = benchmark(csr_to_slcoo(csr, a.pipe.slice), b, plan, a.iterations, a.seed);
  } else if (a.pipe.format == "ell") {
    std::uint32_t width = 1;
    for (std::uint32_t row = 0; row < csr.n_rows; ++row)
      width = std::max<std::uint32_t>(width, csr.row_len(row));
    rep = benchmark(csr_to_ell(csr, width), b, plan, a.iterations, a.seed);
  } else if (a.pipe.format == "hybrid") {
    rep = benchmark(split_hybrid(csr, choose_hybrid_k(csr)), b, plan,
                    a.iterations, a.seed);
  } else {
    std::cerr << "unknown format: " << a.pipe.format << "\n";
    return kUsageError;
  }

  std::cout << "config.subcommand: bench\n";
  std::cout << "config.matrix: " << a.matrix_path << "\n";
  a.basis.echo(std::cout);
  a.pipe.echo(std::cout);
  std::cout << "config.workers: " << a.workers << "\n";
  std::cout << "config.partition: " << a.partition << "\n";
  std::cout << "config.iterations: " << a.iterations << "\n";
  std::cout << "config.seed: " << a.seed << "\n";
  std::cout << "basis: " << basis_to_string(b) << "\n";
  print_report(rep);
  return kOk;
}

struct SolveArgs {
  std::string matrix_path;
  BasisArgs basis;
  MatrixPipeline pipe;
  int workers = default_workers();
  std::uint64_t seed = 0;
  std::string out_path;
  std::string checkpoint_path;
  std::uint64_t checkpoint_interval = 0;
  std::string resume_path;
  std::uint64_t stop_after = 0;
};

int run_solve(const SolveArgs& a) {
  const CooMatrix coo = load_any(a.matrix_path);
  const BigInt ell = bigint_from_hex(a.basis.ell_hex);
  const MatrixStats st = matrix_stats(coo);
  const std::uint64_t r = std::max<std::uint64_t>(1, st.max_row_norm);
  const RnsBasis b = build_basis(ell, r, a.basis.k, a.basis.parsed_flavor());
  const CsrMatrix csr = prepare_csr(coo, a.pipe, a.workers);

  SolveOptions opt;
  opt.seed = a.seed;
  opt.plan.workers = a.workers;
  const int f = max_accumulation_count(b, r);
  opt.plan.reduce_every = f == kUnboundedAccumulation ? 1 << 20 : f;
  opt.plan.row_norm = r;
  opt.checkpoint_path = a.checkpoint_path;
  opt.checkpoint_interval = a.checkpoint_interval;
  opt.stop_after = a.stop_after;
  Checkpoint ck;
  if (!a.resume_path.empty()) {
    ck = load_checkpoint(a.resume_path);
    opt.resume = &ck;
  }

  const SolveResult res = solve(csr, ell, b, opt);

  std::cout << "config.subcommand: solve\n";
  std::cout << "config.matrix: " << a.matrix_path << "\n";
  a.basis.echo(std::cout);
  a.pipe.echo(std::cout);
  std::cout << "config.workers: " << a.workers << "\n";
  std::cout << "config.seed: " << a.seed << "\n";
  if (!a.checkpoint_path.empty()) {
    std::cout << "config.checkpoint: " << a.checkpoint_path << "\n";
    std::cout << "config.checkpoint_interval: " << a.checkpoint_interval << "\n";
  }
  if (!a.resume_path.empty())
    std::cout << "config.resume: " << a.resume_path << "\n";
  std::cout << "basis: " << basis_to_string(b) << "\n";
  std::cout << "n: " << res.report.n << "\n";
  std::cout << "attempts: " << res.report.attempts << "\n";
  std::cout << "krylov_iterations: " << res.report.krylov_iterations << "\n";
  std::cout << "sequence_length: " << res.report.sequence_length << "\n";
  std::cout << "bm_degree: " << res.report.bm_degree << "\n";
  std::cout << "mksol_iterations: " << res.report.mksol_iterations << "\n";
  std::cout << "used_fallback: " << res.report.used_fallback << "\n";
  std::cout << "stopped: " << res.report.stopped << "\n";
  std::cout << "time.krylov_seconds: " << res.report.krylov_seconds << "\n";
  std::cout << "time.bm_seconds: " << res.report.bm_seconds << "\n";
  std::cout << "time.mksol_seconds: " << res.report.mksol_seconds << "\n";
  std::cout << "success: " << res.success << "\n";

  if (res.report.stopped) return kOk;  // intentional early halt, state saved
  if (!res.success) {
    std::cerr << "no kernel vector found (matrix may be non-singular)\n";
    return kSolverFailure;
  }
  if (!a.out_path.empty()) write_kernel(a.out_path, ell, res.kernel);
  return kOk;
}

struct VerifyArgs {
  std::string matrix_path;
  std::string kernel_path;
};

int run_verify(const VerifyArgs& a) {
  const CooMatrix coo = load_any(a.matrix_path);
  const auto [ell, w] = read_kernel(a.kernel_path);
  std::cout << "config.subcommand: verify\n";
  std::cout << "config.matrix: " << a.matrix_path << "\n";
  std::cout << "config.kernel: " << a.kernel_path << "\n";
  std::cout << "config.ell: 0x" << bigint_to_hex(ell) << "\n";
  bool zero = true;
  for (const BigInt& x : w) zero = zero && x == 0;
  if (zero) {
    std::cerr << "zero vector\n";
    std::cout << "verified: 0\n";
    return kVerifyFailure;
  }
  const bool ok = check_kernel(coo_to_csr(coo), w, ell);
  std::cout << "verified: " << ok << "\n";
  if (!ok) {
    std::cerr << "verification failed\n";
    return kVerifyFailure;
  }
  return kOk;
}

int run_selftest(std::uint64_t seed) {
  std::cout << "config.subcommand: selftest\n";
  std::cout << "config.seed: " << seed << "\n";
  bool ok = true;
  auto report = [&](const std::string& name, bool pass) {
    std::cout << "selftest " << name << ": " << (pass ? "ok" : "FAILED") << "\n";
    ok = ok && pass;
  };

  BigInt ell;
  mpz_nextprime(ell.get_mpz_t(), BigInt(BigInt(1) << 216).get_mpz_t());
  GeneratorParams gp;
  gp.n = 120;
  gp.mean_row_weight = 10;
  gp.pct_pm1 = 0.9;
  gp.max_coeff = 9;
  gp.seed = seed;
  const CooMatrix coo = gen_ffs_like(gp);
  const CsrMatrix csr = coo_to_csr(coo);
  const MatrixStats st = matrix_stats(csr);
  const std::uint64_t r = std::max<std::uint64_t>(1, st.max_row_norm);

  for (const auto& [k, flavor] :
       {std::pair<int, RnsFlavor>{64, RnsFlavor::Int64},
        std::pair<int, RnsFlavor>{52, RnsFlavor::Float52}}) {
    const RnsBasis b = build_basis(ell, r, k, flavor);
    SpmvPlan plan;
    const int f = max_accumulation_count(b, r);
    plan.reduce_every = f == kUnboundedAccumulation ? 1 << 20 : f;
    plan.row_norm = r;

    std::mt19937_64 rng(seed + 7);
    std::vector<BigInt> v0;
    for (std::uint32_t i = 0; i < gp.n; ++i) v0.push_back(random_below(rng, ell));
    std::vector<BigInt> ref = v0;
    for (int t = 0; t < 4; ++t) ref = oracle_spmv_mod(coo, ref, ell);
    const RnsVector rv0 = rns_vector_from_ints(b, v0);

    auto matches = [&](const RnsVector& out) {
      const std::vector<BigInt> got = ints_from_rns_vector(b, out);
      for (std::size_t i = 0; i < got.size(); ++i)
        if (oracle_mod(got[i], ell) != ref[i]) return false;
      return true;
    };
    const std::string tag = "k" + std::to_string(k);
    report(tag + ".csr", matches(spmv_iterate(csr, rv0, 4, b, plan)));
    const CsrMatrix cat = reorder_row_categories(csr);
    report(tag + ".compressed",
           matches(spmv_iterate(compress_values(cat), rv0, 4, b, plan)));
    report(tag + ".coo", matches(spmv_iterate(coo, rv0, 4, b, plan)));
    report(tag + ".slcoo",
           matches(spmv_iterate(csr_to_slcoo(csr, 4), rv0, 4, b, plan)));
    std::uint32_t width = 1;
    for (std::uint32_t row = 0; row < csr.n_rows; ++row)
      width = std::max<std::uint32_t>(width, csr.row_len(row));
    report(tag + ".ell",
           matches(spmv_iterate(csr_to_ell(csr, width), rv0, 4, b, plan)));
    report(tag + ".hybrid",
           matches(spmv_iterate(split_hybrid(csr, choose_hybrid_k(csr)), rv0, 4,
                                b, plan)));
  }
  std::cout << "selftest_result: " << (ok ? "pass" : "fail") << "\n";
  return ok ? kOk : kVerifyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact sparse linear algebra over Z/ellZ in RNS"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* cmd_gen = app.add_subcommand("gen", "generate an FFS-like matrix");
  cmd_gen->add_option("--n", gen.params.n, "square dimension")->required();
  cmd_gen->add_option("--row-weight", gen.params.mean_row_weight, "mean row weight")
      ->required();
  cmd_gen->add_option("--pm1", gen.params.pct_pm1, "fraction of +-1 coefficients");
  cmd_gen->add_option("--max-coeff", gen.params.max_coeff, "largest |coefficient|");
  cmd_gen->add_option("--dense-cols", gen.params.dense_cols, "dense column head");
  cmd_gen->add_option("--seed", gen.params.seed, "generator seed");
  cmd_gen->add_flag("--singular", gen.params.force_singular,
                    "force a non-trivial kernel");
  cmd_gen->add_option("-o,--output", gen.out_path, "output path")->required();

  ConvertArgs conv;
  CLI::App* cmd_conv = app.add_subcommand("convert", "convert matrix files");
  cmd_conv->add_option("-i,--input", conv.in_path, "input path")->required();
  cmd_conv->add_option("-o,--output", conv.out_path, "output path")->required();
  cmd_conv->add_option("--via", conv.via,
                       "round-trip through a layout: csr|compressed|slcoo|ell|hybrid");

  std::string stats_path;
  CLI::App* cmd_stats = app.add_subcommand("stats", "matrix statistics");
  cmd_stats->add_option("matrix", stats_path, "matrix path")->required();

  BenchArgs bench;
  CLI::App* cmd_bench = app.add_subcommand("bench", "SpMV throughput");
  cmd_bench->add_option("-m,--matrix", bench.matrix_path, "matrix path")->required();
  add_basis_options(cmd_bench, bench.basis);
  add_pipeline_options(cmd_bench, bench.pipe);
  cmd_bench->add_option("--workers", bench.workers, "worker count");
  cmd_bench->add_option("--partition", bench.partition, "rows|residues");
  cmd_bench->add_option("--iterations", bench.iterations, "iteration count");
  cmd_bench->add_option("--seed", bench.seed, "input vector seed");

  SolveArgs solve_args;
  CLI::App* cmd_solve = app.add_subcommand("solve", "find a kernel vector");
  cmd_solve->add_option("-m,--matrix", solve_args.matrix_path, "matrix path")
      ->required();
  add_basis_options(cmd_solve, solve_args.basis);
  add_pipeline_options(cmd_solve, solve_args.pipe);
  cmd_solve->add_option("--workers", solve_args.workers, "worker count");
  cmd_solve->add_option("--seed", solve_args.seed, "randomness seed");
  cmd_solve->add_option("-o,--output", solve_args.out_path, "kernel vector path");
  cmd_solve->add_option("--checkpoint", solve_args.checkpoint_path,
                        "checkpoint file");
  cmd_solve->add_option("--checkpoint-interval", solve_args.checkpoint_interval,
                        "iterations between checkpoints");
  cmd_solve->add_option("--resume", solve_args.resume_path,
                        "resume from a checkpoint");
  cmd_solve->add_option("--stop-after", solve_args.stop_after,
                        "halt after this many Krylov iterations");

  VerifyArgs verify;
  CLI::App* cmd_verify = app.add_subcommand("verify", "check a kernel vector");
  cmd_verify->add_option("-m,--matrix", verify.matrix_path, "matrix path")
      ->required();
  cmd_verify->add_option("--kernel", verify.kernel_path, "kernel vector path")
      ->required();

  std::uint64_t selftest_seed = 1;
  CLI::App* cmd_selftest = app.add_subcommand("selftest", "oracle equivalence suite");
  cmd_selftest->add_option("--seed", selftest_seed, "instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (cmd_gen->parsed()) return run_gen(gen);
    if (cmd_conv->parsed()) return run_convert(conv);
    if (cmd_stats->parsed()) return run_stats(stats_path);
    if (cmd_bench->parsed()) return run_bench(bench);
    if (cmd_solve->parsed()) return run_solve(solve_args);
    if (cmd_verify->parsed()) return run_verify(verify);
    if (cmd_selftest->parsed()) return run_selftest(selftest_seed);
  } catch (const MatrixIoException& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}
