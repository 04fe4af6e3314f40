#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string cli_path() {
#ifdef RNSLA_CLI_PATH
  return RNSLA_CLI_PATH;
#else
  const char* p = std::getenv("RNSLA_CLI_PATH");
  REQUIRE_MESSAGE(p != nullptr, "RNSLA_CLI_PATH must point at the CLI binary");
  return p;
#endif
}

std::filesystem::path work_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "rnsla_cli_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  const auto out = work_dir() / "last_output.txt";
  const std::string cmd = cli_path() + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  r.output = ss.str();
  return r;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), {});
}

// drop time.* report lines, which legitimately vary run to run
std::string without_timing(const std::string& text) {
  std::stringstream in(text), out;
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("time.", 0) != 0) out << line << '\n';
  return out.str();
}

// nextprime(2^216)
const std::string kEll217 =
    "10000000000000000000000000000000000000000000000000001a7";

}  // namespace

TEST_CASE("gen is byte-reproducible and stats reports the shape") {
  const auto dir = work_dir();
  const auto m1 = dir / "gen_a.smz";
  const auto m2 = dir / "gen_b.smz";
  const std::string args = "--n 400 --row-weight 20 --pm1 0.9 --max-coeff 7 --seed 5 -o ";
  CHECK(run("gen " + args + m1.string()).exit_code == 0);
  CHECK(run("gen " + args + m2.string()).exit_code == 0);
  CHECK(file_bytes(m1) == file_bytes(m2));

  const RunResult st = run("stats " + m1.string());
  CHECK(st.exit_code == 0);
  CHECK(st.output.find("n_rows: 400") != std::string::npos);
  // pm1 fraction lands near the request
  const auto pos = st.output.find("pct_pm1: ");
  REQUIRE(pos != std::string::npos);
  const double pct = std::stod(st.output.substr(pos + 9));
  CHECK(pct == doctest::Approx(0.9).epsilon(0.012));
}

TEST_CASE("solve then verify round trip") {
  const auto dir = work_dir();
  const auto mat = dir / "solve_m.smz";
  const auto ker = dir / "solve_k.txt";
  CHECK(run("gen --n 120 --row-weight 8 --pm1 0.9 --max-coeff 5 --seed 9 --singular -o " +
            mat.string())
            .exit_code == 0);
  const RunResult sol = run("solve -m " + mat.string() + " --ell " + kEll217 +
                            " -o " + ker.string());
  CHECK(sol.exit_code == 0);
  CHECK(sol.output.find("success: 1") != std::string::npos);

  const RunResult ver =
      run("verify -m " + mat.string() + " --kernel " + ker.string());
  CHECK(ver.exit_code == 0);
  CHECK(ver.output.find("verified: 1") != std::string::npos);

  // solving is deterministic modulo timing lines
  const auto ker2 = dir / "solve_k2.txt";
  const RunResult sol2 = run("solve -m " + mat.string() + " --ell " + kEll217 +
                             " -o " + ker2.string());
  CHECK(sol2.exit_code == 0);
  CHECK(without_timing(sol2.output) == without_timing(sol.output));
  CHECK(file_bytes(ker) == file_bytes(ker2));

  // a zero vector is rejected with the verification exit code
  const auto zero = dir / "zero_k.txt";
  {
    std::ofstream z(zero);
    z << "# kernel mod " << kEll217 << " dim 120\n";
    for (int i = 0; i < 120; ++i) z << "0\n";
  }
  const RunResult bad = run("verify -m " + mat.string() + " --kernel " + zero.string());
  CHECK(bad.exit_code == 4);
  CHECK(bad.output.find("zero vector") != std::string::npos);
}

TEST_CASE("convert round trips through text and back") {
  const auto dir = work_dir();
  const auto bin = dir / "conv.smz";
  const auto txt = dir / "conv.mtx";
  const auto back = dir / "conv2.smz";
  CHECK(run("gen --n 150 --row-weight 10 --pm1 0.8 --max-coeff 9 --seed 4 -o " +
            bin.string())
            .exit_code == 0);
  CHECK(run("convert -i " + bin.string() + " -o " + txt.string() + " --via hybrid")
            .exit_code == 0);
  CHECK(run("convert -i " + txt.string() + " -o " + back.string() + " --via compressed")
            .exit_code == 0);
  CHECK(file_bytes(bin) == file_bytes(back));
}

TEST_CASE("bench prints exact operation accounting") {
  const auto dir = work_dir();
  const auto mat = dir / "bench_m.smz";
  CHECK(run("gen --n 200 --row-weight 12 --pm1 0.9 --max-coeff 5 --seed 2 -o " +
            mat.string())
            .exit_code == 0);
  const RunResult b = run("bench -m " + mat.string() + " --ell " + kEll217 +
                          " --format compressed --iterations 6 --workers 2");
  CHECK(b.exit_code == 0);
  CHECK(b.output.find("ops_per_iteration: ") != std::string::npos);
  CHECK(b.output.find("config.format: compressed") != std::string::npos);
  CHECK(b.output.find("time.wall_seconds: ") != std::string::npos);
}

TEST_CASE("usage and i/o failures use distinct exit codes") {
  CHECK(run("gen --no-such-flag").exit_code == 2);
  CHECK(run("totally-unknown-subcommand").exit_code == 2);
  CHECK(run("stats /nonexistent/path.smz").exit_code == 3);
}

TEST_CASE("selftest passes") {
  const RunResult r = run("selftest");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("FAILED") == std::string::npos);
  CHECK(r.output.find(": ok") != std::string::npos);
}
