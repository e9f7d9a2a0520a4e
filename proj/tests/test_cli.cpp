// CLI behavior tests: exercises the binary end to end. Usage: test_cli <path>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

int g_failures = 0;

#define REQUIRE(cond, msg)                                                 \
  do {                                                                     \
    if (!(cond)) {                                                         \
      std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << msg \
                << "\n";                                                   \
      ++g_failures;                                                        \
    }                                                                      \
  } while (0)

struct RunResult {
  int exit_code;
  std::string out;
};

std::string g_cli;
std::string g_dir;

RunResult run(const std::string& args) {
  std::string out_file = g_dir + "/out.txt";
  std::string cmd = g_cli + " " + args + " > " + out_file + " 2>/dev/null";
  int rc = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(rc), ss.str()};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: test_cli <cli-path>\n";
    return 2;
  }
  g_cli = argv[1];
  char tmpl[] = "/tmp/dirlap_cli_XXXXXX";
  g_dir = mkdtemp(tmpl);

  std::string cyc3 = g_dir + "/cyc3.txt";
  write_file(cyc3, "0 1 1\n1 2 1\n2 0 1\n");
  std::string path3 = g_dir + "/path3.txt";
  write_file(path3, "# comment line\n0 1 1\n1 0 1\n1 2 1\n2 1 1\n");
  std::string rhs3 = g_dir + "/rhs3.txt";
  write_file(rhs3, "1\n-1\n0\n");

  // diagnose mirrors validate() one to one
  {
    RunResult r = run("diagnose -i " + cyc3);
    REQUIRE(r.exit_code == 0, "diagnose exit");
    REQUIRE(contains(r.out, "\"is_z_matrix\": true"), "z flag");
    REQUIRE(contains(r.out, "\"is_laplacian\": true"), "laplacian flag");
    REQUIRE(contains(r.out, "\"is_eulerian\": true"), "eulerian flag");
    REQUIRE(contains(r.out, "\"strongly_connected\": true"), "scc flag");
    REQUIRE(contains(r.out, "\"alpha_rcdd\": 0.0"), "alpha value");
    REQUIRE(contains(r.out, "\"schema_version\": 1"), "schema version");
  }

  // stationary on the 3-cycle is uniform
  {
    RunResult r = run("stationary -i " + cyc3 + " --eps 1e-6");
    REQUIRE(r.exit_code == 0, "stationary exit");
    REQUIRE(contains(r.out, "0.3333333333333333"), "uniform stationary");
    REQUIRE(contains(r.out, "\"report\""), "report present");
  }

  // hitting time on the deterministic cycle
  {
    RunResult r = run("hitting -i " + cyc3 + " --u 0 --v 2 --eps 1e-6");
    REQUIRE(r.exit_code == 0, "hitting exit");
    std::size_t hpos = r.out.find("\"hitting_time\":");
    REQUIRE(hpos != std::string::npos, "hitting field present");
    double hv = std::atof(r.out.c_str() + r.out.find(':', hpos) + 1);
    REQUIRE(std::fabs(hv - 2.0) <= 1e-6, "hitting value, got " + std::to_string(hv));
  }

  // sketch + sketch-query round trip through the binary format
  {
    std::string sk = g_dir + "/p3.sketch";
    RunResult r1 = run("sketch -i " + path3 + " --eps 0.2 --seed 1 --out " + sk);
    REQUIRE(r1.exit_code == 0, "sketch exit");
    RunResult r2 = run("sketch-query --sketch " + sk + " --u 0 --v 2");
    REQUIRE(r2.exit_code == 0, "sketch-query exit");
    std::size_t pos = r2.out.find("\"commute_estimate\":");
    REQUIRE(pos != std::string::npos, "estimate present");
    double val = std::atof(r2.out.c_str() + r2.out.find(':', pos) + 1);
    REQUIRE(val >= 6.4 && val <= 9.6, "commute estimate in range, got " + std::to_string(val));
  }

  // determinism: byte-identical stdout across runs with a fixed seed
  {
    for (std::string cmd :
         {"stationary -i " + cyc3 + " --seed 7", "pagerank -i " + path3 + " --beta 0.2 --seed 7",
          "escape -i " + path3 + " --u 0 --v 2 --seed 7",
          "solve -i " + cyc3 + " --rhs " + rhs3 + " --seed 7"}) {
      RunResult a = run(cmd);
      RunResult b = run(cmd);
      REQUIRE(a.exit_code == 0, "exit for " + cmd);
      REQUIRE(a.out == b.out, "determinism for " + cmd);
      REQUIRE(!contains(a.out, "wall"), "no wall time in payload");
    }
  }

  // tsv format
  {
    RunResult r = run("diagnose -i " + cyc3 + " --format tsv");
    REQUIRE(r.exit_code == 0, "tsv exit");
    REQUIRE(contains(r.out, "is_eulerian\ttrue"), "tsv formatting");
  }

  // validation failures exit 2
  {
    std::string bad = g_dir + "/bad.txt";
    write_file(bad, "0 1 -1\n");
    REQUIRE(run("stationary -i " + bad).exit_code == 2, "invalid weight exit code");
    std::string selfloop = g_dir + "/self.txt";
    write_file(selfloop, "1 1 1\n");
    REQUIRE(run("diagnose -i " + selfloop).exit_code == 2, "self-loop exit code");
    REQUIRE(run("stationary -i " + g_dir + "/missing.txt").exit_code == 2, "missing file");
    std::string disc = g_dir + "/disc.txt";
    write_file(disc, "0 1 1\n1 0 1\n2 3 1\n3 2 1\n");
    REQUIRE(run("stationary -i " + disc).exit_code == 2, "disconnected graph exit code");
    REQUIRE(run("hitting -i " + cyc3 + " --u 0 --v 9").exit_code == 2, "vertex range");
    REQUIRE(run("nonsense").exit_code == 2, "unknown subcommand");
  }

  // pagerank teleport options
  {
    RunResult r = run("pagerank -i " + cyc3 + " --beta 0.5 --source 0");
    REQUIRE(r.exit_code == 0, "pagerank exit");
    REQUIRE(contains(r.out, "0.571428"), "pagerank mass at source");
  }

  // pinv command
  {
    RunResult r = run("pinv -i " + cyc3 + " --rhs " + rhs3 + " --eps 1e-8");
    REQUIRE(r.exit_code == 0, "pinv exit");
    REQUIRE(contains(r.out, "\"x\""), "pinv payload");
  }

  if (g_failures == 0) {
    std::printf("test_cli: all checks passed\n");
    return 0;
  }
  std::printf("test_cli: %d failures\n", g_failures);
  return 1;
}
