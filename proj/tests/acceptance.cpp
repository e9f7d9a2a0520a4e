// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Usage: acceptance [cli-path]   (the CLI path enables the
// determinism criterion; skipped when omitted)

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dirlap/errors.hpp"
#include "dirlap/eulerian.hpp"
#include "dirlap/graph.hpp"
#include "dirlap/oracles.hpp"
#include "dirlap/pagerank.hpp"
#include "dirlap/rcdd.hpp"
#include "dirlap/stationary.hpp"
#include "dirlap/walk.hpp"
#include "util.hpp"

using namespace dirlap;
using namespace testutil;

namespace {

int g_failed = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion-%d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// n drawn from [5, 100], skewed toward small sizes
int draw_size(Rng& rng) {
  double u = rng.next_double();
  return 5 + static_cast<int>(95.0 * u * u * u);
}

void criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  int bad = 0;
  double worst = 0.0;
  const double eps = 1e-8;
  for (int rep = 0; rep < 50; ++rep) {
    int n = draw_size(rng);
    DirectedLaplacian L = random_eulerian(n, 3, rng);
    if (L.nnz() > 1000 + static_cast<std::size_t>(n)) continue;
    Eigen::MatrixXd Ld = dense(L.matrix());
    Eigen::MatrixXd U = 0.5 * (Ld + Ld.transpose());
    Eigen::MatrixXd Up = oracles::dense_pinv(U);
    std::vector<double> b = random_vector_perp_ones(n, rng);
    auto [x, repx] = solve_eulerian(L, b, eps);
    Eigen::VectorXd diff = to_eigen(x) - oracles::dense_pinv(Ld) * to_eigen(b);
    double lhs = std::sqrt(std::max(0.0, diff.dot(U * diff)));
    double rhs = std::sqrt(std::max(0.0, to_eigen(b).dot(Up * to_eigen(b))));
    double ratio = lhs / (eps * rhs);
    worst = std::max(worst, ratio);
    if (ratio > 1.0 + 1e-6) ++bad;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "eulerian solver U-norm guarantee: %d/50 failures, worst ratio %.3f, %.1f s",
                bad, worst, elapsed_s(t0));
  report(1, bad == 0, buf);
}

void criterion2() {
  Rng rng(102);
  bool ok = true;
  for (int rep = 0; rep < 20; ++rep) {
    int n = 5 + static_cast<int>(rng.next_below(26));
    DirectedLaplacian L = random_eulerian(n, 4, rng);
    Eigen::MatrixXd Ld = dense(L.matrix());
    Eigen::MatrixXd U = 0.5 * (Ld + Ld.transpose());
    Eigen::MatrixXd Up = oracles::dense_pinv(U);
    Eigen::MatrixXd X = Ld.transpose() * Up * Ld;
    for (int probe = 0; probe < 1000; ++probe) {
      Eigen::VectorXd v = to_eigen(random_vector(n, rng));
      double qU = v.dot(U * v);
      if (v.dot(X * v) < qU - 1e-9 * qU) ok = false;
    }
    if ((X * Up).trace() > 2.0 * (n - 1.0) * (n - 1.0) + 1e-6) ok = false;
  }
  report(2, ok, "squared-system domination and trace bound on 20 graphs");
}

void criterion3() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(103);
  int bad_cert = 0, bad_kappa = 0, bad_angle = 0;
  for (int rep = 0; rep < 50; ++rep) {
    int n = draw_size(rng);
    DirectedLaplacian L = random_strongly_connected(n, 2 * n, rng);
    double alpha = 0.01;
    StationaryResult res = compute_stationary(L, alpha);

    std::vector<double> boost(n), cs(n);
    for (int i = 0; i < n; ++i) {
      boost[i] = 3.0 * alpha * n * L.diag()[i];
      cs[i] = res.s[i] / L.diag()[i];
    }
    if (validate(L.matrix().plus_diag(boost).scaled_cols(cs)).alpha_rcdd <
        alpha * (1.0 - 1e-6))
      ++bad_cert;
    double smax = 0.0, smin = 1e300;
    for (double v : res.s) {
      smax = std::max(smax, v);
      smin = std::min(smin, v);
    }
    if (smax / smin > 20.0 * n / (alpha * alpha)) ++bad_kappa;

    StationaryResult fine = compute_stationary(L, 1e-6);
    std::vector<double> sp = oracles::power_stationary(random_walk_matrix(L), 1e-14);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < n; ++i) {
      dot += fine.s[i] * sp[i];
      na += fine.s[i] * fine.s[i];
      nb += sp[i] * sp[i];
    }
    if (std::acos(std::min(1.0, dot / std::sqrt(na * nb))) > 1e-3) ++bad_angle;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "stationary: certificate fails %d, kappa fails %d, angle fails %d (50 graphs, "
                "%.1f s)",
                bad_cert, bad_kappa, bad_angle, elapsed_s(t0));
  report(3, bad_cert + bad_kappa + bad_angle == 0, buf);
}

void criterion4() {
  Rng rng(104);
  bool ok = true;
  for (int rep = 0; rep < 20; ++rep) {
    int n = 3 + static_cast<int>(rng.next_below(10));
    SparseMatrix A = random_rcdd_z(n, 0.05 + rng.next_double(), rng);
    Eigen::MatrixXd Ld = dense(rcdd_embedding(A));
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n + 1, n);
    C.topRows(n).setIdentity();
    C.row(n).setConstant(-1.0);
    Eigen::MatrixXd lhs = C.transpose() * oracles::dense_pinv(Ld) * C;
    if ((lhs - dense(A).inverse()).norm() > 1e-8) ok = false;
  }
  report(4, ok, "embedding identity A^{-1} = C^T L^dag C on 20 matrices");
}

void criterion5() {
  Rng rng(105);
  bool ok = true;
  const double eps = 1e-8;
  for (double beta : {0.5, 0.1, 0.01}) {
    int n = 10 + static_cast<int>(rng.next_below(41));
    RandomWalkMatrix W = random_walk_matrix(random_strongly_connected(n, 3 * n, rng));
    std::vector<double> p(n);
    double mass = 0.0;
    for (int i = 0; i < n; ++i) mass += (p[i] = rng.next_double());
    for (double& v : p) v /= mass;
    auto [x, repx] = personalized_pagerank(W, p, beta, eps);
    Eigen::MatrixXd M =
        Eigen::MatrixXd::Identity(n, n) - (1.0 - beta) * dense(W.matrix());
    Eigen::VectorXd xs = beta * M.partialPivLu().solve(to_eigen(p));
    if ((to_eigen(x) - xs).norm() > eps * l2(p) * 1.01) ok = false;

    std::vector<double> wx = W.matrix().matvec(x);
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
      double ri = beta * p[i] + (1.0 - beta) * wx[i] - x[i];
      res += ri * ri;
    }
    if (std::sqrt(res) > 3.0 * eps * l2(p)) ok = false;
  }
  report(5, ok, "personalized PageRank dense cross-check at beta in {0.5, 0.1, 0.01}");
}

void criterion6() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(106);
  bool ok = true;
  for (int rep = 0; rep < 20; ++rep) {
    int n = 4 + static_cast<int>(rng.next_below(9));
    RandomWalkMatrix W = random_walk_matrix(random_strongly_connected(n, 3 * n, rng));
    double tmix = static_cast<double>(oracles::brute_tmix(W));
    double tpp = static_cast<double>(oracles::brute_tpp(W));
    double n1 = oracles::pinv_one_norm(W);
    double n2 = oracles::pinv_two_norm(W);
    double lg = std::log2(static_cast<double>(std::max(n, 2)));
    double sq = std::sqrt(static_cast<double>(n));
    if (std::sqrt(tmix) / 16.0 > n1 * (1.0 + 1e-9)) ok = false;
    if (n1 > tmix * 4.0 * sq * lg * (1.0 + 1e-9)) ok = false;
    if (tpp / 8.0 > n1 * (1.0 + 1e-9)) ok = false;
    if (n1 > tpp * 16.0 * sq * lg * (1.0 + 1e-9)) ok = false;
    if (tpp > 36.0 * tmix) ok = false;
    if (n1 / sq > n2 * (1.0 + 1e-9)) ok = false;
    if (n2 > sq * n1 * (1.0 + 1e-9)) ok = false;

    ConditionEstimate est = estimate_tpp(W, 1000 + rep);
    if (est.kappa_tilde < tpp) ok = false;
    if (est.kappa_tilde > 400.0 * n * n * n1 * (1.0 + 1e-9)) ok = false;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "mixing-time sandwiches on 20 graphs (%.1f s)",
                elapsed_s(t0));
  report(6, ok, buf);
}

void criterion7() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(107);
  bool ok = true;
  const long trials = 1000000;
  for (int rep = 0; rep < 10; ++rep) {
    int n = 6 + static_cast<int>(rng.next_below(15));
    RandomWalkMatrix W = random_walk_matrix(random_strongly_connected(n, 3 * n, rng));
    int u = static_cast<int>(rng.next_below(n));
    int v = static_cast<int>(rng.next_below(n));
    if (u == v) v = (v + 1) % n;

    double eps = 1e-4;
    double h = hitting_time(W, u, v, eps);
    auto mc = oracles::mc_hitting(W, u, v, trials, 200 + rep);
    if (std::fabs(h - mc.mean) > 4.0 * mc.stderr_ + eps) ok = false;

    EscapeResult er = escape_probabilities(W, u, v, eps);
    int w = static_cast<int>(rng.next_below(n));
    auto me = oracles::mc_escape(W, u, v, w, trials, 300 + rep);
    if (std::fabs(er.p[w] - me.mean) > 4.0 * me.stderr_ + eps) ok = false;
  }
  // deterministic cycle: exact to eps
  RandomWalkMatrix W3 = random_walk_matrix(cycle3());
  if (std::fabs(hitting_time(W3, 0, 2, 1e-6) - 2.0) > 1e-6) ok = false;
  if (std::fabs(commute_time(W3, 0, 1, 1e-6) - 3.0) > 2e-6) ok = false;
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "hitting/escape vs Monte Carlo (10^6 trials, 10 graphs, %.1f s)", elapsed_s(t0));
  report(7, ok, buf);
}

void criterion8() {
  Rng rng(108);
  bool ok = true;
  const double eps = 1e-6;
  for (int rep = 0; rep < 6; ++rep) {
    int n = 5 + static_cast<int>(rng.next_below(8));
    RandomWalkMatrix W = random_walk_matrix(random_strongly_connected(n, 3 * n, rng));
    std::vector<double> s = oracles::power_stationary(W, 1e-15);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd Wd = dense(W.matrix());
    Eigen::MatrixXd Sd = Eigen::VectorXd::Map(s.data(), n).asDiagonal();
    Eigen::MatrixXd Lb = (I - Wd) * Sd;
    Eigen::MatrixXd Lbp = oracles::dense_pinv(Lb);
    Eigen::MatrixXd Ub = 0.5 * (Lb + Lb.transpose());
    Eigen::MatrixXd P = oracles::dense_pinv(I - Wd);
    Eigen::MatrixXd C(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) {
          C(a, b) = 0.0;
          continue;
        }
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        d(a) = 1.0;
        d(b) = -1.0;
        double c1 = d.dot(Lbp * d);
        double c2 = d.dot(Sd.inverse() * (P * d));
        double c3 = d.dot(Lbp.transpose() * (Ub * (Lbp * d)));
        if (std::fabs(c1 - c2) > 1e-8 * (1.0 + std::fabs(c1))) ok = false;
        if (std::fabs(c1 - c3) > 1e-8 * (1.0 + std::fabs(c1))) ok = false;
        C(a, b) = c2;
      }
    // triangle inequality within 6 eps
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          if (C(a, c) > C(a, b) + C(b, c) + 6.0 * eps) ok = false;
  }
  // symmetric graphs: commute = 2m x effective resistance
  for (int rep = 0; rep < 3; ++rep) {
    int n = 6 + static_cast<int>(rng.next_below(6));
    std::vector<Edge> edges;
    double total = 0.0;
    for (int i = 0; i < n - 1; ++i) {
      double w = 0.5 + rng.next_double();
      edges.push_back({i, i + 1, w});
      edges.push_back({i + 1, i, w});
      total += 2.0 * w;
    }
    for (int e = 0; e < n; ++e) {
      int a = static_cast<int>(rng.next_below(n)), b = static_cast<int>(rng.next_below(n));
      if (a == b) continue;
      double w = 0.5 + rng.next_double();
      edges.push_back({a, b, w});
      edges.push_back({b, a, w});
      total += 2.0 * w;
    }
    DirectedLaplacian L = from_edge_list(edges, n);
    RandomWalkMatrix W = random_walk_matrix(L);
    std::vector<double> s = oracles::power_stationary(W, 1e-15);
    Eigen::MatrixXd P =
        oracles::dense_pinv(Eigen::MatrixXd::Identity(n, n) - dense(W.matrix()));
    Eigen::MatrixXd Lp = oracles::dense_pinv(dense(L.matrix()));
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        d(a) = 1.0;
        d(b) = -1.0;
        Eigen::VectorXd q(n);
        for (int i = 0; i < n; ++i) q(i) = d(i) / s[i];
        double cab = q.dot(P * d);
        double reff = d.dot(Lp * d);
        if (std::fabs(cab - total * reff) > 1e-8 * (1.0 + cab)) ok = false;
      }
  }
  report(8, ok, "commute identities, undirected reduction, triangle inequality");
}

void criterion9() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(109);
  int violations = 0;
  int pairs_checked = 0;
  const double eps = 0.2;
  for (int g = 0; g < 5; ++g) {
    int n = 10 + 6 * g;  // up to 34
    RandomWalkMatrix W = random_walk_matrix(random_strongly_connected(n, 3 * n, rng));
    // dense commute times
    std::vector<double> s = oracles::power_stationary(W, 1e-15);
    Eigen::MatrixXd P =
        oracles::dense_pinv(Eigen::MatrixXd::Identity(n, n) - dense(W.matrix()));
    Eigen::MatrixXd C(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        d(a) = 1.0;
        d(b) = -1.0;
        Eigen::VectorXd q(n);
        for (int i = 0; i < n; ++i) q(i) = d(i) / s[i];
        C(a, b) = a == b ? 0.0 : q.dot(P * d);
      }
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      CommuteSketch sk = sketch(W, eps, seed);
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
          double q = sketch_query(sk, a, b);
          ++pairs_checked;
          if (q < (1.0 - eps) * C(a, b) || q > (1.0 + eps) * C(a, b)) ++violations;
        }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "sketch accuracy: %d violations over %d pair queries (%.1f s)",
                violations, pairs_checked, elapsed_s(t0));
  report(9, violations == 0 && elapsed_s(t0) < 300.0, buf);
}

void criterion10(const char* cli) {
  if (!cli) {
    report(10, false, "determinism: CLI path not supplied");
    return;
  }
  char tmpl[] = "/tmp/dirlap_acc_XXXXXX";
  std::string dir = mkdtemp(tmpl);
  {
    std::ofstream f(dir + "/g.txt");
    f << "0 1 1\n1 2 1\n2 0 1\n0 2 0.5\n2 1 0.25\n";
    std::ofstream r(dir + "/rhs.txt");
    r << "1\n-1\n0\n";
  }
  auto run = [&](const std::string& args, const std::string& out) {
    std::string cmd = std::string(cli) + " " + args + " > " + dir + "/" + out + " 2>/dev/null";
    return std::system(cmd.c_str());
  };
  auto slurp = [&](const std::string& name) {
    std::ifstream in(dir + "/" + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::string g = dir + "/g.txt";
  std::vector<std::string> cmds = {
      "diagnose -i " + g,
      "stationary -i " + g + " --seed 3",
      "pagerank -i " + g + " --beta 0.3 --source 1 --seed 3",
      "solve -i " + g + " --rhs " + dir + "/rhs.txt --seed 3",
      "pinv -i " + g + " --rhs " + dir + "/rhs.txt --seed 3",
      "hitting -i " + g + " --u 0 --v 2 --seed 3",
      "commute -i " + g + " --u 0 --v 2 --seed 3",
      "escape -i " + g + " --u 0 --v 2 --seed 3",
      "sketch -i " + g + " --eps 0.4 --seed 3 --out " + dir + "/s.bin",
      "sketch-query --sketch " + dir + "/s.bin --u 0 --v 2",
  };
  bool ok = true;
  for (const std::string& c : cmds) {
    if (run(c, "a.txt") != 0) ok = false;
    if (run(c, "b.txt") != 0) ok = false;
    if (slurp("a.txt") != slurp("b.txt") || slurp("a.txt").empty()) ok = false;
  }
  report(10, ok, "CLI determinism: byte-identical stdout across runs for every command");
}

}  // namespace

int main(int argc, char** argv) {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10(argc > 1 ? argv[1] : nullptr);
  if (g_failed == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria failed\n", g_failed);
  return 1;
}
