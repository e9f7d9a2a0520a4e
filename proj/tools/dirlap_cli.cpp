// dirlap: solvers and random-walk quantities for directed graph Laplacians.
//
// Results stream to stdout (JSON or TSV), logs to stderr. A fixed --seed
// reproduces byte-identical stdout.

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dirlap/errors.hpp"
#include "dirlap/eulerian.hpp"
#include "dirlap/graph.hpp"
#include "dirlap/oracles.hpp"
#include "dirlap/pagerank.hpp"
#include "dirlap/rcdd.hpp"
#include "dirlap/stationary.hpp"
#include "dirlap/walk.hpp"

using nlohmann::json;

namespace {

json report_json(const dirlap::SolveReport& r) {
  // wall time is intentionally omitted: stdout must be run-to-run identical
  return json{{"iterations", r.iterations}, {"restarts", r.restarts},
              {"residual", r.residual},     {"tol", r.tol},
              {"converged", r.converged},   {"method", r.method}};
}

json finite_or_string(double v) {
  if (std::isinf(v)) return v > 0 ? json("+inf") : json("-inf");
  return json(v);
}

std::vector<double> read_vector(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw dirlap::Error(dirlap::ErrorCode::ParseError, "cannot open '" + path + "'");
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (static_cast<int>(v.size()) != n)
    throw dirlap::Error(dirlap::ErrorCode::DimError,
                        "rhs has " + std::to_string(v.size()) + " entries, expected " +
                            std::to_string(n));
  return v;
}

void emit_tsv_value(std::ostream& os, const std::string& key, const json& v) {
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it)
      emit_tsv_value(os, key.empty() ? it.key() : key + "." + it.key(), it.value());
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i)
      emit_tsv_value(os, key + "[" + std::to_string(i) + "]", v[i]);
  } else {
    os << key << '\t' << v.dump() << '\n';
  }
}

void emit(const json& payload, const std::string& format) {
  if (format == "tsv") {
    emit_tsv_value(std::cout, "", payload);
  } else {
    std::cout << payload.dump(2) << '\n';
  }
}

struct Options {
  std::string input;
  std::string format = "json";
  std::string rhs_path;
  std::string sketch_path;
  std::string out_path;
  double eps = 1e-6;
  double alpha = 0.0;  // 0 = auto
  double beta = 0.15;
  int u = 0, v = 0;
  int source = -1;
  std::uint64_t seed = 0;
  bool oracle = false;
};

dirlap::EulerianConfig solver_config(const Options& o) {
  dirlap::EulerianConfig cfg;
  cfg.seed = o.seed;
  return cfg;
}

int run_stationary(const Options& o) {
  dirlap::DirectedLaplacian L = dirlap::load_edge_list(o.input);
  double alpha = o.alpha > 0.0 ? o.alpha
                               : std::clamp(o.eps / std::max(L.n(), 1), 1e-12, 0.4);
  dirlap::StationaryConfig scfg;
  scfg.solver = solver_config(o);
  dirlap::StationaryResult res = dirlap::compute_stationary(L, alpha, scfg);
  if (o.oracle) {
    dirlap::RandomWalkMatrix W = dirlap::random_walk_matrix(L);
    std::vector<double> sp = dirlap::oracles::power_stationary(W, 1e-14);
    double dot = 0, na = 0, nb = 0;
    for (int i = 0; i < L.n(); ++i) {
      dot += res.s[i] * sp[i];
      na += res.s[i] * res.s[i];
      nb += sp[i] * sp[i];
    }
    std::cerr << "oracle: angle vs power iteration = "
              << std::acos(std::min(1.0, dot / std::sqrt(na * nb))) << " rad\n";
  }
  dirlap::SolveReport rep;
  rep.iterations = res.iterations;
  rep.converged = res.certificate_alpha_rcdd;
  rep.method = "stationary";
  json payload{{"schema_version", 1},
               {"command", "stationary"},
               {"n", L.n()},
               {"parameters", {{"alpha", alpha}, {"eps", o.eps}, {"seed", o.seed}}},
               {"s", res.s},
               {"certificate_alpha_rcdd", res.certificate_alpha_rcdd},
               {"slack_norm", res.slack_norm},
               {"report", report_json(rep)}};
  emit(payload, o.format);
  return 0;
}

int run_pagerank(const Options& o) {
  dirlap::DirectedLaplacian L = dirlap::load_edge_list(o.input);
  dirlap::RandomWalkMatrix W = dirlap::random_walk_matrix(L);
  int n = W.n();
  std::vector<double> p(n, 1.0 / n);
  if (o.source >= 0) {
    if (o.source >= n)
      throw dirlap::Error(dirlap::ErrorCode::IndexError, "--source out of range");
    p.assign(n, 0.0);
    p[o.source] = 1.0;
  }
  auto [x, rep] = dirlap::personalized_pagerank(W, p, o.beta, o.eps, solver_config(o));
  if (o.oracle && n <= 200) {
    Eigen::MatrixXd Wd = dirlap::oracles::to_dense(W.matrix());
    Eigen::VectorXd pv(n);
    for (int i = 0; i < n; ++i) pv(i) = p[i];
    Eigen::VectorXd xs = o.beta * (Eigen::MatrixXd::Identity(n, n) -
                                   (1 - o.beta) * Wd).partialPivLu().solve(pv);
    double err = 0;
    for (int i = 0; i < n; ++i) err += (x[i] - xs(i)) * (x[i] - xs(i));
    std::cerr << "oracle: l2 error vs dense = " << std::sqrt(err) << "\n";
  }
  json payload{{"schema_version", 1},
               {"command", "pagerank"},
               {"n", n},
               {"parameters",
                {{"beta", o.beta}, {"eps", o.eps}, {"seed", o.seed}, {"source", o.source}}},
               {"x", x},
               {"report", report_json(rep)}};
  emit(payload, o.format);
  return 0;
}

int run_solve(const Options& o) {
  dirlap::DirectedLaplacian L = dirlap::load_edge_list(o.input);
  std::vector<double> b = read_vector(o.rhs_path, L.n());
  std::vector<double> x;
  dirlap::SolveReport rep;
  if (L.is_eulerian() && dirlap::strongly_connected(L)) {
    std::tie(x, rep) = dirlap::solve_eulerian(L, b, o.eps, solver_config(o));
  } else {
    std::tie(x, rep) = dirlap::solve_dd(L.matrix(), b, o.eps, solver_config(o));
  }
  if (o.oracle) {
    std::vector<double> r = L.matrix().matvec(x);
    double rn = 0, bn = 0;
    for (int i = 0; i < L.n(); ++i) {
      rn += (r[i] - b[i]) * (r[i] - b[i]);
      bn += b[i] * b[i];
    }
    std::cerr << "oracle: relative l2 residual = " << std::sqrt(rn / bn) << "\n";
  }
  json payload{{"schema_version", 1},
               {"command", "solve"},
               {"n", L.n()},
               {"parameters", {{"eps", o.eps}, {"seed", o.seed}}},
               {"x", x},
               {"report", report_json(rep)}};
  emit(payload, o.format);
  return 0;
}

int run_pinv(const Options& o) {
  dirlap::DirectedLaplacian L = dirlap::load_edge_list(o.input);
  std::vector<double> b = read_vector(o.rhs_path, L.n());
  auto [x, rep] = dirlap::solve_lap_pinv(L, b, o.eps, {}, solver_config(o));
  if (o.oracle && L.n() <= 200) {
    Eigen::MatrixXd P = dirlap::oracles::dense_pinv(dirlap::oracles::to_dense(L.matrix()));
    Eigen::VectorXd bv(L.n());
    for (int i = 0; i < L.n(); ++i) bv(i) = b[i];
    Eigen::VectorXd xs = P * bv;
    double err = 0;
    for (int i = 0; i < L.n(); ++i) err += (x[i] - xs(i)) * (x[i] - xs(i));
    std::cerr << "oracle: l2 error vs dense pinv = " << std::sqrt(err) << "\n";
  }
  json payload{{"schema_version", 1},
               {"command", "pinv"},
               {"n", L.n()},
               {"parameters", {{"eps", o.eps}, {"seed", o.seed}}},
               {"x", x},
               {"report", report_json(rep)}};
  emit(payload, o.format);
  return 0;
}

int run_hitting(const Options& o) {
  dirlap::DirectedLaplacian L = dirlap::load_edge_list(o.input);
  dirlap::RandomWalkMatrix W = dirlap::random_walk_matrix(L);
  double h = dirlap::hitting_time(W, o.u, o.v, o.eps, {}, solver_config(o));
  if (o.oracle) {
    auto mc = dirlap::oracles::mc_hitting(W, o.u, o.v, 200000, o.seed);
    std::cerr << "oracle: mc hitting = " << mc.mean << " +- " << mc.stderr_ << "\n";
  }
  dirlap::SolveReport rep;
  rep.tol = o.eps;
  rep.method = "hitting";
  json payload{{"schema_version", 1},
               {"command", "hitting"},
               {"n", W.n()},
               {"parameters", {{"u", o.u}, {"v", o.v}, {"eps", o.eps}, {"seed", o.seed}}},
               {"hitting_time", h},
               {"report", report_json(rep)}};
  emit(payload, o.format);
  return 0;
}

int run_commute(const Options& o) {
  dirlap::DirectedLaplacian L = dirlap::load_edge_list(o.input);
  dirlap::RandomWalkMatrix W = dirlap::random_walk_matrix(L);
  double c = dirlap::commute_time(W, o.u, o.v, o.eps, {}, solver_config(o));
  if (o.oracle) {
    auto m1 = dirlap::oracles::mc_hitting(W, o.u, o.v, 200000, o.seed);
    auto m2 = dirlap::oracles::mc_hitting(W, o.v, o.u, 200000, o.seed + 1);
    std::cerr << "oracle: mc commute = " << (m1.mean + m2.mean) << "\n";
  }
  dirlap::SolveReport rep;
  rep.tol = o.eps;
  rep.method = "commute";
  json payload{{"schema_version", 1},
               {"command", "commute"},
               {"n", W.n()},
               {"parameters", {{"u", o.u}, {"v", o.v}, {"eps", o.eps}, {"seed", o.seed}}},
               {"commute_time", c},
               {"report", report_json(rep)}};
  emit(payload, o.format);
  return 0;
}

int run_escape(const Options& o) {
  dirlap::DirectedLaplacian L = dirlap::load_edge_list(o.input);
  dirlap::RandomWalkMatrix W = dirlap::random_walk_matrix(L);
  dirlap::EscapeResult res = dirlap::escape_probabilities(W, o.u, o.v, o.eps, {},
                                                          solver_config(o));
  if (o.oracle) {
    for (int w = 0; w < std::min(W.n(), 4); ++w) {
      auto mc = dirlap::oracles::mc_escape(W, o.u, o.v, w, 100000, o.seed);
      std::cerr << "oracle: mc escape from " << w << " = " << mc.mean << "\n";
    }
  }
  dirlap::SolveReport rep;
  rep.tol = o.eps;
  rep.method = "escape";
  json payload{{"schema_version", 1},
               {"command", "escape"},
               {"n", W.n()},
               {"parameters", {{"u", o.u}, {"v", o.v}, {"eps", o.eps}, {"seed", o.seed}}},
               {"p", res.p},
               {"raw", res.raw},
               {"report", report_json(rep)}};
  emit(payload, o.format);
  return 0;
}

int run_sketch(const Options& o) {
  dirlap::DirectedLaplacian L = dirlap::load_edge_list(o.input);
  dirlap::RandomWalkMatrix W = dirlap::random_walk_matrix(L);
  dirlap::CommuteSketch sk = dirlap::sketch(W, o.eps, o.seed, {}, solver_config(o));
  dirlap::save_sketch(sk, o.out_path);
  dirlap::SolveReport rep;
  rep.tol = o.eps;
  rep.method = "sketch";
  json payload{{"schema_version", 1},
               {"command", "sketch"},
               {"n", sk.n},
               {"parameters", {{"eps", o.eps}, {"seed", o.seed}}},
               {"k", sk.k},
               {"patched", sk.patched},
               {"out", o.out_path},
               {"report", report_json(rep)}};
  emit(payload, o.format);
  return 0;
}

int run_sketch_query(const Options& o) {
  dirlap::CommuteSketch sk = dirlap::load_sketch(o.sketch_path);
  double val = dirlap::sketch_query(sk, o.u, o.v);
  dirlap::SolveReport rep;
  rep.method = "sketch-query";
  json payload{{"schema_version", 1},
               {"command", "sketch-query"},
               {"n", sk.n},
               {"parameters", {{"u", o.u}, {"v", o.v}, {"sketch", o.sketch_path}}},
               {"k", sk.k},
               {"commute_estimate", val},
               {"report", report_json(rep)}};
  emit(payload, o.format);
  return 0;
}

int run_diagnose(const Options& o) {
  dirlap::DirectedLaplacian L = dirlap::load_edge_list(o.input);
  dirlap::GraphDiagnostics d = dirlap::validate(L.matrix());
  json payload{{"schema_version", 1},
               {"command", "diagnose"},
               {"n", L.n()},
               {"parameters", {{"seed", o.seed}}},
               {"is_z_matrix", d.is_z_matrix},
               {"is_laplacian", d.is_laplacian},
               {"is_eulerian", d.is_eulerian},
               {"strongly_connected", d.strongly_connected},
               {"alpha_rcdd", finite_or_string(d.alpha_rcdd)},
               {"report", report_json(dirlap::SolveReport{})}};
  emit(payload, o.format);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"solvers and random-walk quantities for directed graph Laplacians"};
  app.require_subcommand(1);

  Options o;

  auto add_common = [&](CLI::App* cmd, bool needs_input) {
    if (needs_input)
      cmd->add_option("-i,--input", o.input, "edge-list file (u v w per line)")->required();
    cmd->add_option("--eps", o.eps, "target accuracy");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"json", "tsv"}));
    cmd->add_flag("--oracle", o.oracle, "cross-check with ground-truth oracles (debugging)")
        ->group("");
  };

  CLI::App* stationary = app.add_subcommand("stationary", "approximate stationary distribution");
  add_common(stationary, true);
  stationary->add_option("--alpha", o.alpha, "RCDD slack parameter (default: from eps)");

  CLI::App* pagerank = app.add_subcommand("pagerank", "personalized PageRank vector");
  add_common(pagerank, true);
  pagerank->add_option("--beta", o.beta, "restart probability");
  pagerank->add_option("--source", o.source, "teleport to a single vertex (default: uniform)");

  CLI::App* solve = app.add_subcommand("solve", "solve L x = b");
  add_common(solve, true);
  solve->add_option("--rhs", o.rhs_path, "right-hand side file (one float per line)")
      ->required();

  CLI::App* pinv = app.add_subcommand("pinv", "apply the Laplacian pseudoinverse");
  add_common(pinv, true);
  pinv->add_option("--rhs", o.rhs_path, "right-hand side file")->required();

  CLI::App* hitting = app.add_subcommand("hitting", "expected steps from u to v");
  add_common(hitting, true);
  hitting->add_option("--u", o.u)->required();
  hitting->add_option("--v", o.v)->required();

  CLI::App* commute = app.add_subcommand("commute", "round-trip time between u and v");
  add_common(commute, true);
  commute->add_option("--u", o.u)->required();
  commute->add_option("--v", o.v)->required();

  CLI::App* escape = app.add_subcommand("escape", "probability of reaching u before v");
  add_common(escape, true);
  escape->add_option("--u", o.u)->required();
  escape->add_option("--v", o.v)->required();

  CLI::App* sketch = app.add_subcommand("sketch", "all-pairs commute-time sketch");
  add_common(sketch, true);
  sketch->add_option("--out", o.out_path, "sketch output file")->required();

  CLI::App* squery = app.add_subcommand("sketch-query", "query a saved sketch");
  add_common(squery, false);
  squery->add_option("--sketch", o.sketch_path, "sketch file")->required();
  squery->add_option("--u", o.u)->required();
  squery->add_option("--v", o.v)->required();

  CLI::App* diagnose = app.add_subcommand("diagnose", "matrix-class diagnostics");
  add_common(diagnose, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (stationary->parsed()) return run_stationary(o);
    if (pagerank->parsed()) return run_pagerank(o);
    if (solve->parsed()) return run_solve(o);
    if (pinv->parsed()) return run_pinv(o);
    if (hitting->parsed()) return run_hitting(o);
    if (commute->parsed()) return run_commute(o);
    if (escape->parsed()) return run_escape(o);
    if (sketch->parsed()) return run_sketch(o);
    if (squery->parsed()) return run_sketch_query(o);
    if (diagnose->parsed()) return run_diagnose(o);
  } catch (const dirlap::Error& e) {
    std::cerr << "error (" << dirlap::error_code_name(e.code()) << "): " << e.what() << "\n";
    return e.is_validation() ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
