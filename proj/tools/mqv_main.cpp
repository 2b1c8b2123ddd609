// Command-line surface for the quiver/Stokes toolkit: graph inspection,
// root-system utilities, numerical verification suites and the
// Deligne-Simpson solver.  Machine-readable lines go to stdout; diagnostics
// to stderr.  Exit codes: 0 pass, 1 check failure, 2 input error.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mqv/dsolver.hpp"

using namespace mqv;

namespace {

struct RunConfig {
  uint64_t seed = 42;
  double tol = 1e-8;
  std::string mode = "rational";  // or "float"
  std::string output;             // redirect machine lines when set
  int samples = 100;

  void strip_exact(GraphSpec& spec) const {
    if (mode != "float") return;
    auto strip = [](QScalar& s) { s.exact.reset(); };
    for (auto& leg : spec.snova.legs)
      for (auto& p : leg.params) strip(p);
    for (auto& [k, v] : spec.explicit_params) strip(v);
  }
};

int check_line(const std::string& name, double residual, double tol) {
  bool pass = residual < tol;
  std::cout << "CHECK " << name << " residual=" << residual << " pass=" << (pass ? "true" : "false")
            << "\n";
  return pass ? 0 : 1;
}

GraphSpec load_spec(const std::string& path, const RunConfig& cfg) {
  GraphSpec spec = parse_graph_spec_file(path);
  cfg.strip_exact(spec);
  return spec;
}

std::pair<Params, RootVector> resolve_qd(const GraphSpec& spec) {
  const ColouredQuiver& q = spec.quiver();
  Params params(q.node_count(), QScalar::one());
  RootVector dims(q.node_count(), 0);
  if (spec.has_legs) {
    auto pv = spec.snova.param_vector();
    auto dv = spec.snova.dim_vector();
    params.assign(pv.begin(), pv.end());
    dims.assign(dv.begin(), dv.end());
  }
  for (const auto& [name, d] : spec.explicit_dims) dims[q.node_index(name)] = d;
  for (const auto& [name, p] : spec.explicit_params) params[q.node_index(name)] = p;
  return {params, dims};
}

void print_quiver_info(const GraphSpec& spec) {
  const ColouredQuiver& q = spec.quiver();
  std::cout << "nodes:";
  for (const auto& n : q.node_names) std::cout << " " << n;
  std::cout << "\ncolours: " << q.colour_count() << "\nedges: " << q.edges.size() << "\n";
  std::cout << "cartan:\n" << cartan_matrix(q) << "\n";
  if (spec.has_legs) {
    const auto& cls = spec.snova.quiver.colours[spec.snova.core_colour];
    std::cout << "supernova: core with " << cls.parts.size() << " part(s), "
              << spec.snova.core_nodes.size() << " core node(s)\n";
    bool star = cls.parts.size() == 2 &&
                (cls.parts[0].size() == 1 || cls.parts[1].size() == 1);
    if (cls.parts.size() == 1 && cls.parts[0].size() == 1) star = true;
    std::cout << "star-shaped: " << (star ? "yes" : "no") << "\n";
  }
}

// ---------------------------------------------------------------------------
// Verification suites (the CLI face of the property tests).

int verify_gauss(const RunConfig& cfg) {
  auto rng = std::mt19937_64(cfg.seed);
  double worst = 0.0;
  int done = 0;
  while (done < cfg.samples) {
    int s = 1 + int(rng() % 4);
    std::vector<int> dims;
    for (int i = 0; i < s; ++i) dims.push_back(1 + int(rng() % 4));
    Grading w(dims);
    int n = 1 + int(rng() % 4);
    Mat x = randn_complex(n, w.total(), rng), y = randn_complex(w.total(), n, rng);
    FactorChain chain;
    try {
      chain = build_factor_chain(x, y, w);
    } catch (const NotInBigCellError&) {
      continue;
    }
    auto f = gauss_gram(chain);
    double scale = mat_scale(f.one_yx);
    worst = std::max(worst, (f.u_minus * f.one_yx - f.h * f.u_plus).norm() / scale);
    worst = std::max(worst, (f.one_yx * f.v_plus - f.v_minus * f.h).norm() / scale);
    Mat left = Mat::Identity(n, n), right = Mat::Identity(n, n);
    for (int i = 0; i < s; ++i) {
      left = chain.left_factor[i] * left;
      right = right * chain.right_factor[i];
      worst = std::max(worst, (chain.cumulative[i + 1] - left).norm() / mat_scale(left));
      worst = std::max(worst, (chain.cumulative[i + 1] - right).norm() / mat_scale(right));
    }
    ++done;
  }
  return check_line("gauss", worst, 1e-10);
}

int verify_twoform(const RunConfig& cfg) {
  auto rng = std::mt19937_64(cfg.seed);
  double worst_analytic = 0.0, worst_fd = 0.0;
  int done = 0;
  while (done < cfg.samples) {
    Grading w({1 + int(rng() % 3), 1 + int(rng() % 3)});
    int n = 1 + int(rng() % 3);
    Mat x = randn_complex(n, w.total(), rng), y = randn_complex(w.total(), n, rng);
    try {
      worst_analytic = std::max(worst_analytic,
                                two_form_residual(x, y, w, 4, DiffMode::Analytic, rng));
      worst_fd = std::max(worst_fd,
                          two_form_residual(x, y, w, 2, DiffMode::FiniteDifference, rng));
    } catch (const NotInBigCellError&) {
      continue;
    }
    ++done;
  }
  int rc = check_line("twoform-analytic", worst_analytic, 1e-9);
  rc |= check_line("twoform-fd", worst_fd, 1e-5);
  return rc;
}

int verify_tame2stokes(const RunConfig& cfg) {
  auto rng = std::mt19937_64(cfg.seed);
  double worst = 0.0;
  int done = 0, relation_fail = 0;
  while (done < cfg.samples) {
    int n = 2 + int(rng() % 3);
    int m = 1 + int(rng() % 4);
    TameTuple tuple;
    for (int i = 0; i < m; ++i) {
      int rank = 1 + int(rng() % n);
      tuple.t.push_back(Mat::Identity(n, n) +
                        randn_complex(n, rank, rng) * randn_complex(rank, n, rng));
    }
    TameToStokes res;
    try {
      res = tame_to_stokes(tuple);
    } catch (const Error&) {
      continue;
    }
    Mat prod = Mat::Identity(n, n);
    for (const auto& t : tuple.t) prod = t * prod;
    Mat one_ba = Mat::Identity(n, n) + res.big_b * res.big_a;
    worst = std::max(worst, (char_poly(prod) - char_poly(one_ba)).norm() /
                                std::max(1.0, char_poly(prod).norm()));
    worst = std::max(worst, res.residual_parent / mat_scale(res.h));
    if (res.class_relation_checked && !res.class_relation_holds) ++relation_fail;
    ++done;
  }
  int rc = check_line("tame2stokes", worst, 1e-8);
  rc |= check_line("tame2stokes-classes", double(relation_fail), 0.5);
  return rc;
}

int verify_legs(const RunConfig& cfg) {
  auto rng = std::mt19937_64(cfg.seed);
  double worst = 0.0;
  int mismatches = 0;
  for (int t = 0; t < cfg.samples; ++t) {
    ClassSpec cls = random_class_spec(1 + int(rng() % 5), rng);
    auto marking = random_annihilating_marking(cls, rng, true);
    Leg leg = marking_to_leg(cls, marking);
    if (!class_from_leg(leg).same_as(cls)) ++mismatches;
    auto w = leg_to_class(leg);
    if (!w.observed.same_as(cls, 1e-4)) ++mismatches;
    worst = std::max(worst, w.det_residual / std::max(1.0, std::abs(cls.determinant().v)));
  }
  int rc = check_line("legs-roundtrip", double(mismatches), 0.5);
  rc |= check_line("legs-det", worst, 1e-10);
  return rc;
}

int verify_jordan(const RunConfig& cfg) {
  auto rng = std::mt19937_64(cfg.seed);
  int mismatches = 0, done = 0;
  while (done < cfg.samples) {
    int nw = 2 + int(rng() % 4);
    ClassSpec parent = random_class_spec(nw, rng);
    Mat t = conjugate_well_conditioned(parent.representative(), rng);
    Mat d = t - Mat::Identity(nw, nw);
    Eigen::JacobiSVD<Mat> svd(d, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& dsv = svd.singularValues();
    int rank = 0;
    for (int k = 0; k < dsv.size(); ++k)
      if (dsv(k) > 1e-9 * mat_scale(t)) ++rank;
    if (rank == 0) continue;
    Mat a = svd.matrixU().leftCols(rank);
    Mat b = Mat(svd.singularValues().head(rank).asDiagonal()) *
            svd.matrixV().leftCols(rank).adjoint();
    std::vector<Cx> markers;
    for (const auto& e : parent.eigen_data) markers.push_back(e.eigenvalue.v);
    try {
      ClassSpec p = numeric_jordan(Mat::Identity(nw, nw) + a * b, markers, {1e-5, 1e-6});
      ClassSpec c = numeric_jordan(Mat::Identity(rank, rank) + b * a, markers, {1e-5, 1e-6});
      if (!jordan_child(p).same_as(c, 1e-4)) ++mismatches;
      ++done;
    } catch (const IndeterminateError&) {
      continue;
    }
  }
  return check_line("jordan", double(mismatches), 0.5);
}

int verify_triangle(const RunConfig& cfg) {
  auto rng = std::mt19937_64(cfg.seed);
  auto tri = build_complete_kpartite({{"a"}, {"b"}, {"c"}});
  double worst = 0.0;
  for (int t = 0; t < cfg.samples; ++t) {
    GraphRep rep = GraphRep::random(tri, {1, 1, 1}, rng);
    auto ti = triangle_invariants(rep);
    worst = std::max({worst, ti.residual_abc_pr, ti.residual_rel1, ti.residual_rel2});
  }
  return check_line("triangle", worst, 1e-9);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiplicative quiver variety toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--tol", cfg.tol, "tolerance override");
  app.add_option("--mode", cfg.mode, "arithmetic mode: rational|float");
  app.add_option("--output", cfg.output, "write stdout lines to this file");

  // graph
  auto* graph = app.add_subcommand("graph", "inspect or build graphs");
  std::string graph_action, graph_file;
  graph->add_option("action", graph_action, "info|build|fission")->required();
  graph->add_option("file", graph_file, "input file")->required();

  // roots
  auto* roots = app.add_subcommand("roots", "root-system utilities");
  std::string roots_action, roots_file, roots_node;
  int roots_bound = 2;
  roots->add_option("action", roots_action, "classify|reflect|generic|dim")->required();
  roots->add_option("file", roots_file, "graph-spec file")->required();
  roots->add_option("--node", roots_node, "node for reflect");
  roots->add_option("--bound", roots_bound, "coordinate bound for classify");

  // verify
  auto* verify = app.add_subcommand("verify", "numerical verification suites");
  std::string verify_what;
  verify->add_option("what", verify_what, "gauss|twoform|tame2stokes|legs|jordan|triangle")
      ->required();
  verify->add_option("--samples", cfg.samples, "sample count");

  // ds
  auto* ds = app.add_subcommand("ds", "existence problems");
  std::string ds_action, ds_file;
  DSBudget budget;
  ds->add_option("action", ds_action, "criterion|search|crossval")->required();
  ds->add_option("file", ds_file, "instance file (graph-spec with legs)")->required();
  ds->add_option("--restarts", budget.restarts, "solver restarts");
  ds->add_option("--iterations", budget.iterations, "solver iterations per restart");

  // rep
  auto* repcmd = app.add_subcommand("rep", "inspect a representation file");
  std::string rep_action, rep_graph_file, rep_file;
  repcmd->add_option("action", rep_action, "info")->required();
  repcmd->add_option("graph", rep_graph_file, "graph-spec file")->required();
  repcmd->add_option("repfile", rep_file, "representation file")->required();

  // readings
  auto* readings = app.add_subcommand("readings", "dictionary of readings");
  std::string readings_file;
  readings->add_option("file", readings_file, "graph-spec file")->required();

  CLI11_PARSE(app, argc, argv);

  if (!cfg.output.empty() && !std::freopen(cfg.output.c_str(), "w", stdout)) {
    std::cerr << "cannot open output file '" << cfg.output << "'\n";
    return 2;
  }

  try {
    if (graph->parsed()) {
      if (graph_action == "fission") {
        IrregularType q = parse_irregular_type_file(graph_file);
        ColouredQuiver fg = fission_graph(q);
        GraphSpec spec;
        spec.bare = fg;
        std::cout << emit_graph_spec(spec);
        std::cout << "cartan:\n" << cartan_matrix(fg) << "\n";
        return 0;
      }
      GraphSpec spec = load_spec(graph_file, cfg);
      if (graph_action == "build") {
        std::cout << emit_graph_spec(spec);
        return 0;
      }
      if (graph_action == "info") {
        print_quiver_info(spec);
        return 0;
      }
      std::cerr << "unknown graph action '" << graph_action << "'\n";
      return 2;
    }

    if (roots->parsed()) {
      GraphSpec spec = load_spec(roots_file, cfg);
      const ColouredQuiver& q = spec.quiver();
      auto [params, dims] = resolve_qd(spec);
      if (roots_action == "classify") {
        auto cls = classify_roots(q, roots_bound);
        std::cout << "real-positive: " << cls.real_positive.size() << "\n";
        for (const auto& r : cls.real_positive) {
          std::cout << "  real";
          for (int x : r) std::cout << " " << x;
          std::cout << "\n";
        }
        std::cout << "imaginary-positive: " << cls.imaginary_positive.size() << "\n";
        for (const auto& r : cls.imaginary_positive) {
          std::cout << "  imaginary";
          for (int x : r) std::cout << " " << x;
          std::cout << "\n";
        }
        return 0;
      }
      if (roots_action == "reflect") {
        int node = q.node_index(roots_node);
        auto rq = reflect_parameters(node, params, q);
        auto rd = reflect_dimension(node, dims, q);
        std::cout << "s_d:";
        for (int x : rd) std::cout << " " << x;
        std::cout << "\nr_q:";
        for (const auto& s : rq) std::cout << " " << format_cx(s.v);
        std::cout << "\n";
        return 0;
      }
      if (roots_action == "generic") {
        auto rep = is_generic(params, dims, q, cfg.tol);
        std::cout << "generic: " << (rep.generic ? "yes" : "no") << "\n";
        if (rep.witness) {
          std::cout << "witness:";
          for (int x : *rep.witness) std::cout << " " << x;
          std::cout << "\n";
        }
        return 0;
      }
      if (roots_action == "dim") {
        std::cout << "expected-dimension " << expected_dimension(dims, q) << "\n";
        return 0;
      }
      std::cerr << "unknown roots action '" << roots_action << "'\n";
      return 2;
    }

    if (verify->parsed()) {
      if (verify_what == "gauss") return verify_gauss(cfg);
      if (verify_what == "twoform") return verify_twoform(cfg);
      if (verify_what == "tame2stokes") return verify_tame2stokes(cfg);
      if (verify_what == "legs") return verify_legs(cfg);
      if (verify_what == "jordan") return verify_jordan(cfg);
      if (verify_what == "triangle") return verify_triangle(cfg);
      std::cerr << "unknown verify target '" << verify_what << "'\n";
      return 2;
    }

    if (ds->parsed()) {
      GraphSpec spec = load_spec(ds_file, cfg);
      if (!spec.has_legs) {
        std::cerr << "ds instances need legs (they encode the classes)\n";
        return 2;
      }
      DSInstance inst{ds_file, spec.snova};
      if (ds_action == "criterion") {
        auto v = ds_criterion(inst);
        const char* kind = v.kind == DSVerdictKind::PredictedSolvable     ? "predicted-solvable"
                           : v.kind == DSVerdictKind::PredictedUnsolvable ? "predicted-unsolvable"
                                                                          : "undecided";
        std::cout << "DS " << inst.id << " verdict=" << kind << " certificate=\""
                  << v.certificate << "\"\n";
        return 0;
      }
      if (ds_action == "search") {
        auto res = ds_search(inst, budget, cfg.seed);
        std::cout << "DS " << inst.id << " search=" << (res.witness ? "witness" : "none-found")
                  << " residual=" << (res.witness ? res.witness->residual : res.best_residual)
                  << " seed=" << cfg.seed << "\n";
        return 0;
      }
      if (ds_action == "crossval") {
        auto rows = ds_cross_validate({inst}, budget, cfg.seed);
        int rc = 0;
        for (const auto& row : rows) {
          const char* kind =
              row.verdict.kind == DSVerdictKind::PredictedSolvable     ? "predicted-solvable"
              : row.verdict.kind == DSVerdictKind::PredictedUnsolvable ? "predicted-unsolvable"
                                                                       : "undecided";
          std::cout << "DS " << row.id << " verdict=" << kind
                    << " search=" << (row.witness_found ? "witness" : "none-found")
                    << " residual=" << row.residual << " seed=" << cfg.seed
                    << (row.inconclusive ? " inconclusive" : "") << "\n";
          if (!row.agreement && !row.inconclusive) rc = 1;
        }
        return rc;
      }
      std::cerr << "unknown ds action '" << ds_action << "'\n";
      return 2;
    }

    if (repcmd->parsed()) {
      if (rep_action != "info") {
        std::cerr << "unknown rep action '" << rep_action << "'\n";
        return 2;
      }
      GraphSpec spec = load_spec(rep_graph_file, cfg);
      auto [params, dims] = resolve_qd(spec);
      std::vector<int> dvec(dims.begin(), dims.end());
      GraphRep rep = parse_rep_file(rep_file, spec.quiver(), dvec);
      for (int c = 0; c < rep.quiver.colour_count(); ++c) {
        auto minors = invertibility_minors(rep, c);
        std::cout << "colour " << rep.quiver.colour_names[c]
                  << " invertible=" << (std::abs(minors.product) > cfg.tol ? "yes" : "no")
                  << " minor-product=" << format_cx(minors.product) << "\n";
      }
      try {
        MomentValue m = moment_map(rep);
        for (int i = 0; i < rep.quiver.node_count(); ++i) {
          if (rep.dims[i] == 0) continue;
          std::cout << "moment " << rep.quiver.node_names[i] << " det="
                    << format_cx(rep.dims[i] ? m.mu[i].determinant() : Cx(1)) << "\n";
        }
        std::cout << "in-fiber=" << (in_fiber(m, rep.dims, params, cfg.tol) ? "yes" : "no")
                  << "\n";
      } catch (const NotInvertibleError& e) {
        std::cout << "moment undefined: " << e.what() << "\n";
      }
      std::cout << "irreducible=" << (is_irreducible(rep) ? "yes" : "no") << "\n";
      return 0;
    }

    if (readings->parsed()) {
      GraphSpec spec = load_spec(readings_file, cfg);
      if (!spec.has_legs) {
        std::cerr << "readings need a supernova graph with legs\n";
        return 2;
      }
      for (const auto& rd : emit_readings(spec.snova)) {
        std::cout << "READING " << rd.name << " rank=" << rd.rank << " m=" << rd.m
                  << " h-blocks=";
        for (size_t i = 0; i < rd.h_blocks.size(); ++i)
          std::cout << (i ? "," : "") << rd.h_blocks[i];
        std::cout << " classes=" << rd.h_classes.size()
                  << " tame-classes=" << rd.m_classes.size() << " leading-eigs="
                  << rd.num_leading_eigs << " t-counts=";
        for (size_t i = 0; i < rd.t_counts.size(); ++i)
          std::cout << (i ? "," : "") << rd.t_counts[i];
        std::cout << (rd.possibly_empty ? " possibly-empty" : "") << "\n";
      }
      return 0;
    }
  } catch (const ConjectureCounterexampleError& e) {
    std::ofstream out("ds_counterexample.graph");
    out << e.artifact;
    std::cerr << "counterexample candidate written to ds_counterexample.graph: " << e.what()
              << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
