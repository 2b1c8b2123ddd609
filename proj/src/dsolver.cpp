#include "mqv/dsolver.hpp"

#include <algorithm>
#include <sstream>

#include <Eigen/Cholesky>

namespace mqv {

ColouredQuiver DSInstance::core_quiver() const {
  const auto& cls = snova.quiver.colours[snova.core_colour];
  std::vector<std::vector<std::string>> parts;
  for (const auto& part : cls.parts) {
    std::vector<std::string> names;
    for (int v : part) names.push_back(snova.quiver.node_names[v]);
    parts.push_back(names);
  }
  return build_complete_kpartite(parts);
}

std::vector<int> DSInstance::core_dims() const {
  ColouredQuiver core = core_quiver();
  std::vector<int> d(core.node_count());
  for (size_t l = 0; l < snova.core_nodes.size(); ++l) {
    int idx = core.node_index(snova.quiver.node_names[snova.core_nodes[l]]);
    d[idx] = snova.legs[l].dims[0];
  }
  return d;
}

std::vector<ClassSpec> DSInstance::core_classes() const {
  ColouredQuiver core = core_quiver();
  std::vector<ClassSpec> out(core.node_count());
  for (size_t l = 0; l < snova.core_nodes.size(); ++l) {
    int idx = core.node_index(snova.quiver.node_names[snova.core_nodes[l]]);
    out[idx] = class_from_leg(snova.legs[l]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criterion.

namespace {

enum class OneTest { Yes, No, Unclear };

OneTest power_is_one(const Params& q, const RootVector& alpha, double tol) {
  QScalar p = param_power(q, alpha);
  if (p.is_exact()) return p.exact->is_one() ? OneTest::Yes : OneTest::No;
  double dist = std::abs(p.v - Cx(1.0));
  if (dist < tol) return OneTest::Yes;
  if (dist < 10 * tol) return OneTest::Unclear;
  return OneTest::No;
}

struct DecompositionSearch {
  const std::vector<RootVector>& roots;
  const std::vector<long long>& deltas;
  long long delta_total;
  long long budget;
  bool truncated = false;
  std::vector<int> chosen;
  std::vector<std::vector<int>> violation;

  // Searches multisets of roots summing to the target whose dimension counts
  // reach Delta(d); the first decomposition with sum >= Delta(d) is the
  // violating certificate.  Every decomposition found here has at least two
  // parts since d itself is excluded from the usable roots.
  bool search(RootVector remaining, long long delta_sum, int min_index) {
    if (--budget < 0) {
      truncated = true;
      return false;
    }
    bool zero = std::all_of(remaining.begin(), remaining.end(), [](int x) { return x == 0; });
    if (zero) {
      if (delta_sum >= delta_total) {
        for (int k : chosen) violation.push_back(roots[k]);
        return true;
      }
      return false;
    }
    for (int k = min_index; k < int(roots.size()); ++k) {
      bool fits = true;
      for (size_t i = 0; i < remaining.size(); ++i)
        if (roots[k][i] > remaining[i]) fits = false;
      if (!fits) continue;
      RootVector next = remaining;
      for (size_t i = 0; i < next.size(); ++i) next[i] -= roots[k][i];
      chosen.push_back(k);
      if (search(next, delta_sum + deltas[k], k)) return true;
      chosen.pop_back();
    }
    return false;
  }
};

}  // namespace

DSVerdict ds_criterion(const DSInstance& inst, DSCriterionOptions opt) {
  const ColouredQuiver& graph = inst.snova.quiver;
  Params q = inst.snova.param_vector();
  RootVector d;
  for (int x : inst.snova.dim_vector()) d.push_back(x);

  DSVerdict v;
  if (!is_positive_root(d, graph)) {
    v.kind = DSVerdictKind::PredictedUnsolvable;
    v.certificate = "d is not a positive root";
    return v;
  }
  OneTest qd = power_is_one(q, d, opt.tol);
  if (qd == OneTest::Unclear) {
    v.kind = DSVerdictKind::Undecided;
    v.certificate = "q^d too close to 1 to decide in float mode";
    return v;
  }
  if (qd == OneTest::No) {
    v.kind = DSVerdictKind::PredictedUnsolvable;
    v.certificate = "q^d != 1";
    return v;
  }

  // positive roots alpha <= d with q^alpha = 1
  int bound = *std::max_element(d.begin(), d.end());
  RootClassification roots = classify_roots(graph, bound);
  std::vector<RootVector> usable;
  std::vector<long long> deltas;
  bool unclear = false;
  auto consider = [&](const RootVector& alpha) {
    for (size_t i = 0; i < alpha.size(); ++i)
      if (alpha[i] > d[i]) return;
    if (alpha == d) return;
    OneTest t = power_is_one(q, alpha, opt.tol);
    if (t == OneTest::Unclear) unclear = true;
    if (t != OneTest::Yes) return;
    usable.push_back(alpha);
    deltas.push_back(expected_dimension(alpha, graph));
  };
  for (const auto& r : roots.real_positive) consider(r);
  for (const auto& r : roots.imaginary_positive) consider(r);
  if (unclear) {
    v.kind = DSVerdictKind::Undecided;
    v.certificate = "some q^alpha too close to 1 to decide in float mode";
    return v;
  }

  DecompositionSearch search{usable, deltas, expected_dimension(d, graph),
                             opt.max_decompositions};
  bool violated = search.search(d, 0, 0);
  if (search.truncated) {
    v.kind = DSVerdictKind::Undecided;
    v.certificate = "decomposition enumeration truncated";
    return v;
  }
  if (violated) {
    v.kind = DSVerdictKind::PredictedUnsolvable;
    std::ostringstream os;
    os << "decomposition with no dimension loss:";
    for (const auto& term : search.violation) {
      os << " (";
      for (size_t i = 0; i < term.size(); ++i) os << (i ? "," : "") << term[i];
      os << ")";
    }
    v.certificate = os.str();
    v.violating_decomposition = search.violation;
    return v;
  }
  v.kind = DSVerdictKind::PredictedSolvable;
  v.certificate = "d positive root, q^d = 1, all decompositions lose dimension";
  return v;
}

// ---------------------------------------------------------------------------
// Search.

namespace {

struct Problem {
  ColouredQuiver core;
  std::vector<int> dims;
  std::vector<ClassSpec> classes;
  std::vector<Mat> jordan;       // canonical representative per node
  std::vector<bool> scalar;      // class is a scalar matrix
  std::vector<std::pair<int, int>> edge_keys;
  int edge_params = 0;  // complex entries over all edge matrices
  int conj_params = 0;  // complex entries of the conjugators
};

Problem make_problem(const DSInstance& inst) {
  Problem p;
  p.core = inst.core_quiver();
  p.dims = inst.core_dims();
  p.classes = inst.core_classes();
  for (int i = 0; i < p.core.node_count(); ++i) {
    p.jordan.push_back(p.classes[i].representative());
    bool sc = p.classes[i].eigen_data.size() <= 1;
    if (sc && !p.classes[i].eigen_data.empty())
      for (int part : p.classes[i].eigen_data[0].blocks)
        if (part != 1) sc = false;
    p.scalar.push_back(sc);
    if (!sc) p.conj_params += p.dims[i] * p.dims[i];
  }
  GraphRep probe(p.core, p.dims);
  for (const auto& [key, m] : probe.maps) {
    p.edge_keys.push_back(key);
    p.edge_params += int(m.size());
  }
  return p;
}

struct State {
  GraphRep rep;
  std::vector<Mat> k;  // conjugator per node (identity when scalar class)
};

State unpack(const Problem& p, const Eigen::VectorXd& vars) {
  State st;
  st.rep = GraphRep(p.core, p.dims);
  int at = 0;
  for (const auto& key : p.edge_keys) {
    Mat& m = st.rep.map(key.first, key.second);
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) {
        m(r, c) = Cx(vars(at), vars(at + 1));
        at += 2;
      }
  }
  for (int i = 0; i < p.core.node_count(); ++i) {
    if (p.scalar[i]) {
      st.k.push_back(Mat::Identity(p.dims[i], p.dims[i]));
      continue;
    }
    Mat k(p.dims[i], p.dims[i]);
    for (int r = 0; r < k.rows(); ++r)
      for (int c = 0; c < k.cols(); ++c) {
        k(r, c) = Cx(vars(at), vars(at + 1));
        at += 2;
      }
    st.k.push_back(k);
  }
  return st;
}

int residual_size(const Problem& p) {
  int rows = 0;
  for (int d : p.dims) rows += 2 * d * d;
  return rows;
}

bool residual(const Problem& p, const Eigen::VectorXd& vars, Eigen::VectorXd& out) {
  State st = unpack(p, vars);
  MomentValue m;
  try {
    m = moment_map(st.rep);
  } catch (const NotInvertibleError&) {
    return false;
  }
  out.resize(residual_size(p));
  int at = 0;
  for (int i = 0; i < p.core.node_count(); ++i) {
    Mat target;
    if (p.scalar[i]) {
      target = p.jordan[i];
    } else {
      if (!invertible(st.k[i], 1e-10)) return false;
      target = st.k[i] * p.jordan[i] * st.k[i].inverse();
    }
    Mat diff = m.mu[i] - target;
    for (int r = 0; r < diff.rows(); ++r)
      for (int c = 0; c < diff.cols(); ++c) {
        out(at++) = diff(r, c).real();
        out(at++) = diff(r, c).imag();
      }
  }
  return true;
}

}  // namespace

DSSearchResult ds_search(const DSInstance& inst, DSBudget budget, uint64_t seed) {
  Problem p = make_problem(inst);
  DSSearchResult result;
  std::mt19937_64 rng(seed);
  int nvars = 2 * (p.edge_params + p.conj_params);
  int nres = residual_size(p);
  if (nres == 0) {
    // no nodes with positive dimension: nothing to solve
    return result;
  }

  std::normal_distribution<double> g(0.0, M_SQRT1_2);
  for (int restart = 0; restart < budget.restarts; ++restart) {
    Eigen::VectorXd vars(nvars);
    for (int i = 0; i < nvars; ++i) vars(i) = g(rng);
    // bias conjugators towards the identity
    {
      int at = 2 * p.edge_params;
      for (int i = 0; i < p.core.node_count(); ++i) {
        if (p.scalar[i]) continue;
        for (int r = 0; r < p.dims[i]; ++r)
          for (int c = 0; c < p.dims[i]; ++c) {
            if (r == c) vars(at) += 1.0;
            at += 2;
          }
      }
    }

    Eigen::VectorXd r0;
    if (!residual(p, vars, r0)) continue;
    double cost = r0.squaredNorm();
    double lambda = 1e-3;
    const double fd = 1e-7;

    for (int it = 0; it < budget.iterations; ++it) {
      if (std::sqrt(cost) < 1e-12) break;
      Eigen::MatrixXd jac(nres, nvars);
      Eigen::VectorXd base;
      if (!residual(p, vars, base)) break;
      bool jac_ok = true;
      for (int k = 0; k < nvars && jac_ok; ++k) {
        Eigen::VectorXd vv = vars;
        vv(k) += fd;
        Eigen::VectorXd rr;
        if (!residual(p, vv, rr)) {
          jac_ok = false;
          break;
        }
        jac.col(k) = (rr - base) / fd;
      }
      if (!jac_ok) break;
      Eigen::MatrixXd jtj = jac.transpose() * jac;
      Eigen::VectorXd jtr = jac.transpose() * base;
      bool accepted = false;
      for (int tries = 0; tries < 8 && !accepted; ++tries) {
        Eigen::MatrixXd damped = jtj;
        for (int i = 0; i < nvars; ++i)
          damped(i, i) += lambda * std::max(jtj(i, i), 1e-8);
        Eigen::VectorXd step = damped.ldlt().solve(-jtr);
        Eigen::VectorXd cand = vars + step;
        Eigen::VectorXd rc;
        if (residual(p, cand, rc) && rc.squaredNorm() < cost) {
          vars = cand;
          cost = rc.squaredNorm();
          lambda *= 0.3;
          accepted = true;
        } else {
          lambda *= 10.0;
        }
      }
      if (!accepted) break;
    }

    Eigen::VectorXd rfin;
    if (!residual(p, vars, rfin)) continue;
    double res = rfin.norm();
    result.best_residual = std::min(result.best_residual, res);
    if (res < 1e-8) {
      State st = unpack(p, vars);
      DSWitness w;
      w.rep = st.rep;
      w.conjugators = st.k;
      w.residual = res;
      w.irreducible = is_irreducible(st.rep);
      w.classes_verified = true;
      try {
        MomentValue m = moment_map(st.rep);
        for (int i = 0; i < p.core.node_count(); ++i) {
          if (p.dims[i] == 0) continue;
          std::vector<Cx> markers;
          for (const auto& e : p.classes[i].eigen_data) markers.push_back(e.eigenvalue.v);
          ClassSpec found = numeric_jordan(m.mu[i], markers);
          if (!found.same_as(p.classes[i])) w.classes_verified = false;
        }
      } catch (const Error&) {
        w.classes_verified = false;
      }
      if (w.irreducible && w.classes_verified) {
        result.witness = w;
        return result;
      }
    }
  }
  return result;
}

std::vector<DSCrossRow> ds_cross_validate(const std::vector<DSInstance>& family, DSBudget budget,
                                          uint64_t seed) {
  std::vector<DSCrossRow> rows;
  uint64_t k = 0;
  for (const auto& inst : family) {
    DSCrossRow row;
    row.id = inst.id;
    row.verdict = ds_criterion(inst);
    DSSearchResult search = ds_search(inst, budget, seed + 7919 * (k++));
    row.witness_found = search.witness.has_value();
    row.residual = search.witness ? search.witness->residual : search.best_residual;
    if (row.verdict.kind == DSVerdictKind::PredictedUnsolvable && row.witness_found) {
      GraphSpec spec;
      spec.snova = inst.snova;
      spec.has_legs = true;
      throw ConjectureCounterexampleError(
          "witness found for a predicted-unsolvable instance '" + inst.id + "'",
          emit_graph_spec(spec));
    }
    if (row.verdict.kind == DSVerdictKind::PredictedSolvable && !row.witness_found) {
      row.inconclusive = true;  // search exhaustion is not a refutation
      row.agreement = false;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mqv
