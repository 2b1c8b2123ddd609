#include "mqv/representation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <Eigen/SVD>

namespace mqv {

GraphRep::GraphRep(ColouredQuiver q, std::vector<int> d) : quiver(std::move(q)), dims(std::move(d)) {
  if (int(dims.size()) != quiver.node_count()) throw Error("dimension vector size mismatch");
  for (const auto& e : quiver.edges) {
    maps[{e.a, e.b}] = Mat::Zero(dims[e.b], dims[e.a]);
    maps[{e.b, e.a}] = Mat::Zero(dims[e.a], dims[e.b]);
  }
}

const Mat& GraphRep::map(int tail, int head) const {
  auto it = maps.find({tail, head});
  if (it == maps.end()) throw Error("no edge between the given nodes");
  return it->second;
}

Mat& GraphRep::map(int tail, int head) {
  auto it = maps.find({tail, head});
  if (it == maps.end()) throw Error("no edge between the given nodes");
  return it->second;
}

void GraphRep::validate() const {
  quiver.validate();
  if (int(dims.size()) != quiver.node_count()) throw Error("dimension vector size mismatch");
  for (const auto& [key, m] : maps) {
    if (m.rows() != dims[key.second] || m.cols() != dims[key.first])
      throw Error("edge matrix shape mismatch");
  }
  for (const auto& e : quiver.edges) {
    if (!maps.count({e.a, e.b}) || !maps.count({e.b, e.a}))
      throw Error("missing edge matrix");
  }
}

int GraphRep::total_dim() const {
  int t = 0;
  for (int d : dims) t += d;
  return t;
}

int GraphRep::parameter_count() const {
  int t = 0;
  for (const auto& [key, m] : maps) t += int(m.size());
  return t;
}

GraphRep GraphRep::zero(const ColouredQuiver& q, const std::vector<int>& d) {
  return GraphRep(q, d);
}

GraphRep GraphRep::random(const ColouredQuiver& q, const std::vector<int>& d,
                          std::mt19937_64& rng) {
  GraphRep rep(q, d);
  for (auto& [key, m] : rep.maps) m = randn_complex(int(m.rows()), int(m.cols()), rng);
  return rep;
}

ColourLayout colour_layout(const GraphRep& rep, int colour) {
  if (colour < 0 || colour >= rep.quiver.colour_count()) throw Error("unknown colour");
  const auto& cls = rep.quiver.colours[colour];
  ColourLayout lay;
  lay.nodes = cls.node_order();
  int off = 0;
  for (int v : lay.nodes) {
    lay.offsets.push_back(off);
    lay.dims.push_back(rep.dims[v]);
    lay.part_of.push_back(cls.part_of(v));
    off += rep.dims[v];
  }
  lay.total = off;
  return lay;
}

std::pair<Mat, Mat> assemble_unitriangular(const GraphRep& rep, int colour) {
  ColourLayout lay = colour_layout(rep, colour);
  int n = lay.total;
  Mat vp = Mat::Identity(n, n), vm = Mat::Identity(n, n);
  for (size_t i = 0; i < lay.nodes.size(); ++i)
    for (size_t j = 0; j < lay.nodes.size(); ++j) {
      if (i == j || lay.part_of[i] == lay.part_of[j]) continue;
      // block (i,j): map from node j into node i
      const Mat& m = rep.map(lay.nodes[j], lay.nodes[i]);
      if (i < j)
        vp.block(lay.offsets[i], lay.offsets[j], lay.dims[i], lay.dims[j]) = m;
      else
        vm.block(lay.offsets[i], lay.offsets[j], lay.dims[i], lay.dims[j]) = m;
    }
  return {vp, vm};
}

MinorReport invertibility_minors(const GraphRep& rep, int colour) {
  ColourLayout lay = colour_layout(rep, colour);
  auto [vp, vm] = assemble_unitriangular(rep, colour);
  Mat m = vm * vp;
  MinorReport rep_out;
  rep_out.product = 1.0;
  for (size_t i = 0; i < lay.nodes.size(); ++i) {
    int off = lay.offsets[i];
    int size = lay.total - off;
    Cx minor = size > 0 ? m.block(off, off, size, size).determinant() : Cx(1.0);
    rep_out.minors.push_back(minor);
    rep_out.product *= minor;
  }
  return rep_out;
}

Mat BigCellFactors::g_matrix() const {
  Mat out = Mat::Zero(layout.total, layout.total);
  for (size_t i = 0; i < g.size(); ++i)
    out.block(layout.offsets[i], layout.offsets[i], layout.dims[i], layout.dims[i]) = g[i];
  return out;
}

BigCellFactors big_cell_factor(const GraphRep& rep, int colour, double rel_tol) {
  ColourLayout lay = colour_layout(rep, colour);
  auto [vp, vm] = assemble_unitriangular(rep, colour);
  BigCellFactors f;
  f.layout = lay;
  int failing = -1;
  try {
    BlockUDL udl = block_udl(vm * vp, Grading(lay.dims), rel_tol, &failing);
    f.w_plus = udl.upper;
    f.w_minus = udl.lower;
    f.g = udl.diag;
  } catch (const Error&) {
    if (failing >= 0) throw NotInvertibleError(colour, lay.nodes[failing]);
    throw;
  }
  return f;
}

MomentValue moment_map(const GraphRep& rep, double rel_tol) {
  MomentValue m;
  m.factors.reserve(rep.quiver.colour_count());
  for (int c = 0; c < rep.quiver.colour_count(); ++c)
    m.factors.push_back(big_cell_factor(rep, c, rel_tol));

  m.mu.resize(rep.quiver.node_count());
  Cx det_prod = 1.0;
  for (int i = 0; i < rep.quiver.node_count(); ++i) {
    int d = rep.dims[i];
    Mat acc = Mat::Identity(d, d);
    for (int c : rep.quiver.colour_order_at[i]) {
      const BigCellFactors& f = m.factors[c];
      for (size_t k = 0; k < f.layout.nodes.size(); ++k)
        if (f.layout.nodes[k] == i) acc = acc * f.g[k];
    }
    m.mu[i] = acc;
    if (d > 0) det_prod *= acc.determinant();
  }
  m.det_product_residual = std::abs(det_prod - Cx(1.0));
  return m;
}

bool in_fiber(const MomentValue& m, const std::vector<int>& dims, const Params& q, double tol) {
  if (q.size() != m.mu.size() || dims.size() != m.mu.size())
    throw Error("in_fiber: index set mismatch");
  double scale = 1.0;
  for (const auto& mu : m.mu) scale = std::max(scale, mu.norm());
  for (size_t i = 0; i < m.mu.size(); ++i) {
    if (dims[i] == 0) continue;
    Mat target = q[i].v * Mat::Identity(dims[i], dims[i]);
    if ((m.mu[i] - target).norm() >= tol * scale) return false;
  }
  return true;
}

bool in_fiber(const GraphRep& rep, const Params& q, double tol) {
  return in_fiber(moment_map(rep), rep.dims, q, tol);
}

// ---------------------------------------------------------------------------
// Irreducibility.

namespace {

struct Embedded {
  std::vector<int> offsets;
  int total = 0;
};

Embedded embedding(const std::vector<int>& dims) {
  Embedded e;
  int off = 0;
  for (int d : dims) {
    e.offsets.push_back(off);
    off += d;
  }
  e.total = off;
  return e;
}

std::vector<Mat> generator_matrices(const GraphRep& rep, const Embedded& e) {
  std::vector<Mat> gens;
  for (int i = 0; i < rep.quiver.node_count(); ++i) {
    if (rep.dims[i] == 0) continue;
    Mat p = Mat::Zero(e.total, e.total);
    p.block(e.offsets[i], e.offsets[i], rep.dims[i], rep.dims[i]) =
        Mat::Identity(rep.dims[i], rep.dims[i]);
    gens.push_back(p);
  }
  for (const auto& [key, m] : rep.maps) {
    if (m.rows() == 0 || m.cols() == 0) continue;
    Mat g = Mat::Zero(e.total, e.total);
    g.block(e.offsets[key.second], e.offsets[key.first], m.rows(), m.cols()) = m;
    gens.push_back(g);
  }
  return gens;
}

}  // namespace

std::vector<Mat> generated_subrep(const GraphRep& rep, int node, const Vec& v, double tol) {
  int n = rep.quiver.node_count();
  // per-node list of vectors, kept orthonormal
  std::vector<std::vector<Vec>> basis(n);
  auto add = [&](int at, Vec w) -> bool {
    for (const auto& b : basis[at]) w -= b.dot(w) * b;
    double nrm = w.norm();
    if (nrm < tol) return false;
    basis[at].push_back(w / nrm);
    return true;
  };
  std::vector<std::pair<int, Vec>> work;
  if (add(node, v)) work.push_back({node, v / v.norm()});
  while (!work.empty()) {
    auto [at, w] = work.back();
    work.pop_back();
    for (const auto& [key, m] : rep.maps) {
      if (key.first != at || m.rows() == 0) continue;
      Vec img = m * w;
      if (img.norm() < tol) continue;
      if (add(key.second, img)) work.push_back({key.second, img / img.norm()});
    }
  }
  std::vector<Mat> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = Mat::Zero(rep.dims[i], int(basis[i].size()));
    for (size_t k = 0; k < basis[i].size(); ++k) out[i].col(int(k)) = basis[i][k];
  }
  return out;
}

GraphRep restrict_rep(const GraphRep& rep, const std::vector<Mat>& bases) {
  std::vector<int> sub_dims;
  for (const auto& b : bases) sub_dims.push_back(int(b.cols()));
  GraphRep out(rep.quiver, sub_dims);
  for (const auto& [key, m] : rep.maps)
    out.maps[key] = bases[key.second].adjoint() * m * bases[key.first];
  return out;
}

bool is_irreducible(const GraphRep& rep, double tol) {
  Embedded e = embedding(rep.dims);
  int n = e.total;
  if (n == 0) return false;

  // fast reject: the closure of any coordinate vector is a subrepresentation
  for (int i = 0; i < rep.quiver.node_count(); ++i) {
    for (int k = 0; k < rep.dims[i]; ++k) {
      Vec v = Vec::Zero(rep.dims[i]);
      v(k) = 1.0;
      auto bases = generated_subrep(rep, i, v);
      int total = 0;
      for (const auto& b : bases) total += int(b.cols());
      if (total < n) return false;
    }
  }

  // Burnside: the representation is irreducible iff the unital algebra
  // generated by the node projectors and edge maps is all of End(V).
  std::vector<Mat> gens = generator_matrices(rep, e);
  std::vector<Mat> basis;  // orthonormal w.r.t. trace inner product
  auto add = [&](Mat m) -> bool {
    for (const auto& b : basis) m -= (b.adjoint() * m).trace() * b;
    double nrm = m.norm();
    if (nrm < tol) return false;
    basis.push_back(m / nrm);
    return true;
  };
  std::vector<Mat> frontier;
  Mat id = Mat::Identity(n, n);
  if (add(id)) frontier.push_back(id);
  for (const auto& g : gens) {
    Mat gn = g / std::max(1.0, g.norm());
    if (add(gn)) frontier.push_back(gn);
  }
  while (!frontier.empty() && int(basis.size()) < n * n) {
    std::vector<Mat> next;
    for (const auto& f : frontier)
      for (const auto& g : gens) {
        Mat prod = g * f;
        double nrm = prod.norm();
        if (nrm < tol) continue;
        prod /= nrm;
        if (add(prod)) next.push_back(prod);
      }
    frontier.swap(next);
  }
  return int(basis.size()) == n * n;
}

TriangleInvariants triangle_invariants(const GraphRep& rep) {
  if (rep.quiver.colour_count() != 1 || rep.quiver.node_count() != 3 ||
      rep.quiver.edges.size() != 3)
    throw Error("triangle_invariants: monochromatic triangle required");
  for (int d : rep.dims)
    if (d != 1) throw Error("triangle_invariants: dimension vector (1,1,1) required");
  ColourLayout lay = colour_layout(rep, 0);
  auto at = [&](int from_pos, int to_pos) -> Cx {
    return rep.map(lay.nodes[from_pos], lay.nodes[to_pos])(0, 0);
  };
  Cx v12 = at(1, 0), v21 = at(0, 1), v13 = at(2, 0), v31 = at(0, 2), v23 = at(2, 1),
     v32 = at(1, 2);
  TriangleInvariants t;
  t.a = v12 * v21;
  t.b = v13 * v31;
  t.c = v23 * v32;
  t.p = v12 * v23 * v31;
  t.r = v21 * v13 * v32;
  auto [vp, vm] = assemble_unitriangular(rep, 0);
  Mat n = vp * vm;
  t.h1 = n(0, 0);
  Cx lead2 = n.block(0, 0, 2, 2).determinant();
  t.h2 = lead2 / t.h1;
  t.residual_abc_pr = std::abs(t.a * t.b * t.c - t.p * t.r);
  t.residual_rel1 = std::abs(Cx(1.0) + t.a + t.b - t.h1);
  t.residual_rel2 = std::abs(Cx(1.0) + t.b + t.c + t.a * t.c - t.p - t.r - lead2);
  return t;
}

int quotient_dimension_probe(const GraphRep& rep, double fd_step, double rank_gap_tol) {
  // columns: complex edge-matrix entries; rows: stacked entries of all mu_i
  std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>> vars;  // (edge key, (r,c))
  for (const auto& [key, m] : rep.maps)
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) vars.push_back({key, {r, c}});
  int rows = 0;
  for (int i = 0; i < rep.quiver.node_count(); ++i) rows += rep.dims[i] * rep.dims[i];
  if (rows == 0 || vars.empty()) return 0;

  auto stack_mu = [&](const GraphRep& r2) {
    MomentValue m = moment_map(r2);
    Vec out(rows);
    int at = 0;
    for (const auto& mu : m.mu)
      for (int a = 0; a < mu.rows(); ++a)
        for (int b = 0; b < mu.cols(); ++b) out(at++) = mu(a, b);
    return out;
  };

  Mat jac(rows, int(vars.size()));
  for (size_t k = 0; k < vars.size(); ++k) {
    GraphRep up = rep, dn = rep;
    up.maps[vars[k].first](vars[k].second.first, vars[k].second.second) += fd_step;
    dn.maps[vars[k].first](vars[k].second.first, vars[k].second.second) -= fd_step;
    jac.col(int(k)) = (stack_mu(up) - stack_mu(dn)) / (2 * fd_step);
  }

  Eigen::JacobiSVD<Mat> svd(jac);
  const auto& sv = svd.singularValues();
  double top = std::max(sv(0), 1.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_gap_tol * top) ++rank;
  if (rank > 0 && rank < sv.size()) {
    double above = sv(rank - 1), below = sv(rank);
    if (below > 0 && above / below < 100.0)
      throw IndeterminateError("quotient_dimension_probe: rank gap unclear");
  }
  int dim_h = 0;
  for (int d : rep.dims) dim_h += d * d;
  int kernel = int(vars.size()) - rank;
  return kernel - (dim_h - 1);
}

GraphRep parse_rep(std::istream& in, const ColouredQuiver& quiver,
                   const std::vector<int>& dims) {
  GraphRep rep(quiver, dims);
  std::string line;
  int lineno = 0;
  std::set<std::pair<int, int>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream is(line);
    std::string head_tok, tail_name, head_name, colon;
    if (!(is >> head_tok)) continue;
    if (head_tok != "map") throw ParseError("expected 'map <tail> <head> : entries'", lineno);
    if (!(is >> tail_name >> head_name >> colon) || colon != ":")
      throw ParseError("expected 'map <tail> <head> : entries'", lineno);
    int tail, head;
    try {
      tail = quiver.node_index(tail_name);
      head = quiver.node_index(head_name);
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
    if (!rep.maps.count({tail, head}))
      throw ParseError("no edge between " + tail_name + " and " + head_name, lineno);
    if (!seen.insert({tail, head}).second)
      throw ParseError("duplicate map " + tail_name + " -> " + head_name, lineno);
    Mat& m = rep.map(tail, head);
    std::string tok;
    int count = 0;
    while (is >> tok) {
      if (count >= m.size()) throw ParseError("too many entries", lineno);
      try {
        m(count / m.cols(), count % m.cols()) = parse_scalar(tok).v;
      } catch (const Error& e) {
        throw ParseError(e.what(), lineno);
      }
      ++count;
    }
    if (count != m.size())
      throw ParseError("expected " + std::to_string(m.size()) + " entries, got " +
                           std::to_string(count),
                       lineno);
  }
  rep.validate();
  return rep;
}

GraphRep parse_rep_file(const std::string& path, const ColouredQuiver& quiver,
                        const std::vector<int>& dims) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_rep(in, quiver, dims);
}

std::string emit_rep(const GraphRep& rep) {
  std::ostringstream os;
  for (const auto& [key, m] : rep.maps) {
    if (m.size() == 0) continue;
    os << "map " << rep.quiver.node_names[key.first] << " " << rep.quiver.node_names[key.second]
       << " :";
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) os << " " << format_cx(m(r, c));
    os << "\n";
  }
  return os.str();
}

GraphRep transport_part_swap(const GraphRep& rep, int colour) {
  const auto& cls = rep.quiver.colours[colour];
  if (cls.parts.size() != 2) throw Error("transport_part_swap: colour must have two parts");
  ColourLayout lay = colour_layout(rep, colour);
  auto [vp, vm] = assemble_unitriangular(rep, colour);
  int n = lay.total;
  int d1 = 0;
  for (size_t i = 0; i < lay.nodes.size(); ++i)
    if (lay.part_of[i] == 0) d1 += lay.dims[i];
  int d2 = n - d1;

  // part-level factorisation v_- v_+ = W_+ kappa W_- (single Schur step)
  Mat m = vm * vp;
  Mat d = m.block(d1, d1, d2, d2);
  if (!invertible(d)) throw NotInvertibleError(colour, -1);
  Mat dinv = d.inverse();
  Mat wp_block = m.block(0, d1, d1, d2) * dinv;  // the only block of W_+

  // rotated point: v'_+ = v_-, v'_- = W_+^{-1}
  Mat new_vp = vm;
  Mat new_vm = Mat::Identity(n, n);
  new_vm.block(0, d1, d1, d2) = -wp_block;

  // new quiver: same graph, parts of this colour swapped
  ColouredQuiver q2 = rep.quiver;
  std::swap(q2.colours[colour].parts[0], q2.colours[colour].parts[1]);
  GraphRep out(q2, rep.dims);
  for (const auto& [key, mm] : rep.maps) out.maps[key] = mm;  // other colours untouched

  // read the new maps for this colour off the rotated pair; note the matrices
  // new_vp / new_vm live in the OLD layout, whose (i,j) block is the map from
  // old position j to old position i
  for (size_t i = 0; i < lay.nodes.size(); ++i)
    for (size_t j = 0; j < lay.nodes.size(); ++j) {
      if (i == j || lay.part_of[i] == lay.part_of[j]) continue;
      const Mat& src = (lay.part_of[i] == 1 && lay.part_of[j] == 0) ? new_vp : new_vm;
      // map from node j to node i: in the new ordering part 1 comes first, so
      // maps from part 0 into part 1 are "upper" (v'_+) and the reverse are
      // "lower" (v'_-); both are read from the same old-layout blocks
      out.maps[{lay.nodes[j], lay.nodes[i]}] =
          src.block(lay.offsets[i], lay.offsets[j], lay.dims[i], lay.dims[j]);
    }
  return out;
}

}  // namespace mqv
