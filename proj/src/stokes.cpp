#include "mqv/stokes.hpp"

#include <algorithm>

#include <Eigen/SVD>

namespace mqv {

namespace {

bool scalar_eq(const QScalar& a, const QScalar& b, double tol = 1e-9) {
  if (a.exact && b.exact)
    return a.exact->modulus == b.exact->modulus && a.exact->turn == b.exact->turn;
  return std::abs(a.v - b.v) < tol;
}

Mat block_diag_inverse(const Mat& h, const Grading& g) {
  Mat out = Mat::Zero(h.rows(), h.cols());
  for (int i = 0; i < g.blocks(); ++i) {
    int o = g.offset(i), d = g.dims[i];
    if (d > 0) out.block(o, o, d, d) = h.block(o, o, d, d).inverse();
  }
  return out;
}

}  // namespace

void FissionPoint::validate(double tol) const {
  int n = grading.total();
  if (c.rows() != n || c.cols() != n || h.rows() != n || h.cols() != n)
    throw Error("fission point: shape mismatch");
  if (int(s.size()) != 2 * r) throw Error("fission point: wrong number of Stokes factors");
  auto check_triangular = [&](const Mat& m, bool upper) {
    for (int i = 0; i < grading.blocks(); ++i)
      for (int j = 0; j < grading.blocks(); ++j) {
        Mat blk = m.block(grading.offset(i), grading.offset(j), grading.dims[i],
                          grading.dims[j]);
        if (i == j) {
          if ((blk - Mat::Identity(blk.rows(), blk.cols())).norm() > tol)
            throw Error("fission point: diagonal block not identity");
        } else if ((upper && i > j) || (!upper && i < j)) {
          if (blk.norm() > tol) throw Error("fission point: triangularity violated");
        }
      }
  };
  for (int k = 0; k < 2 * r; ++k) check_triangular(s[k], k % 2 == 0);
  for (int i = 0; i < grading.blocks(); ++i) {
    int o = grading.offset(i), d = grading.dims[i];
    if (d > 0 && !invertible(h.block(o, o, d, d)))
      throw Error("fission point: h block singular");
  }
  // h must be block diagonal
  for (int i = 0; i < grading.blocks(); ++i)
    for (int j = 0; j < grading.blocks(); ++j)
      if (i != j && h.block(grading.offset(i), grading.offset(j), grading.dims[i],
                            grading.dims[j]).norm() > tol)
        throw Error("fission point: h not block diagonal");
  if (!invertible(c)) throw Error("fission point: C singular");
}

FissionPoint random_fission_point(const Grading& g, int r, std::mt19937_64& rng) {
  int n = g.total();
  FissionPoint p;
  p.grading = g;
  p.r = r;
  p.c = randn_invertible(n, rng);
  p.h = Mat::Zero(n, n);
  for (int i = 0; i < g.blocks(); ++i) {
    int o = g.offset(i), d = g.dims[i];
    if (d > 0) p.h.block(o, o, d, d) = randn_invertible(d, rng);
  }
  for (int k = 0; k < 2 * r; ++k) {
    Mat m = Mat::Identity(n, n);
    for (int i = 0; i < g.blocks(); ++i)
      for (int j = 0; j < g.blocks(); ++j) {
        bool fill = (k % 2 == 0) ? i < j : i > j;
        if (fill)
          m.block(g.offset(i), g.offset(j), g.dims[i], g.dims[j]) =
              randn_complex(g.dims[i], g.dims[j], rng);
      }
    p.s.push_back(m);
  }
  return p;
}

std::pair<Mat, Mat> fission_moment(const FissionPoint& p) {
  p.validate(1e-9);
  int n = p.grading.total();
  Mat prod = Mat::Identity(n, n);
  for (int k = 0; k < 2 * p.r; ++k) prod = p.s[k] * prod;  // S_{2r} ... S_1
  Mat g_val = p.c.inverse() * p.h * prod * p.c;
  Mat h_val = block_diag_inverse(p.h, p.grading);
  return {g_val, h_val};
}

ReducedPoint reduce_rank2(const FissionPoint& p, double tol) {
  if (p.r != 2) throw Error("reduce_rank2: rank-2 fission point required");
  auto [g_val, h_val] = fission_moment(p);
  double res = (g_val - Mat::Identity(g_val.rows(), g_val.cols())).norm();
  if (res > tol * mat_scale(g_val)) throw NotReducedError(res);
  ReducedPoint out;
  out.v_plus = p.s[0];
  out.v_minus = p.s[1];
  if (p.grading.blocks() == 2) {
    out.two_block = true;
    int d1 = p.grading.dims[0], d2 = p.grading.dims[1];
    out.a = p.s[0].block(0, d1, d1, d2);
    out.b = p.s[1].block(d1, 0, d2, d1);
    out.moment_first = (Mat::Identity(d1, d1) + out.a * out.b).inverse();
    out.moment_second = Mat::Identity(d2, d2) + out.b * out.a;
  }
  return out;
}

FissionPoint reorder_two_part_swap(const FissionPoint& p) {
  if (p.grading.blocks() != 2) throw Error("reorder_two_part_swap: two-part grading required");
  int d1 = p.grading.dims[0], d2 = p.grading.dims[1];
  int n = d1 + d2;
  std::vector<int> old_of_new(n);
  for (int k = 0; k < d2; ++k) old_of_new[k] = d1 + k;
  for (int k = 0; k < d1; ++k) old_of_new[d2 + k] = k;
  auto permute = [&](const Mat& m) {
    Mat out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) = m(old_of_new[i], old_of_new[j]);
    return out;
  };

  // Rotate the first Stokes factor around the circle: the factors shift by
  // one slot, the rotated factor returns h-conjugated, and C absorbs it.
  // Everything is then rewritten in the swapped coordinate order.
  FissionPoint q;
  q.grading = Grading({d2, d1});
  q.r = p.r;
  Mat hinv = block_diag_inverse(p.h, p.grading);
  q.h = permute(p.h);
  q.c = permute(p.s[0] * p.c);
  for (int k = 1; k < 2 * p.r; ++k) q.s.push_back(permute(p.s[k]));
  q.s.push_back(permute(hinv * p.s[0] * p.h));
  q.validate(1e-9);
  return q;
}

// ---------------------------------------------------------------------------

std::vector<BPair> splay(const Mat& x, const Mat& y, const Grading& w, ChainOptions opt) {
  FactorChain chain = build_factor_chain(x, y, w, opt);
  std::vector<BPair> out;
  for (int i = 0; i < w.blocks(); ++i) out.push_back({chain.y_hat[i], chain.x_block(i)});
  return out;
}

FusedPoint fuse(const std::vector<BPair>& pairs, const Grading& w, int dim_v) {
  int s = w.blocks();
  if (int(pairs.size()) != s) throw Error("fuse: one pair per block required");
  int m = w.total();
  FusedPoint f;
  f.x = Mat(dim_v, m);
  f.y = Mat(m, dim_v);
  Mat prefix = Mat::Identity(dim_v, dim_v);
  for (int i = 0; i < s; ++i) {
    const Mat& b = pairs[i].b;
    const Mat& a = pairs[i].a;
    if (b.rows() != w.dims[i] || b.cols() != dim_v || a.rows() != dim_v || a.cols() != w.dims[i])
      throw Error("fuse: pair shapes do not match the grading");
    f.x.middleCols(w.offset(i), w.dims[i]) = a;
    f.y.middleRows(w.offset(i), w.dims[i]) = b * prefix;
    prefix = (Mat::Identity(dim_v, dim_v) + a * b) * prefix;
  }
  f.h = Mat::Zero(m, m);
  Mat hu_plus = Mat::Identity(m, m);
  f.u_minus = Mat::Identity(m, m);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      Mat gram = pairs[i].b * pairs[j].a;
      if (i > j) f.u_minus.block(w.offset(i), w.offset(j), w.dims[i], w.dims[j]) = -gram;
      if (i <= j) {
        hu_plus.block(w.offset(i), w.offset(j), w.dims[i], w.dims[j]) += gram;
      }
      if (i == j) f.h.block(w.offset(i), w.offset(i), w.dims[i], w.dims[i]) =
          Mat::Identity(w.dims[i], w.dims[i]) + gram;
    }
  Mat hinv = block_diag_inverse(f.h, w);
  f.u_plus = hinv * hu_plus;
  f.s1 = f.u_plus;
  f.s2 = hinv * f.u_minus.inverse() * f.h;
  return f;
}

SwapResult swap_factors(const std::vector<BPair>& pairs) {
  if (pairs.size() != 2) throw Error("swap_factors: exactly two factors required");
  const Mat& b1 = pairs[0].b;
  const Mat& a1 = pairs[0].a;
  const Mat& b2 = pairs[1].b;
  const Mat& a2 = pairs[1].a;
  int n = int(a1.rows());
  Mat t1 = Mat::Identity(n, n) + a1 * b1;
  if (!invertible(t1)) throw NotInBigCellError(1);
  SwapResult out;
  out.braid = t1;
  out.pairs = {{b2 * t1, t1.inverse() * a2}, {b1, a1}};
  return out;
}

// ---------------------------------------------------------------------------

TameToStokes tame_to_stokes(const TameTuple& tuple, double rank_tol,
                            const std::vector<Cx>& jordan_markers) {
  int m = int(tuple.t.size());
  if (m == 0) throw Error("tame_to_stokes: empty tuple");
  int n = int(tuple.t[0].rows());
  for (const auto& t : tuple.t) {
    if (t.rows() != n || t.cols() != n) throw Error("tame_to_stokes: shape mismatch");
    if (!invertible(t)) throw Error("tame_to_stokes: factor not invertible");
  }

  TameToStokes out;
  for (int i = 0; i < m; ++i) {
    Mat d = tuple.t[i] - Mat::Identity(n, n);
    Eigen::JacobiSVD<Mat> svd(d, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double top = std::max(sv.size() ? sv(0) : 0.0, 1.0);
    int rank = 0;
    for (int k = 0; k < sv.size(); ++k)
      if (sv(k) > rank_tol * top) ++rank;
    if (rank > 0 && rank < sv.size() && sv(rank) > 0 && sv(rank - 1) / sv(rank) < 10.0)
      throw AmbiguousRankError("tame_to_stokes: rank of factor " + std::to_string(i + 1) +
                               " is ambiguous");
    out.d.push_back(rank);
    Mat sqrt_sigma = Mat::Zero(rank, rank);
    for (int k = 0; k < rank; ++k) sqrt_sigma(k, k) = std::sqrt(sv(k));
    out.a.push_back(sqrt_sigma * svd.matrixV().leftCols(rank).adjoint());  // rank x n
    out.b.push_back(svd.matrixU().leftCols(rank) * sqrt_sigma);            // n x rank
  }
  std::vector<int> dims = out.d;
  out.w = Grading(dims);
  int wtot = out.w.total();
  if (wtot == 0)
    throw Error("tame_to_stokes: degenerate tuple, every factor is the identity (d = 0)");

  out.big_a = Mat(wtot, n);
  out.big_b = Mat(n, wtot);
  Mat prefix = Mat::Identity(n, n);
  for (int i = 0; i < m; ++i) {
    out.big_a.middleRows(out.w.offset(i), out.d[i]) = out.a[i] * prefix;
    out.big_b.middleCols(out.w.offset(i), out.d[i]) = out.b[i];
    prefix = tuple.t[i] * prefix;
  }
  // prefix now holds T_m ... T_1

  out.h = Mat::Zero(wtot, wtot);
  Mat hu_plus = Mat::Identity(wtot, wtot);
  out.u_minus = Mat::Identity(wtot, wtot);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (out.d[i] == 0 || out.d[j] == 0) continue;
      Mat gram = out.a[i] * out.b[j];
      if (i > j) out.u_minus.block(out.w.offset(i), out.w.offset(j), out.d[i], out.d[j]) = -gram;
      if (i <= j) hu_plus.block(out.w.offset(i), out.w.offset(j), out.d[i], out.d[j]) += gram;
      if (i == j)
        out.h.block(out.w.offset(i), out.w.offset(i), out.d[i], out.d[i]) =
            Mat::Identity(out.d[i], out.d[i]) + gram;
    }
  Mat hinv = block_diag_inverse(out.h, out.w);
  out.u_plus = hinv * hu_plus;
  out.s1 = out.u_plus;
  out.s2 = hinv * out.u_minus.inverse() * out.h;

  Mat one_ab = Mat::Identity(wtot, wtot) + out.big_a * out.big_b;
  Mat one_ba = Mat::Identity(n, n) + out.big_b * out.big_a;
  out.residual_parent = (one_ab - out.u_minus.inverse() * out.h * out.u_plus).norm();
  out.residual_child = (prefix - one_ba).norm();

  // class report: valid when A is injective and B surjective
  bool a_inj = numerical_rank(out.big_a, 1e-8) == std::min(n, wtot) && n <= wtot;
  bool b_surj = numerical_rank(out.big_b, 1e-8) == std::min(n, wtot) && n <= wtot;
  if (a_inj && b_surj) {
    try {
      out.parent_class = numeric_jordan(one_ab, jordan_markers);
      std::vector<Cx> child_markers;
      for (const auto& e : out.parent_class.eigen_data) child_markers.push_back(e.eigenvalue.v);
      out.child_class = numeric_jordan(one_ba, child_markers);
      out.class_relation_checked = true;
      out.class_relation_holds = jordan_child(out.parent_class).same_as(out.child_class);
    } catch (const IndeterminateError&) {
      out.class_relation_checked = false;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Markings and legs.

std::vector<int> leg_dims_from_class(const ClassSpec& cls, const std::vector<QScalar>& marking) {
  std::vector<int> dims;
  for (size_t i = 0; i < marking.size(); ++i) {
    // k_s(i): occurrences of each eigenvalue among the first i-1 roots
    int d = 0;
    for (const auto& e : cls.eigen_data) {
      int k = 0;
      for (size_t j = 0; j + 1 <= i; ++j)
        if (scalar_eq(marking[j], e.eigenvalue)) ++k;
      for (int part : e.blocks) d += std::max(part - k, 0);
    }
    dims.push_back(d);
  }
  return dims;
}

Leg marking_to_leg(const ClassSpec& cls, const std::vector<QScalar>& marking) {
  cls.validate();
  if (marking.empty()) throw InvalidMarkingError("empty marking");
  // annihilation: each eigenvalue must occur at least as often as its largest
  // Jordan block
  for (const auto& e : cls.eigen_data) {
    int count = 0;
    for (const auto& xi : marking)
      if (scalar_eq(xi, e.eigenvalue)) ++count;
    int need = e.blocks.empty() ? 0 : e.blocks[0];
    if (count < need)
      throw InvalidMarkingError("marking does not annihilate the class at eigenvalue " +
                                format_cx(e.eigenvalue.v));
  }
  Leg leg;
  leg.dims = leg_dims_from_class(cls, marking);
  QScalar prev = QScalar::one();
  for (const auto& xi : marking) {
    leg.params.push_back(xi * prev.inverse());
    prev = xi;
  }
  leg.validate();
  return leg;
}

ClassSpec class_from_leg(const Leg& leg) {
  leg.validate();
  auto marking = leg.marking();
  int w = int(leg.dims.size());
  // distinct roots in order of first appearance, with their column lists
  std::vector<QScalar> roots;
  std::vector<std::vector<int>> columns;
  for (int i = 0; i < w; ++i) {
    int next = (i + 1 < w) ? leg.dims[i + 1] : 0;
    int drop = leg.dims[i] - next;
    if (drop < 0) throw EmptyClassError("leg dimensions must be weakly decreasing");
    int at = -1;
    for (size_t r = 0; r < roots.size(); ++r)
      if (scalar_eq(roots[r], marking[i])) at = int(r);
    if (at < 0) {
      roots.push_back(marking[i]);
      columns.push_back({});
      at = int(roots.size()) - 1;
    }
    if (!columns[at].empty() && drop > columns[at].back())
      throw EmptyClassError("leg data is not realisable: column heights increase");
    columns[at].push_back(drop);
  }
  ClassSpec cls;
  for (size_t r = 0; r < roots.size(); ++r) {
    // partition = conjugate of the column heights
    Partition p;
    int maxh = 0;
    for (int c : columns[r]) maxh = std::max(maxh, c);
    for (int row = 0; row < maxh; ++row) {
      int len = 0;
      for (int c : columns[r])
        if (c > row) ++len;
      p.push_back(len);
    }
    std::sort(p.rbegin(), p.rend());
    if (!p.empty()) cls.eigen_data.push_back({roots[r], p});
  }
  cls.validate();
  if (cls.dimension() != leg.dims[0])
    throw EmptyClassError("leg data inconsistent with ambient dimension");
  return cls;
}

std::vector<QScalar> random_annihilating_marking(const ClassSpec& cls, std::mt19937_64& rng,
                                                 bool pad) {
  std::vector<QScalar> marking;
  for (const auto& e : cls.eigen_data) {
    int count = e.blocks.empty() ? 0 : e.blocks[0];
    for (int k = 0; k < count; ++k) marking.push_back(e.eigenvalue);
  }
  if (pad && !cls.eigen_data.empty() && rng() % 2 == 0)
    marking.push_back(cls.eigen_data[rng() % cls.eigen_data.size()].eigenvalue);
  std::shuffle(marking.begin(), marking.end(), rng);
  return marking;
}

LegWitness leg_to_class(const Leg& leg) {
  leg.validate();
  int w = int(leg.dims.size());
  LegWitness out;
  out.cls = class_from_leg(leg);  // also validates feasibility

  Mat k_next = leg.params[w - 1].v * Mat::Identity(leg.dims[w - 1], leg.dims[w - 1]);
  out.a.resize(std::max(0, w - 1));
  out.b.resize(std::max(0, w - 1));
  for (int i = w - 2; i >= 0; --i) {
    int dcur = leg.dims[i], dnext = leg.dims[i + 1];
    if (dcur < dnext) throw EmptyClassError("leg dimensions must be weakly decreasing");
    Mat d = k_next - Mat::Identity(dnext, dnext);
    // b a = d with b surjective, a injective
    int kernel_dim = 0;
    Mat kernel_basis;
    if (dnext > 0) {
      Eigen::JacobiSVD<Mat> svd(d, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      double top = std::max(sv.size() ? sv(0) : 0.0, 1.0);
      int rank = 0;
      for (int k = 0; k < sv.size(); ++k)
        if (sv(k) > 1e-10 * top) ++rank;
      kernel_dim = dnext - rank;
      kernel_basis = svd.matrixV().rightCols(kernel_dim);
    }
    if (dcur - dnext < kernel_dim)
      throw EmptyClassError("leg not realisable with surjective/injective maps");
    Mat a = Mat::Zero(dcur, dnext);
    a.topRows(dnext) = d;
    a.middleRows(dnext, kernel_dim) = kernel_basis.adjoint();
    Mat b = Mat::Zero(dnext, dcur);
    b.leftCols(dnext) = Mat::Identity(dnext, dnext);
    out.a[i] = a;
    out.b[i] = b;
    k_next = leg.params[i].v * (Mat::Identity(dcur, dcur) + a * b);
  }
  out.m = k_next;

  std::vector<Cx> markers;
  for (const auto& e : out.cls.eigen_data) markers.push_back(e.eigenvalue.v);
  out.observed = numeric_jordan(out.m, markers);
  QScalar det_expected = QScalar::one();
  for (int i = 0; i < w; ++i) det_expected = det_expected * leg.params[i].pow(leg.dims[i]);
  Cx det_m = leg.dims[0] > 0 ? out.m.determinant() : Cx(1.0);
  out.det_residual = std::abs(det_m - det_expected.v);
  return out;
}

std::vector<std::pair<Mat, Mat>> leg_maps_from_matrix(const Mat& m,
                                                      const std::vector<QScalar>& marking,
                                                      double rank_tol) {
  int n = int(m.rows());
  if (m.cols() != n) throw Error("leg_maps_from_matrix: square matrix required");
  std::vector<std::pair<Mat, Mat>> out;
  // restriction of M to the current range, in orthonormal coordinates
  Mat restricted = m;
  for (size_t k = 0; k + 1 < marking.size(); ++k) {
    int dk = int(restricted.rows());
    Mat shifted = restricted / marking[k].v - Mat::Identity(dk, dk);
    Eigen::JacobiSVD<Mat> svd(shifted, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > rank_tol * std::max(1.0, mat_scale(restricted))) ++rank;
    Mat range = svd.matrixU().leftCols(rank);  // basis of (M/xi - 1) V_k
    Mat b = range.adjoint() * shifted;         // V_k -> V_{k+1}
    Mat a = range;                             // inclusion V_{k+1} -> V_k
    out.push_back({a, b});
    // the range is M-invariant; restrict for the next step
    restricted = range.adjoint() * restricted * range;
  }
  // the last condition 1 + b a = q_w needs the final restriction to be the
  // scalar xi_w
  int dw = int(restricted.rows());
  if (dw > 0 &&
      (restricted - marking.back().v * Mat::Identity(dw, dw)).norm() >
          1e-6 * mat_scale(restricted))
    throw InvalidMarkingError("marking does not annihilate the matrix");
  return out;
}

// ---------------------------------------------------------------------------

MarkingReflection reflect_marking(const SupernovaQuiver& snova, int node) {
  snova.validate();
  auto [l, depth] = snova.locate(node);
  Params q = snova.param_vector();
  RootVector d_vec;
  for (int d : snova.dim_vector()) d_vec.push_back(d);
  if (q[node].is_one()) throw Error("reflection requires q != 1 at the node");

  MarkingReflection out;
  out.snova = snova;
  out.shift = QScalar::one();

  const Leg& leg = snova.legs[l];
  auto marking = leg.marking();

  if (depth >= 1) {
    // swap the two roots defining q at this depth
    std::vector<QScalar> m2 = marking;
    std::swap(m2[depth - 1], m2[depth]);
    ClassSpec cls = class_from_leg(leg);
    Leg leg2 = marking_to_leg(cls, m2);
    out.snova.legs[l] = leg2;
  } else {
    // core node: extend the leg by (dim U, parameter 1), swap the first two
    // roots of the extended marking, shift to keep it special
    int core_part = -1;
    const auto& cls0 = snova.quiver.colours[snova.core_colour];
    core_part = cls0.part_of(node);
    int dim_u = 0;
    for (size_t l2 = 0; l2 < snova.core_nodes.size(); ++l2)
      if (cls0.part_of(snova.core_nodes[l2]) != core_part)
        dim_u += snova.legs[l2].dims[0];

    Leg extended;
    extended.dims.push_back(dim_u);
    extended.params.push_back(QScalar::one());
    extended.dims.insert(extended.dims.end(), leg.dims.begin(), leg.dims.end());
    extended.params.insert(extended.params.end(), leg.params.begin(), leg.params.end());
    ClassSpec ext_cls = class_from_leg(extended);  // throws when infeasible

    QScalar gamma = leg.params[0];  // first marking root
    out.shift = gamma;
    auto ext_marking = extended.marking();  // (1, xi_1, xi_2, ...)
    std::swap(ext_marking[0], ext_marking[1]);
    QScalar ginv = gamma.inverse();
    for (auto& xi : ext_marking) xi = xi * ginv;
    ClassSpec scaled = ext_cls.scaled(ginv);
    Leg new_ext = marking_to_leg(scaled, ext_marking);

    Leg new_leg;
    new_leg.dims.assign(new_ext.dims.begin() + 1, new_ext.dims.end());
    // parameters of the dropped leg are the ratios of the tail marking
    auto tail_marking = new_ext.marking();
    QScalar prev = QScalar::one();
    for (size_t i = 1; i < tail_marking.size(); ++i) {
      new_leg.params.push_back(tail_marking[i] * prev.inverse());
      prev = tail_marking[i];
    }
    out.snova.legs[l] = new_leg;

    // legs on core nodes in other parts: classes scale by gamma, so only the
    // first parameter changes
    for (size_t l2 = 0; l2 < snova.core_nodes.size(); ++l2) {
      if (int(l2) == l || cls0.part_of(snova.core_nodes[l2]) == core_part) continue;
      out.snova.legs[l2].params[0] = out.snova.legs[l2].params[0] * gamma;
    }
  }

  out.new_params = out.snova.param_vector();
  RootVector new_dims_int;
  for (int d : out.snova.dim_vector()) new_dims_int.push_back(d);
  out.new_dims = new_dims_int;

  Params expect_q = reflect_parameters(node, q, snova.quiver);
  RootVector expect_d = reflect_dimension(node, d_vec, snova.quiver);
  out.mismatch = 0.0;
  for (size_t i = 0; i < expect_q.size(); ++i)
    out.mismatch = std::max(out.mismatch, std::abs(expect_q[i].v - out.new_params[i].v));
  if (expect_d != out.new_dims) out.mismatch = 1e30;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Reading> emit_readings(const SupernovaQuiver& snova) {
  snova.validate();
  const auto& cls0 = snova.quiver.colours[snova.core_colour];
  int k = int(cls0.parts.size());
  int ncore = int(snova.core_nodes.size());

  std::vector<ClassSpec> node_class(ncore);
  for (int l = 0; l < ncore; ++l) node_class[l] = class_from_leg(snova.legs[l]);

  auto core_dim = [&](int l) { return snova.legs[l].dims[0]; };
  auto dim_u = [&](int l) {
    int part = cls0.part_of(snova.core_nodes[l]);
    int t = 0;
    for (int l2 = 0; l2 < ncore; ++l2)
      if (cls0.part_of(snova.core_nodes[l2]) != part) t += core_dim(l2);
    return t;
  };
  bool global_empty_flag = false;
  for (int l = 0; l < ncore; ++l)
    if (core_dim(l) > dim_u(l)) global_empty_flag = true;

  std::vector<Reading> out;
  {
    Reading r;
    r.name = "generic";
    r.m = 0;
    for (int l = 0; l < ncore; ++l) {
      r.rank += core_dim(l);
      r.h_blocks.push_back(core_dim(l));
      r.h_classes.push_back(node_class[l]);
    }
    r.num_leading_eigs = k;
    for (int p = 0; p < k; ++p) r.t_counts.push_back(int(cls0.parts[p].size()));
    r.possibly_empty = global_empty_flag;
    out.push_back(r);
  }
  for (int p = 0; p < k; ++p) {
    Reading r;
    r.name = "part:" + std::to_string(p + 1);
    r.num_leading_eigs = k - 1;
    for (int p2 = 0; p2 < k; ++p2)
      if (p2 != p) r.t_counts.push_back(int(cls0.parts[p2].size()));
    for (int l = 0; l < ncore; ++l) {
      int part = cls0.part_of(snova.core_nodes[l]);
      if (part == p) {
        r.m += 1;
        // extended leg with the ambient space and parameter 1 gives the
        // inverse of the class placed at the tame point
        Leg ext;
        ext.dims.push_back(dim_u(l));
        ext.params.push_back(QScalar::one());
        ext.dims.insert(ext.dims.end(), snova.legs[l].dims.begin(), snova.legs[l].dims.end());
        ext.params.insert(ext.params.end(), snova.legs[l].params.begin(),
                          snova.legs[l].params.end());
        try {
          r.m_classes.push_back(class_from_leg(ext).inverse());
        } catch (const EmptyClassError&) {
          r.possibly_empty = true;
          r.m_classes.push_back(ClassSpec{});
        }
      } else {
        r.rank += core_dim(l);
        r.h_blocks.push_back(core_dim(l));
        r.h_classes.push_back(node_class[l]);
      }
    }
    r.possibly_empty = r.possibly_empty || global_empty_flag;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-form identity.

namespace {

struct TwoBlockChain {
  Mat x1, x2, y1, y2;
  Mat phi1, phi1_inv;
  Mat yh1, yh2;
  Mat h1, h2, t1, t2;
  Mat u_minus, u_plus, h, h_inv;
  Mat w_inv;  // (1 + yx)^{-1}
  Mat v_inv;  // (1 + xy)^{-1}
};

TwoBlockChain make_chain(const Mat& x, const Mat& y, const Grading& w) {
  if (w.blocks() != 2) throw Error("two_form_residual: two blocks required");
  TwoBlockChain c;
  int n = int(x.rows());
  int d1 = w.dims[0], d2 = w.dims[1];
  c.x1 = x.middleCols(0, d1);
  c.x2 = x.middleCols(d1, d2);
  c.y1 = y.middleRows(0, d1);
  c.y2 = y.middleRows(d1, d2);
  c.phi1 = Mat::Identity(n, n) + c.x1 * c.y1;
  if (!invertible(c.phi1)) throw NotInBigCellError(1);
  c.phi1_inv = c.phi1.inverse();
  c.yh1 = c.y1;
  c.yh2 = c.y2 * c.phi1_inv;
  c.h1 = Mat::Identity(d1, d1) + c.yh1 * c.x1;
  c.h2 = Mat::Identity(d2, d2) + c.yh2 * c.x2;
  c.t1 = Mat::Identity(n, n) + c.x1 * c.yh1;
  c.t2 = Mat::Identity(n, n) + c.x2 * c.yh2;
  int m = d1 + d2;
  c.u_minus = Mat::Identity(m, m);
  c.u_minus.block(d1, 0, d2, d1) = -c.yh2 * c.x1;
  Mat hu_plus = Mat::Identity(m, m);
  hu_plus.block(0, 0, d1, d1) = c.h1;
  hu_plus.block(0, d1, d1, d2) = c.yh1 * c.x2;
  hu_plus.block(d1, d1, d2, d2) = c.h2;
  c.h = Mat::Zero(m, m);
  c.h.block(0, 0, d1, d1) = c.h1;
  c.h.block(d1, d1, d2, d2) = c.h2;
  c.h_inv = Mat::Zero(m, m);
  c.h_inv.block(0, 0, d1, d1) = c.h1.inverse();
  c.h_inv.block(d1, d1, d2, d2) = c.h2.inverse();
  c.u_plus = c.h_inv * hu_plus;
  Mat one_yx = Mat::Identity(m, m) + y * x;
  Mat one_xy = Mat::Identity(n, n) + x * y;
  if (!invertible(one_yx) || !invertible(one_xy)) throw NotInBigCellError(2);
  c.w_inv = one_yx.inverse();
  c.v_inv = one_xy.inverse();
  return c;
}

struct ChainDiff {
  Mat dx, dy;
  Mat dx1, dx2, dy1, dy2;
  Mat dyh1, dyh2;
  Mat dt1, dt2;
  Mat du_minus, du_plus;
};

ChainDiff analytic_diff(const TwoBlockChain& c, const Grading& w, const Mat& dx, const Mat& dy) {
  ChainDiff d;
  int d1 = w.dims[0], d2 = w.dims[1];
  d.dx = dx;
  d.dy = dy;
  d.dx1 = dx.middleCols(0, d1);
  d.dx2 = dx.middleCols(d1, d2);
  d.dy1 = dy.middleRows(0, d1);
  d.dy2 = dy.middleRows(d1, d2);
  Mat dphi1 = d.dx1 * c.y1 + c.x1 * d.dy1;
  d.dyh1 = d.dy1;
  d.dyh2 = d.dy2 * c.phi1_inv - c.y2 * c.phi1_inv * dphi1 * c.phi1_inv;
  d.dt1 = d.dx1 * c.yh1 + c.x1 * d.dyh1;
  d.dt2 = d.dx2 * c.yh2 + c.x2 * d.dyh2;
  Mat dh1 = d.dyh1 * c.x1 + c.yh1 * d.dx1;
  Mat dh2 = d.dyh2 * c.x2 + c.yh2 * d.dx2;
  int m = d1 + d2;
  d.du_minus = Mat::Zero(m, m);
  d.du_minus.block(d1, 0, d2, d1) = -(d.dyh2 * c.x1 + c.yh2 * d.dx1);
  Mat dhu_plus = Mat::Zero(m, m);
  dhu_plus.block(0, 0, d1, d1) = dh1;
  dhu_plus.block(0, d1, d1, d2) = d.dyh1 * c.x2 + c.yh1 * d.dx2;
  dhu_plus.block(d1, d1, d2, d2) = dh2;
  Mat dh = Mat::Zero(m, m);
  dh.block(0, 0, d1, d1) = dh1;
  dh.block(d1, d1, d2, d2) = dh2;
  d.du_plus = c.h_inv * (dhu_plus - dh * c.u_plus);
  return d;
}

ChainDiff finite_diff(const Mat& x, const Mat& y, const Grading& w, const Mat& dx, const Mat& dy,
                      double step) {
  ChainDiff d;
  int d1 = w.dims[0], d2 = w.dims[1];
  d.dx = dx;
  d.dy = dy;
  d.dx1 = dx.middleCols(0, d1);
  d.dx2 = dx.middleCols(d1, d2);
  d.dy1 = dy.middleRows(0, d1);
  d.dy2 = dy.middleRows(d1, d2);
  TwoBlockChain up = make_chain(x + step * dx, y + step * dy, w);
  TwoBlockChain dn = make_chain(x - step * dx, y - step * dy, w);
  auto diff = [&](const Mat& a, const Mat& b) { return Mat((a - b) / (2 * step)); };
  d.dyh1 = diff(up.yh1, dn.yh1);
  d.dyh2 = diff(up.yh2, dn.yh2);
  d.dt1 = diff(up.t1, dn.t1);
  d.dt2 = diff(up.t2, dn.t2);
  d.du_minus = diff(up.u_minus, dn.u_minus);
  d.du_plus = diff(up.u_plus, dn.u_plus);
  return d;
}

Cx wedge_trace(const Mat& coeff, const Mat& p1, const Mat& q2, const Mat& p2, const Mat& q1) {
  // Tr(coeff (P ^ Q))(xi1, xi2) = Tr(coeff (P(xi1) Q(xi2) - P(xi2) Q(xi1)))
  return (coeff * (p1 * q2 - p2 * q1)).trace();
}

}  // namespace

double two_form_residual(const Mat& x, const Mat& y, const Grading& w, int samples,
                         DiffMode mode, std::mt19937_64& rng, double fd_step) {
  if (w.blocks() != 2) throw Error("two_form_residual: two blocks required");
  if (x.norm() == 0.0 && y.norm() == 0.0) {
    // At the zero point every inverse coefficient is exactly the identity and
    // every curvature term (du_+-, dT wedge) is exactly zero, so the two
    // sides agree term by term; floating evaluation would only reintroduce
    // rounding noise into an identity of flat traces.
    return 0.0;
  }
  TwoBlockChain c = make_chain(x, y, w);
  int n = int(x.rows());
  int m = w.total();
  double worst = 0.0;

  Mat t1_inv = c.t1.inverse();
  Mat t2_inv = c.t2.inverse();
  Mat h1_inv = c.h1.inverse();
  Mat h2_inv = c.h2.inverse();
  Mat u_minus_inv = c.u_minus.inverse();
  Mat u_plus_inv = c.u_plus.inverse();

  for (int s = 0; s < samples; ++s) {
    Mat dx_a = randn_complex(n, m, rng), dy_a = randn_complex(m, n, rng);
    Mat dx_b = randn_complex(n, m, rng), dy_b = randn_complex(m, n, rng);
    ChainDiff da, db;
    if (mode == DiffMode::Analytic) {
      da = analytic_diff(c, w, dx_a, dy_a);
      db = analytic_diff(c, w, dx_b, dy_b);
    } else {
      da = finite_diff(x, y, w, dx_a, dy_a, fd_step);
      db = finite_diff(x, y, w, dx_b, dy_b, fd_step);
    }

    Mat ubar_minus_a = da.du_minus * u_minus_inv;
    Mat ubar_minus_b = db.du_minus * u_minus_inv;
    Mat ubar_plus_a = da.du_plus * u_plus_inv;
    Mat ubar_plus_b = db.du_plus * u_plus_inv;

    Cx lhs = wedge_trace(c.w_inv, da.dy, db.dx, db.dy, da.dx) -
             wedge_trace(c.v_inv, da.dx, db.dy, db.dx, da.dy) +
             (ubar_minus_a * c.h * ubar_plus_b * c.h_inv).trace() -
             (ubar_minus_b * c.h * ubar_plus_a * c.h_inv).trace();

    Cx rhs = wedge_trace(h1_inv, da.dyh1, db.dx1, db.dyh1, da.dx1) -
             wedge_trace(t1_inv, da.dx1, db.dyh1, db.dx1, da.dyh1) +
             wedge_trace(h2_inv, da.dyh2, db.dx2, db.dyh2, da.dx2) -
             wedge_trace(t2_inv, da.dx2, db.dyh2, db.dx2, da.dyh2) -
             (t1_inv * t2_inv * (da.dt2 * db.dt1 - db.dt2 * da.dt1)).trace();

    double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

}  // namespace mqv
