#include "mqv/blocklinalg.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace mqv {

bool dual_invertibility(const Mat& x, const Mat& y, double rel_tol) {
  if (x.rows() != y.cols() || x.cols() != y.rows()) throw Error("dual_invertibility: shape mismatch");
  Mat onexy = Mat::Identity(x.rows(), x.rows()) + x * y;
  Mat oneyx = Mat::Identity(y.rows(), y.rows()) + y * x;

  auto status = [&](const Mat& m) -> int {  // 1 invertible, 0 singular, -1 band
    if (m.rows() == 0) return 1;
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    double top = std::max(sv(0), 1.0);
    double bottom = sv(sv.size() - 1);
    if (bottom > 10 * rel_tol * top) return 1;
    if (bottom < 0.1 * rel_tol * top) return 0;
    return -1;
  };
  int a = status(onexy), b = status(oneyx);
  if (a < 0 || b < 0)
    throw IndeterminateError("dual_invertibility: within tolerance band of singularity");
  if (a != b)
    throw IndeterminateError("dual_invertibility: the two sides disagree near the threshold");
  return a == 1;
}

FactorChain build_factor_chain(const Mat& x, const Mat& y, const Grading& w, ChainOptions opt) {
  int n = int(x.rows());
  int m = w.total();
  if (x.cols() != m || y.rows() != m || y.cols() != n)
    throw Error("build_factor_chain: shapes do not match the grading");
  int s = w.blocks();

  FactorChain chain;
  chain.w = w;
  chain.x = x;
  chain.y = y;
  chain.cumulative.resize(s + 1);
  chain.cumulative[0] = Mat::Identity(n, n);

  std::vector<Mat> inv(s);  // inverses of cumulative[0..s-1] as needed
  Mat acc = Mat::Identity(n, n);
  for (int i = 1; i <= s; ++i) {
    Mat xi = x.middleCols(w.offset(i - 1), w.dims[i - 1]);
    Mat yi = y.middleRows(w.offset(i - 1), w.dims[i - 1]);
    acc = acc + xi * yi;
    chain.cumulative[i] = acc;
    if (!invertible(acc, opt.rank_tol)) throw NotInBigCellError(i);
  }
  for (int i = 0; i < s; ++i) {
    Mat xi = x.middleCols(w.offset(i), w.dims[i]);
    Mat yi = y.middleRows(w.offset(i), w.dims[i]);
    Mat prev_inv = chain.cumulative[i].inverse();
    Mat xh = prev_inv * xi;
    Mat yh = yi * prev_inv;
    chain.x_hat.push_back(xh);
    chain.y_hat.push_back(yh);
    chain.diag.push_back(Mat::Identity(w.dims[i], w.dims[i]) + yh * xi);
    chain.left_factor.push_back(Mat::Identity(n, n) + xi * yh);
    chain.right_factor.push_back(Mat::Identity(n, n) + xh * yi);
  }
  return chain;
}

GaussFactors gauss_gram(const FactorChain& chain) {
  const Grading& w = chain.w;
  int m = w.total();
  int s = w.blocks();
  GaussFactors f;
  f.u_minus = Mat::Identity(m, m);
  Mat hu_plus = Mat::Identity(m, m);
  Mat v_minus_h = Mat::Identity(m, m);
  f.v_plus = Mat::Identity(m, m);
  f.h = Mat::Zero(m, m);

  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      Mat yhx = chain.y_hat[i] * chain.x_block(j);   // block (i,j) of [y_hat^i x_j]
      Mat yxh = chain.y_block(i) * chain.x_hat[j];   // block (i,j) of [y^i x_hat_j]
      auto put = [&](Mat& target, const Mat& val, double sign) {
        target.block(w.offset(i), w.offset(j), w.dims[i], w.dims[j]) += sign * val;
      };
      if (i > j) put(f.u_minus, yhx, -1.0);
      if (i <= j) put(hu_plus, yhx, +1.0);
      if (i >= j) put(v_minus_h, yxh, +1.0);
      if (i < j) put(f.v_plus, yxh, -1.0);
    }
    f.h.block(w.offset(i), w.offset(i), w.dims[i], w.dims[i]) = chain.diag[i];
  }
  Mat h_inv = Mat::Zero(m, m);
  for (int i = 0; i < s; ++i)
    h_inv.block(w.offset(i), w.offset(i), w.dims[i], w.dims[i]) = chain.diag[i].inverse();
  f.u_plus = h_inv * hu_plus;
  f.v_minus = v_minus_h * h_inv;
  f.one_yx = Mat::Identity(m, m) + chain.y * chain.x;
  return f;
}

double coxeter_product_check(const Eigen::MatrixXd& gram) {
  int s = int(gram.rows());
  if (gram.cols() != s) throw Error("coxeter_product_check: square Gram matrix required");
  if (!gram.isApprox(gram.transpose(), 1e-12))
    throw Error("coxeter_product_check: Gram matrix not symmetric");
  for (int i = 0; i < s; ++i)
    if (std::abs(gram(i, i) - 2.0) > 1e-12)
      throw Error("coxeter_product_check: diagonal entries must equal 2");

  // Work in the basis x_1..x_s, so x is the identity matrix and
  // (x_i, v) = (row i of G) v.
  Mat product = Mat::Identity(s, s);
  std::vector<Mat> prefixes;  // T_{i-1}...T_1
  for (int i = 0; i < s; ++i) {
    prefixes.push_back(product);
    Mat t = Mat::Identity(s, s);
    for (int j = 0; j < s; ++j) t(i, j) -= gram(i, j);  // T_i = 1 - x_i (x_i, .)
    product = t * product;
  }

  // Assemble y row-wise from the reduced rows -(x_i, .) and run it through
  // the factor chain.
  Mat y(s, s);
  for (int i = 0; i < s; ++i) {
    Eigen::RowVectorXcd reduced(s);
    for (int j = 0; j < s; ++j) reduced(j) = -gram(i, j);
    y.row(i) = reduced * prefixes[i];
  }
  FactorChain chain = build_factor_chain(Mat::Identity(s, s), y, Grading(std::vector<int>(s, 1)));
  GaussFactors f = gauss_gram(chain);

  double r = (chain.cumulative[s] - product).norm();          // T_s...T_1 = 1 + xy
  for (int i = 0; i < s; ++i)
    r = std::max(r, std::abs(chain.diag[i](0, 0) + 1.0));     // h = -1
  r = std::max(r, (product + f.u_minus.inverse() * f.u_plus).norm());
  Mat g = gram.cast<Cx>();
  r = std::max(r, (f.u_plus + f.u_minus - g).norm());         // u_+ + u_- is the Gram matrix
  return r;
}

Mat BlockUDL::diag_matrix(const Grading& g) const {
  Mat out = Mat::Zero(g.total(), g.total());
  for (int i = 0; i < g.blocks(); ++i)
    if (g.dims[i] > 0) out.block(g.offset(i), g.offset(i), g.dims[i], g.dims[i]) = diag[i];
  return out;
}

BlockUDL block_udl(const Mat& m, const Grading& g, double rel_tol, int* failing_block) {
  int n = g.total();
  if (m.rows() != n || m.cols() != n) throw Error("block_udl: shape mismatch");
  int s = g.blocks();
  BlockUDL f;
  f.upper = Mat::Identity(n, n);
  f.lower = Mat::Identity(n, n);
  f.diag.resize(s);

  Mat x = m;
  double scale = mat_scale(x);
  for (int k = s - 1; k >= 0; --k) {
    int off = g.offset(k);
    int dk = g.dims[k];
    Mat pivot = x.block(off, off, dk, dk);
    if (dk > 0) {
      Eigen::JacobiSVD<Mat> svd(pivot);
      const auto& sv = svd.singularValues();
      if (sv(sv.size() - 1) <= rel_tol * scale) {
        if (failing_block) *failing_block = k;
        throw Error("block_udl: block " + std::to_string(k) + " pivot singular");
      }
    }
    f.diag[k] = pivot;
    if (k == 0 || dk == 0) continue;
    Mat pinv = pivot.inverse();
    Mat b = x.block(0, off, off, dk);
    Mat c = x.block(off, 0, dk, off);
    f.upper.block(0, off, off, dk) += b * pinv;
    f.lower.block(off, 0, dk, off) += pinv * c;
    x.block(0, 0, off, off) -= b * pinv * c;
  }
  return f;
}

// ---------------------------------------------------------------------------

int partition_total(const Partition& p) {
  int t = 0;
  for (int x : p) t += x;
  return t;
}

bool partition_valid(const Partition& p) {
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) return false;
    if (i && p[i] > p[i - 1]) return false;
  }
  return true;
}

int ClassSpec::dimension() const {
  int n = 0;
  for (const auto& e : eigen_data) n += partition_total(e.blocks);
  return n;
}

void ClassSpec::validate() const {
  for (const auto& e : eigen_data) {
    if (std::abs(e.eigenvalue.v) < 1e-14) throw Error("class with zero eigenvalue");
    if (!partition_valid(e.blocks)) throw Error("invalid partition");
  }
  for (size_t i = 0; i < eigen_data.size(); ++i)
    for (size_t j = i + 1; j < eigen_data.size(); ++j)
      if (std::abs(eigen_data[i].eigenvalue.v - eigen_data[j].eigenvalue.v) < 1e-12)
        throw Error("repeated eigenvalue in class spec");
}

Mat ClassSpec::representative() const {
  int n = dimension();
  Mat m = Mat::Zero(n, n);
  int at = 0;
  for (const auto& e : eigen_data)
    for (int size : e.blocks) {
      for (int k = 0; k < size; ++k) {
        m(at + k, at + k) = e.eigenvalue.v;
        if (k + 1 < size) m(at + k, at + k + 1) = 1.0;
      }
      at += size;
    }
  return m;
}

QScalar ClassSpec::determinant() const {
  QScalar d = QScalar::one();
  for (const auto& e : eigen_data) d = d * e.eigenvalue.pow(partition_total(e.blocks));
  return d;
}

ClassSpec ClassSpec::scaled(const QScalar& c) const {
  ClassSpec out = *this;
  for (auto& e : out.eigen_data) e.eigenvalue = e.eigenvalue * c;
  return out;
}

ClassSpec ClassSpec::inverse() const {
  ClassSpec out = *this;
  for (auto& e : out.eigen_data) e.eigenvalue = e.eigenvalue.inverse();
  return out;
}

bool ClassSpec::same_as(const ClassSpec& other, double tol) const {
  if (eigen_data.size() != other.eigen_data.size()) return false;
  std::vector<bool> used(other.eigen_data.size(), false);
  for (const auto& e : eigen_data) {
    bool found = false;
    for (size_t j = 0; j < other.eigen_data.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(e.eigenvalue.v - other.eigen_data[j].eigenvalue.v) < tol &&
          e.blocks == other.eigen_data[j].blocks) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

int ClassSpec::max_block_at(Cx s, double tol) const {
  for (const auto& e : eigen_data)
    if (std::abs(e.eigenvalue.v - s) < tol) return e.blocks.empty() ? 0 : e.blocks[0];
  return 0;
}

ClassSpec jordan_child(const ClassSpec& parent, double tol) {
  ClassSpec out;
  for (const auto& e : parent.eigen_data) {
    if (std::abs(e.eigenvalue.v - Cx(1.0)) < tol) {
      Partition p;
      for (int part : e.blocks)
        if (part - 1 > 0) p.push_back(part - 1);
      if (!p.empty()) out.eigen_data.push_back({e.eigenvalue, p});
    } else {
      out.eigen_data.push_back(e);
    }
  }
  return out;
}

ClassSpec jordan_parent(const ClassSpec& child, int parent_dim, double tol) {
  ClassSpec out;
  Partition ones;
  int used = 0;
  bool saw_one = false;
  for (const auto& e : child.eigen_data) {
    if (std::abs(e.eigenvalue.v - Cx(1.0)) < tol) {
      saw_one = true;
      Partition p;
      for (int part : e.blocks) p.push_back(part + 1);
      used += partition_total(p);
      out.eigen_data.push_back({e.eigenvalue, p});
    } else {
      used += partition_total(e.blocks);
      out.eigen_data.push_back(e);
    }
  }
  int extra = parent_dim - used;
  if (extra < 0) throw Error("jordan_parent: ambient dimension too small");
  if (extra > 0) {
    Partition p(extra, 1);
    if (saw_one) {
      for (auto& e : out.eigen_data)
        if (std::abs(e.eigenvalue.v - Cx(1.0)) < tol) {
          e.blocks.insert(e.blocks.end(), p.begin(), p.end());
          std::sort(e.blocks.rbegin(), e.blocks.rend());
        }
    } else {
      out.eigen_data.push_back({QScalar::one(), p});
    }
  }
  return out;
}

namespace {

// Givens data with cs real: [cs, sn; -conj(sn), cs] * [f; g] = [r; 0].
void make_givens(Cx f, Cx g, double& cs, Cx& sn) {
  if (std::abs(f) == 0.0) {
    cs = 0.0;
    sn = 1.0;
    return;
  }
  double d = std::sqrt(std::norm(f) + std::norm(g));
  cs = std::abs(f) / d;
  sn = (f / std::abs(f)) * std::conj(g) / d;
}

// Swaps the adjacent diagonal entries k, k+1 of an upper triangular matrix by
// a unitary similarity, preserving triangularity.
void schur_swap(Mat& t, int k) {
  int n = int(t.rows());
  double cs;
  Cx sn;
  make_givens(t(k, k + 1), t(k + 1, k + 1) - t(k, k), cs, sn);
  for (int j = k; j < n; ++j) {
    Cx a = t(k, j), b = t(k + 1, j);
    t(k, j) = cs * a + sn * b;
    t(k + 1, j) = -std::conj(sn) * a + cs * b;
  }
  for (int i = 0; i <= k + 1; ++i) {
    Cx a = t(i, k), b = t(i, k + 1);
    t(i, k) = cs * a + std::conj(sn) * b;
    t(i, k + 1) = -sn * a + cs * b;
  }
  t(k + 1, k) = 0.0;
}

}  // namespace

ClassSpec numeric_jordan(const Mat& m, const std::vector<Cx>& markers, JordanOptions opt) {
  int n = int(m.rows());
  if (m.cols() != n) throw Error("numeric_jordan: square matrix required");
  if (n == 0) return {};

  Eigen::ComplexSchur<Mat> schur(m, false);
  if (schur.info() != Eigen::Success) throw Error("numeric_jordan: Schur decomposition failed");
  const Mat& tri = schur.matrixT();
  std::vector<Cx> eigs(n);
  for (int i = 0; i < n; ++i) eigs[i] = tri(i, i);

  // Cluster eigenvalues: around the supplied markers when given, else by
  // single-linkage with the clustering radius.
  std::vector<Cx> centres;
  std::vector<int> mult;
  std::vector<int> assignment(n, -1);
  if (!markers.empty()) {
    for (Cx m0 : markers) {
      bool dup = false;
      for (Cx c : centres)
        if (std::abs(c - m0) < opt.cluster_tol) dup = true;
      if (!dup) centres.push_back(m0);
    }
    mult.assign(centres.size(), 0);
    for (int i = 0; i < n; ++i) {
      int best = -1;
      double bd = 1e300;
      for (size_t c = 0; c < centres.size(); ++c) {
        double d = std::abs(eigs[i] - centres[c]);
        if (d < bd) {
          bd = d;
          best = int(c);
        }
      }
      if (bd > std::max(1.0, std::abs(centres[best])) * 2000 * opt.cluster_tol)
        throw IndeterminateError("numeric_jordan: eigenvalue far from every marker");
      ++mult[best];
      assignment[i] = best;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      bool placed = false;
      for (size_t c = 0; c < centres.size() && !placed; ++c)
        if (std::abs(eigs[i] - centres[c]) < opt.cluster_tol) {
          assignment[i] = int(c);
          ++mult[c];
          placed = true;
        }
      if (!placed) {
        centres.push_back(eigs[i]);
        mult.push_back(1);
        assignment[i] = int(centres.size()) - 1;
      }
    }
    // refine centres to cluster means
    std::vector<Cx> sums(centres.size(), 0.0);
    for (int i = 0; i < n; ++i) sums[assignment[i]] += eigs[i];
    for (size_t c = 0; c < centres.size(); ++c) centres[c] = sums[c] / double(mult[c]);
    // separation check
    for (size_t a = 0; a < centres.size(); ++a)
      for (size_t b = a + 1; b < centres.size(); ++b)
        if (std::abs(centres[a] - centres[b]) < 3 * opt.cluster_tol)
          throw IndeterminateError("numeric_jordan: eigenvalue clusters not separated");
  }

  std::vector<double> spread(centres.size(), 0.0);
  for (int i = 0; i < n; ++i)
    spread[assignment[i]] =
        std::max(spread[assignment[i]], std::abs(eigs[i] - centres[assignment[i]]));

  ClassSpec out;
  for (size_t c = 0; c < centres.size(); ++c) {
    if (mult[c] == 0) continue;
    if (std::abs(centres[c]) < 1e-12) throw Error("numeric_jordan: zero eigenvalue");

    // Reorder a copy of the Schur form so the cluster sits in the leading
    // block; adjacent swaps keep the triangular shape exactly.
    Mat t = tri;
    std::vector<int> where;
    std::vector<int> owner(n);
    for (int i = 0; i < n; ++i) owner[i] = assignment[i];
    int front = 0;
    for (int i = 0; i < n; ++i) {
      if (owner[i] != int(c)) continue;
      for (int k = i - 1; k >= front; --k) {
        schur_swap(t, k);
        std::swap(owner[k], owner[k + 1]);
      }
      ++front;
    }

    // The cluster's nilpotent part is the leading block with its diagonal
    // (the in-cluster eigenvalue deviations) removed.
    Mat nil = t.topLeftCorner(mult[c], mult[c]);
    for (int i = 0; i < mult[c]; ++i) nil(i, i) = 0.0;

    Partition part;
    std::vector<int> ranks{mult[c]};
    Mat npow = Mat::Identity(mult[c], mult[c]);
    double nil_scale = std::max(1.0, nil.norm());
    for (int k = 1; k <= mult[c] && ranks.back() > 0; ++k) {
      npow = npow * nil;
      Eigen::JacobiSVD<Mat> s2(npow);
      const auto& sv = s2.singularValues();
      // in-cluster eigenvalue deviations leak into the off-diagonal part at
      // first order, so the cut must sit above the measured spread
      double cut = std::max(opt.rank_tol * std::pow(nil_scale, double(k)),
                            20.0 * spread[c] * std::pow(nil_scale, double(k - 1)));
      int r = 0;
      for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++r;
      if (r >= ranks.back())  // ranks of nilpotent powers strictly decrease
        throw IndeterminateError("numeric_jordan: restriction not nilpotent (ambiguous spectrum)");
      ranks.push_back(r);
    }
    if (ranks.back() != 0)
      throw IndeterminateError("numeric_jordan: nilpotent rank sequence did not reach zero");
    // number of blocks of size >= k is ranks[k-1] - ranks[k]
    std::vector<int> ge;
    for (size_t k = 1; k < ranks.size(); ++k) ge.push_back(ranks[k - 1] - ranks[k]);
    for (size_t k = 0; k < ge.size(); ++k) {
      int count = ge[k] - (k + 1 < ge.size() ? ge[k + 1] : 0);
      if (count < 0) throw IndeterminateError("numeric_jordan: inconsistent rank sequence");
      for (int b = 0; b < count; ++b) part.push_back(int(k) + 1);
    }
    std::sort(part.rbegin(), part.rend());
    if (partition_total(part) != mult[c])
      throw IndeterminateError("numeric_jordan: partition does not match multiplicity");
    out.eigen_data.push_back({QScalar(centres[c]), part});
  }
  if (out.dimension() != n) throw IndeterminateError("numeric_jordan: dimensions inconsistent");
  return out;
}

Partition random_partition(int n, std::mt19937_64& rng) {
  Partition p;
  while (n > 0) {
    int part = 1 + int(rng() % uint64_t(n));
    p.push_back(part);
    n -= part;
  }
  std::sort(p.rbegin(), p.rend());
  return p;
}

ClassSpec random_class_spec(int n, std::mt19937_64& rng, bool exact) {
  ClassSpec cls;
  while (n > 0) {
    int part_dim = 1 + int(rng() % uint64_t(n));
    QScalar ev;
    for (;;) {
      ev = exact ? random_exact_scalar(rng)
                 : QScalar(Cx(1.0 + (rng() % 100) / 25.0, (rng() % 7) / 3.0));
      bool clash = false;
      for (const auto& e : cls.eigen_data)
        if (std::abs(e.eigenvalue.v - ev.v) < 1e-3) clash = true;
      if (!clash) break;
    }
    cls.eigen_data.push_back({ev, random_partition(part_dim, rng)});
    n -= part_dim;
  }
  cls.validate();
  return cls;
}

}  // namespace mqv
