#pragma once

#include "mqv/common.hpp"

namespace mqv {

/// Ordered grading of a vector space into labelled blocks.
struct Grading {
  std::vector<int> dims;

  explicit Grading(std::vector<int> d = {}) : dims(std::move(d)) {
    for (int x : dims)
      if (x < 0) throw Error("negative block dimension");
  }
  int blocks() const { return int(dims.size()); }
  int total() const {
    int t = 0;
    for (int x : dims) t += x;
    return t;
  }
  int offset(int i) const {
    int o = 0;
    for (int k = 0; k < i; ++k) o += dims[k];
    return o;
  }
};

/// Raised when a cumulative product 1 + x_1 y^1 + ... + x_i y^i fails to be
/// invertible; carries the first failing index (1-based).
class NotInBigCellError : public Error {
 public:
  NotInBigCellError(int index)
      : Error("not in big cell: cumulative factor " + std::to_string(index) + " is singular"),
        index(index) {}
  int index;
};

/// Reports whether 1+xy and 1+yx are invertible (they agree in exact
/// arithmetic; a tolerance band around singularity raises
/// IndeterminateError).
bool dual_invertibility(const Mat& x, const Mat& y, double rel_tol = 1e-8);

/// The derived data of a pair x: W -> V, y: V -> W with W graded: cumulative
/// invertible factors, reduced block columns/rows, diagonal blocks and the
/// two one-sided factor sequences whose ordered products recover the
/// cumulative factors.
struct FactorChain {
  Grading w;
  Mat x, y;                      // x: n x m, y: m x n with m = w.total()
  std::vector<Mat> cumulative;   // size s+1; cumulative[i] = 1 + sum_{k<=i} x_k y^k
  std::vector<Mat> x_hat;        // cumulative[i-1]^{-1} * x_i
  std::vector<Mat> y_hat;        // y^i * cumulative[i-1]^{-1}
  std::vector<Mat> diag;         // h_i = 1 + y_hat^i x_i, block i square
  std::vector<Mat> left_factor;  // T_i = 1 + x_i y_hat^i; cumulative[i] = T_i...T_1
  std::vector<Mat> right_factor; // M_i = 1 + x_hat_i y^i; cumulative[i] = M_1...M_i

  Mat x_block(int i) const { return x.middleCols(w.offset(i), w.dims[i]); }
  Mat y_block(int i) const { return y.middleRows(w.offset(i), w.dims[i]); }
};

struct ChainOptions {
  double rank_tol = 1e-8;  // relative smallest-singular-value threshold
};

FactorChain build_factor_chain(const Mat& x, const Mat& y, const Grading& w,
                               ChainOptions opt = {});

/// Block Gauss data for 1 + yx: unitriangular u_-, u_+, v_-, v_+ and block
/// diagonal h with 1+yx = u_-^{-1} h u_+ = v_- h v_+^{-1}, assembled from the
/// chain by the closed formulas
///   u_- = 1 - [y_hat^i x_j]_{i>j},  h u_+ = 1 + [y_hat^i x_j]_{i<=j},
///   v_- h = 1 + [y^i x_hat_j]_{i>=j},  v_+ = 1 - [y^i x_hat_j]_{i<j}.
struct GaussFactors {
  Mat u_minus, u_plus, v_minus, v_plus;
  Mat h;        // block diagonal
  Mat one_yx;   // 1 + yx for convenience
};

GaussFactors gauss_gram(const FactorChain& chain);

/// Verifies the triangular decomposition of a product of reflections: for a
/// basis with Gram matrix G ((x_i,x_i)=2), the reflections T_i = 1 - x_i(x_i,.)
/// satisfy T_s...T_1 = -u_-^{-1} u_+ where u_+ + u_- = G and the block
/// diagonal is -1.  Returns the largest residual over the claimed identities.
double coxeter_product_check(const Eigen::MatrixXd& gram);

/// Factorisation m = upper * diag * lower over the opposite big cell of the
/// grading (upper/lower block-unitriangular, diag block diagonal).  When the
/// factorisation does not exist, failing_block (if given) receives the first
/// offending block index and Error is thrown.
struct BlockUDL {
  Mat upper, lower;
  std::vector<Mat> diag;

  Mat diag_matrix(const Grading& g) const;
};

BlockUDL block_udl(const Mat& m, const Grading& g, double rel_tol = 1e-8,
                   int* failing_block = nullptr);

// ---------------------------------------------------------------------------
// Conjugacy class bookkeeping.

/// Weakly decreasing positive parts.
using Partition = std::vector<int>;

int partition_total(const Partition& p);
bool partition_valid(const Partition& p);

/// A conjugacy class of an invertible matrix: eigenvalue with Jordan block
/// partition, eigenvalues distinct and nonzero.
struct ClassSpec {
  struct EigenData {
    QScalar eigenvalue;
    Partition blocks;
  };
  std::vector<EigenData> eigen_data;

  int dimension() const;
  void validate() const;
  /// Canonical Jordan representative.
  Mat representative() const;
  QScalar determinant() const;
  /// Scales every eigenvalue by c.
  ClassSpec scaled(const QScalar& c) const;
  ClassSpec inverse() const;
  /// Structural equality with eigenvalue matching within tol.
  bool same_as(const ClassSpec& other, double tol = 1e-6) const;
  /// Maximal Jordan block size at the given eigenvalue (0 if absent).
  int max_block_at(Cx s, double tol = 1e-9) const;
};

/// Class of 1 + BA given the class of 1 + AB (A injective, B surjective):
/// the partition at eigenvalue 1 loses its longest column, everything else
/// is untouched.
ClassSpec jordan_child(const ClassSpec& parent, double tol = 1e-9);

/// Inverse construction in ambient dimension `parent_dim`: each eigenvalue-1
/// part grows by one and parts of size one are appended to reach the
/// dimension.
ClassSpec jordan_parent(const ClassSpec& child, int parent_dim, double tol = 1e-9);

struct JordanOptions {
  double cluster_tol = 1e-6;  // eigenvalue clustering radius
  double rank_tol = 1e-7;     // relative rank cut for the nilpotent cluster block
};

/// Jordan structure of an invertible matrix recovered from eigenvalue
/// clusters and ranks of powers.  Optional markers pin cluster centres.
/// Throws IndeterminateError (ambiguous spectrum) when clusters are not
/// cleanly separated or the partition data is inconsistent.
ClassSpec numeric_jordan(const Mat& m, const std::vector<Cx>& markers = {},
                         JordanOptions opt = {});

Partition random_partition(int n, std::mt19937_64& rng);

/// Random class of the given dimension with well separated exact (or plain
/// float) eigenvalues.
ClassSpec random_class_spec(int n, std::mt19937_64& rng, bool exact = true);

}  // namespace mqv
