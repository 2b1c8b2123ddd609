#pragma once

#include "mqv/representation.hpp"

namespace mqv {

/// A point of the rank-r fission space on a graded space: twist C, 2r
/// unitriangular Stokes factors (odd upper, even lower) and an invertible
/// block diagonal h.
struct FissionPoint {
  Grading grading;
  int r = 1;
  Mat c;
  std::vector<Mat> s;  // s[0..2r-1]; s[even index] in U_+, s[odd index] in U_-
  Mat h;

  void validate(double tol = 0.0) const;
};

FissionPoint random_fission_point(const Grading& g, int r, std::mt19937_64& rng);

/// Moment map (C^{-1} h S_{2r} ... S_2 S_1 C, h^{-1}).
std::pair<Mat, Mat> fission_moment(const FissionPoint& p);

class NotReducedError : public Error {
 public:
  explicit NotReducedError(double residual)
      : Error("fission point not reduced: group moment differs from 1 by " +
              std::to_string(residual)) {}
};

/// For r = 2 points with trivial group moment: the graph-representation
/// coordinates (v_+, v_-) = (S_1, S_2), plus the off-diagonal pair and its
/// moment in the two-block case.
struct ReducedPoint {
  Mat v_plus, v_minus;
  bool two_block = false;
  Mat a, b;            // a: block (1,2) of v_+, b: block (2,1) of v_-
  Mat moment_first;    // (1+ab)^{-1}
  Mat moment_second;   // 1+ba
};

ReducedPoint reduce_rank2(const FissionPoint& p, double tol = 1e-10);

/// Full swap of a two-part grading: the rotated point lives on the reversed
/// grading and has identical moment values.
FissionPoint reorder_two_part_swap(const FissionPoint& p);

// ---------------------------------------------------------------------------
// Splay / fuse.

/// One fused factor: b : V -> W_i and a : W_i -> V.
struct BPair {
  Mat b, a;
};

/// Decomposes (x: W -> V, y: V -> W) into reduced pairs (y_hat^i, x_i), one
/// per block of the grading (chain order).
std::vector<BPair> splay(const Mat& x, const Mat& y, const Grading& w, ChainOptions opt = {});

/// Reassembles the chain: y^i = b_i T_{i-1}...T_1 with T_i = 1 + a_i b_i,
/// giving 1 + yx = u_-^{-1} h u_+ = h S_2 S_1.
struct FusedPoint {
  Mat x, y;
  Mat h;        // block diagonal
  Mat s1, s2;   // s1 in U_+, s2 in U_-
  Mat u_plus, u_minus;
};

FusedPoint fuse(const std::vector<BPair>& pairs, const Grading& w, int dim_v);

/// Braid move on a two-factor chain: ((b1,a1),(b2,a2)) goes to the chain in
/// the opposite fusion order; `braid` records the group element twisting the
/// moved factor.  Products T_2 T_1 and M_1 M_2 of both chains equal 1 + xy.
struct SwapResult {
  std::vector<BPair> pairs;
  Mat braid;
};

SwapResult swap_factors(const std::vector<BPair>& pairs);

// ---------------------------------------------------------------------------
// Tame tuples -> Stokes data.

struct TameTuple {
  std::vector<Mat> t;  // invertible matrices on V
};

class AmbiguousRankError : public Error {
 public:
  explicit AmbiguousRankError(const std::string& what) : Error(what) {}
};

struct TameToStokes {
  std::vector<int> d;        // d_i = rank(T_i - 1)
  std::vector<Mat> a, b;     // T_i = 1 + b_i a_i, a_i surjective, b_i injective
  Grading w;
  Mat big_a, big_b;          // A: V -> W, B: W -> V
  Mat h, u_plus, u_minus;    // h u_+ - u_- = [a_i b_j]
  Mat s1, s2;                // h S_2 S_1 = u_-^{-1} h u_+
  double residual_parent;    // ||1 + AB - u_-^{-1} h u_+||
  double residual_child;     // ||T_m...T_1 - (1 + BA)||
  bool class_relation_checked = false;
  bool class_relation_holds = false;  // Jordan data of 1+AB vs 1+BA via child rule
  ClassSpec parent_class, child_class;
};

/// Rank factorisations T_i - 1 = b_i a_i through the SVD; rejects rank-0
/// totals and singular-value gaps that make the ranks ambiguous.
TameToStokes tame_to_stokes(const TameTuple& tuple, double rank_tol = 1e-8,
                            const std::vector<Cx>& jordan_markers = {});

// ---------------------------------------------------------------------------
// Markings and legs.

class InvalidMarkingError : public Error {
 public:
  explicit InvalidMarkingError(const std::string& what) : Error(what) {}
};

class EmptyClassError : public Error {
 public:
  explicit EmptyClassError(const std::string& what) : Error(what) {}
};

/// Leg data (q_i = xi_i / xi_{i-1}, d_i = rank of the partial annihilating
/// products) of a class with the given ordered marking.  The marking must
/// annihilate the class.
Leg marking_to_leg(const ClassSpec& cls, const std::vector<QScalar>& marking);

/// Rank of prod_{j<i}(M - xi_j) computed combinatorially from the class data;
/// index i is 1-based, i = 1 gives the ambient dimension.
std::vector<int> leg_dims_from_class(const ClassSpec& cls, const std::vector<QScalar>& marking);

/// Class encoded by a leg (combinatorial route: the drops of the dimension
/// sequence at the occurrences of each marking root are the conjugate
/// partition columns).
ClassSpec class_from_leg(const Leg& leg);

/// Random annihilating marking: the roots with the multiplicities of the
/// largest Jordan blocks, shuffled, optionally padded with a repeat.
std::vector<QScalar> random_annihilating_marking(const ClassSpec& cls, std::mt19937_64& rng,
                                                 bool pad = false);

struct LegWitness {
  ClassSpec cls;       // combinatorial class of the leg
  ClassSpec observed;  // numeric_jordan of the witness matrix
  Mat m;               // witness M = q_1 (1 + a_1 b_1)
  std::vector<Mat> a, b;
  double det_residual;  // |det M - prod q_i^{d_i}|
};

/// Constructs an invertible representation of the leg with surjective b's and
/// injective a's realising the moment conditions; throws EmptyClassError when
/// the dimensions are infeasible.
LegWitness leg_to_class(const Leg& leg);

/// Leg maps realising the moment conditions for a concrete matrix: descending
/// ranges V_{k+1} = (M - xi_k) V_k with inclusions upward.  Returns one
/// (a_k, b_k) pair per leg edge; the marking must annihilate M.
std::vector<std::pair<Mat, Mat>> leg_maps_from_matrix(const Mat& m,
                                                      const std::vector<QScalar>& marking,
                                                      double rank_tol = 1e-9);

// ---------------------------------------------------------------------------
// Reflections through markings.

struct MarkingReflection {
  SupernovaQuiver snova;  // transformed leg data
  QScalar shift;          // scalar shift (1 for leg-interior reflections)
  Params new_params;
  RootVector new_dims;
  double mismatch;  // largest deviation from (r_i(q), s_i(d))
};

/// Swaps the two marking roots that determine q at the given node and redoes
/// the leg bookkeeping; for core nodes this routes through the extended leg
/// with parameter 1 and the unique scalar shift that keeps it special.
/// Rejects q_i = 1.
MarkingReflection reflect_marking(const SupernovaQuiver& snova, int node);

// ---------------------------------------------------------------------------
// Readings.

struct Reading {
  std::string name;      // "generic" or the part it distinguishes
  int rank = 0;          // rank of the structure group
  int m = 0;             // number of extra tame points
  std::vector<int> h_blocks;          // block dimensions of H(Q)
  std::vector<ClassSpec> h_classes;   // classes on the remaining core nodes
  std::vector<ClassSpec> m_classes;   // classes at the extra tame points
  int num_leading_eigs = 0;           // parts of the core in this reading
  std::vector<int> t_counts;          // nodes per remaining part
  bool possibly_empty = false;        // some dim V_i exceeds dim U_i
};

std::vector<Reading> emit_readings(const SupernovaQuiver& snova);

// ---------------------------------------------------------------------------
// Two-form identity (two-block chains).

enum class DiffMode { Analytic, FiniteDifference };

/// Evaluates both sides of the fusion/fission two-form identity on random
/// tangent pairs at the base point (x, y) and returns the largest residual.
double two_form_residual(const Mat& x, const Mat& y, const Grading& w, int samples,
                         DiffMode mode, std::mt19937_64& rng, double fd_step = 1e-6);

}  // namespace mqv
