#pragma once

#include <map>

#include "mqv/blocklinalg.hpp"
#include "mqv/graph.hpp"
#include "mqv/kacmoody.hpp"

namespace mqv {

/// Raised when a monochromatic product leaves the opposite big cell; carries
/// the colour and the first node whose pivot is singular.
class NotInvertibleError : public Error {
 public:
  NotInvertibleError(int colour, int node)
      : Error("representation not invertible for colour " + std::to_string(colour) +
              " at node " + std::to_string(node)),
        colour(colour),
        node(node) {}
  int colour, node;
};

/// A representation of a graph: one matrix per oriented edge on a node-graded
/// space.  maps[{t,h}] is the matrix of the map V_t -> V_h (shape d_h x d_t).
struct GraphRep {
  ColouredQuiver quiver;
  std::vector<int> dims;
  std::map<std::pair<int, int>, Mat> maps;

  GraphRep() = default;
  GraphRep(ColouredQuiver q, std::vector<int> d);

  const Mat& map(int tail, int head) const;
  Mat& map(int tail, int head);
  void validate() const;
  int total_dim() const;
  /// Sum of matrix dimensions over oriented edges (complex parameter count).
  int parameter_count() const;

  static GraphRep zero(const ColouredQuiver& q, const std::vector<int>& d);
  static GraphRep random(const ColouredQuiver& q, const std::vector<int>& d,
                         std::mt19937_64& rng);
};

/// Ordered node list of a colour class together with block offsets into the
/// colour's graded space.
struct ColourLayout {
  std::vector<int> nodes;    // in the colour's total order
  std::vector<int> offsets;  // into the colour space
  std::vector<int> dims;
  std::vector<int> part_of;  // part index per position
  int total = 0;
};

ColourLayout colour_layout(const GraphRep& rep, int colour);

/// Block-unitriangular pair (v_+, v_-) of a colour: v_+ collects the maps
/// from later to earlier nodes of the colour order, v_- the reverse; blocks
/// between nodes of the same part stay zero.
std::pair<Mat, Mat> assemble_unitriangular(const GraphRep& rep, int colour);

/// Trailing principal minors of v_- v_+ per node of the colour (in colour
/// order) and their product f_c; the representation restricted to the colour
/// is invertible iff f_c is away from zero.
struct MinorReport {
  std::vector<Cx> minors;  // one per node, colour order
  Cx product;
};

MinorReport invertibility_minors(const GraphRep& rep, int colour);

/// Factorisation v_- v_+ = w_+ g w_- with w_+/w_- unitriangular (blocks
/// within a part allowed) and g block diagonal per node.
struct BigCellFactors {
  Mat w_plus, w_minus;
  std::vector<Mat> g;  // per node of the colour, in colour order
  ColourLayout layout;

  Mat g_matrix() const;  // g as a block diagonal matrix
};

BigCellFactors big_cell_factor(const GraphRep& rep, int colour, double rel_tol = 1e-8);

/// Moment map: per node the ordered product of its colours' diagonal factors,
/// plus the per-colour factorisation data.
struct MomentValue {
  std::vector<Mat> mu;                  // per node of the quiver
  std::vector<BigCellFactors> factors;  // per colour
  double det_product_residual = 0.0;    // | prod_i det(mu_i) - 1 |
};

MomentValue moment_map(const GraphRep& rep, double rel_tol = 1e-8);

/// True when every mu_i is within tol * scale of q_i * Id.
bool in_fiber(const GraphRep& rep, const Params& q, double tol = 1e-8);
bool in_fiber(const MomentValue& m, const std::vector<int>& dims, const Params& q,
              double tol = 1e-8);

/// No proper nontrivial graded subrepresentation.  Decided by the dimension
/// of the algebra generated by the node projectors and edge maps (it is all
/// of End(V) exactly for irreducible representations), with a fast reject
/// through coordinate-vector closures.
bool is_irreducible(const GraphRep& rep, double tol = 1e-8);

/// Smallest graded subrepresentation containing the given homogeneous vector
/// (node, vector in V_node); returns per-node orthonormal bases.
std::vector<Mat> generated_subrep(const GraphRep& rep, int node, const Vec& v,
                                  double tol = 1e-10);

/// Restriction of an invertible representation to an invariant graded
/// subspace given by per-node orthonormal bases.
GraphRep restrict_rep(const GraphRep& rep, const std::vector<Mat>& bases);

/// Scalar invariants of a monochromatic triangle with d = (1,1,1) and the
/// relations they satisfy against the leading minors h_1, h_1 h_2 of v_+ v_-.
struct TriangleInvariants {
  Cx a, b, c, p, r;
  Cx h1, h2;
  double residual_abc_pr;  // |abc - pr|
  double residual_rel1;    // |1 + a + b - h1|
  double residual_rel2;    // |1 + b + c + ac - p - r - h1 h2|
};

TriangleInvariants triangle_invariants(const GraphRep& rep);

/// Complex dimension of the stable quotient probed by the rank of a
/// finite-difference Jacobian of the moment map at rep:
/// dim ker(d mu) - (dim H - 1).
int quotient_dimension_probe(const GraphRep& rep, double fd_step = 1e-6,
                             double rank_gap_tol = 1e-5);

/// For a colour with exactly two parts: the transported representation on
/// the part-swapped ordering, with identical per-node moment values.
GraphRep transport_part_swap(const GraphRep& rep, int colour);

// ---------------------------------------------------------------------------
// Representation text format: one `map <tail> <head> : entries...` line per
// oriented edge (row-major complex entries "(re,im)"), missing edges are
// zero.  The loader validates shapes against the quiver and dimensions.

GraphRep parse_rep(std::istream& in, const ColouredQuiver& quiver, const std::vector<int>& dims);
GraphRep parse_rep_file(const std::string& path, const ColouredQuiver& quiver,
                        const std::vector<int>& dims);
std::string emit_rep(const GraphRep& rep);

}  // namespace mqv
