#pragma once

#include "mqv/graph.hpp"

namespace mqv {

using RootVector = std::vector<int>;
using Params = std::vector<QScalar>;

/// Cartan matrix 2*Id - A of the underlying graph.
IntMat cartan_matrix(const ColouredQuiver& g);

/// Symmetric bilinear form of the root lattice, beta^T C delta.
long long bilinear_form(const RootVector& beta, const RootVector& delta, const IntMat& cartan);
long long bilinear_form(const RootVector& beta, const RootVector& delta, const ColouredQuiver& g);

/// Simple reflection on the root lattice at node i.
RootVector reflect_dimension(int i, const RootVector& d, const IntMat& cartan);
RootVector reflect_dimension(int i, const RootVector& d, const ColouredQuiver& g);

/// Dual simple reflection on multiplicative parameters at node i:
/// q_j -> q_i^{-C_ij} * q_j.
Params reflect_parameters(int i, const Params& q, const IntMat& cartan);
Params reflect_parameters(int i, const Params& q, const ColouredQuiver& g);

/// q^beta = prod q_i^{beta_i}.
QScalar param_power(const Params& q, const RootVector& beta);

struct RootClassification {
  std::vector<RootVector> real_positive;
  std::vector<RootVector> imaginary_positive;

  bool contains(const RootVector& d) const;
};

/// All positive roots with coordinates in [0, bound], found by closing the
/// simple roots and the fundamental region under simple reflections inside
/// the coordinate box.
RootClassification classify_roots(const ColouredQuiver& g, int bound);

bool is_positive_root(const RootVector& d, const ColouredQuiver& g);

/// Nonzero vectors in the fundamental region (connected support,
/// (eps_i, beta) <= 0 for all i) within the box.
bool in_fundamental_region(const RootVector& beta, const ColouredQuiver& g);

struct GenericityReport {
  bool generic = true;
  bool undecided = false;          // float parameters too close to call
  std::optional<RootVector> witness;  // violating alpha when not generic
};

/// Checks q^alpha != 1 over R(d) = { alpha : (alpha,alpha) <= 2,
/// 0 <= alpha <= d } minus {0, d}.  Exact when all parameters carry exact
/// representations, else within tol.
GenericityReport is_generic(const Params& q, const RootVector& d, const ColouredQuiver& g,
                            double tol = 1e-10);

/// Enumerates R(d) (the genericity test set).
std::vector<RootVector> genericity_set(const RootVector& d, const ColouredQuiver& g);

/// Expected dimension 2 - (d,d) of the stable quotient.
long long expected_dimension(const RootVector& d, const ColouredQuiver& g);

}  // namespace mqv
