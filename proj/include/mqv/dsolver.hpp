#pragma once

#include "mqv/stokes.hpp"

namespace mqv {

/// A graphical existence problem: a complete k-partite core with one
/// conjugacy class per core node, encoded through the legs (markings) of a
/// supernova quiver.
struct DSInstance {
  std::string id;
  SupernovaQuiver snova;

  /// The core as a standalone monochromatic quiver plus its dimension vector.
  ColouredQuiver core_quiver() const;
  std::vector<int> core_dims() const;
  /// Prescribed class per core node.
  std::vector<ClassSpec> core_classes() const;
};

enum class DSVerdictKind { PredictedSolvable, PredictedUnsolvable, Undecided };

struct DSVerdict {
  DSVerdictKind kind = DSVerdictKind::Undecided;
  std::string certificate;
  std::vector<std::vector<int>> violating_decomposition;  // when applicable
};

struct DSCriterionOptions {
  double tol = 1e-10;       // float-mode equality threshold for q^alpha = 1
  long long max_decompositions = 2'000'000;  // enumeration guard
};

/// Root-theoretic test: d must be a positive root with q^d = 1 and every
/// nontrivial decomposition of d into positive roots with trivial parameter
/// products must lose dimension count.  Exact parameters give exact answers;
/// float parameters near the threshold yield Undecided.
DSVerdict ds_criterion(const DSInstance& inst, DSCriterionOptions opt = {});

struct DSBudget {
  int restarts = 20;
  int iterations = 200;
};

struct DSWitness {
  GraphRep rep;                  // on the core quiver
  std::vector<Mat> conjugators;  // class representatives g_i = k_i J_i k_i^{-1}
  double residual = 0.0;
  bool irreducible = false;
  bool classes_verified = false;
};

struct DSSearchResult {
  std::optional<DSWitness> witness;
  double best_residual = std::numeric_limits<double>::infinity();
};

/// Damped least-squares search for an irreducible invertible representation
/// whose big-cell diagonal lies in the prescribed classes.  Returning no
/// witness is not a refutation.
DSSearchResult ds_search(const DSInstance& inst, DSBudget budget, uint64_t seed);

class ConjectureCounterexampleError : public Error {
 public:
  ConjectureCounterexampleError(const std::string& what, std::string artifact)
      : Error(what), artifact(std::move(artifact)) {}
  std::string artifact;  // reproducible instance description
};

struct DSCrossRow {
  std::string id;
  DSVerdict verdict;
  bool witness_found = false;
  double residual = std::numeric_limits<double>::infinity();
  bool agreement = true;
  bool inconclusive = false;
};

/// Runs criterion and search on every instance.  A witness against a
/// predicted-unsolvable verdict would contradict the criterion and aborts
/// with a reproducible artifact.
std::vector<DSCrossRow> ds_cross_validate(const std::vector<DSInstance>& family, DSBudget budget,
                                          uint64_t seed);

}  // namespace mqv
