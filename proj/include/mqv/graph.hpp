#pragma once

#include <iosfwd>
#include <map>
#include <set>

#include "mqv/common.hpp"

namespace mqv {

/// A graph with coloured edges such that every monochromatic subgraph is a
/// complete k-partite graph, carrying the orderings needed to form
/// block-triangular matrices: ordered parts with ordered nodes per colour,
/// and a cyclic colour order at each node.
class ColouredQuiver {
 public:
  struct Edge {
    int a, b;             // endpoint node indices, a != b
    int colour;           // index into colour_names
    int multiplicity = 1; // simply-laced scope: anything else is rejected
  };

  struct ColourClass {
    // parts in order; each part lists node indices in order
    std::vector<std::vector<int>> parts;
    std::vector<int> node_order() const {
      std::vector<int> out;
      for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
      return out;
    }
    int part_of(int node) const {
      for (int j = 0; j < int(parts.size()); ++j)
        for (int n : parts[j])
          if (n == node) return j;
      return -1;
    }
  };

  std::vector<std::string> node_names;
  std::vector<std::string> colour_names;
  std::vector<Edge> edges;
  std::vector<ColourClass> colours;                 // per colour
  std::vector<std::vector<int>> colour_order_at;    // per node: cyclic colour order

  int node_count() const { return int(node_names.size()); }
  int colour_count() const { return int(colour_names.size()); }
  int node_index(const std::string& name) const;
  int add_node(const std::string& name);

  /// Number of edges between two nodes (0 or 1 in the simply-laced scope).
  int edge_multiplicity(int a, int b) const;
  bool adjacent(int a, int b) const { return edge_multiplicity(a, b) > 0; }

  /// Validates all structural invariants; throws Error on violation.
  void validate() const;

  /// Adjacency matrix (edge counts).
  IntMat adjacency() const;
};

/// Builds a monochromatic complete k-partite quiver from ordered parts of
/// node names.  Parts must be nonempty and disjoint.
ColouredQuiver build_complete_kpartite(const std::vector<std::vector<std::string>>& parts,
                                       const std::string& colour_name = "core");

/// An irregular type of pole order three: leading coefficient A constant on
/// each part, second coefficient T constant on each node, with eigenspace
/// dimensions per node.
struct IrregularType {
  struct Node {
    std::string name;
    Cx t_eig;
    int dim = 1;
  };
  struct Part {
    Cx a_eig;
    std::vector<Node> nodes;
  };
  std::vector<Part> parts;

  void validate() const;
};

/// Fission graph of an irregular type: nodes are the simultaneous
/// eigenspaces, parts are the A-eigenspaces, and two nodes in different
/// parts are joined by a single edge.
ColouredQuiver fission_graph(const IrregularType& q);

/// Type-A leg data: weakly positive dimensions (first entry sits on the core
/// node) and one nonzero parameter per node.
struct Leg {
  std::vector<int> dims;
  std::vector<QScalar> params;

  int length() const { return int(dims.size()) - 1; }  // number of edges
  void validate() const;
  /// Cumulative products q_1*...*q_i (the annihilating roots of the class
  /// the leg encodes).
  std::vector<QScalar> marking() const;
};

/// A supernova quiver: complete k-partite monochromatic core with a leg glued
/// to each core node.  Keeps the leg data (dims and parameters) so the full
/// (q, d) vectors over all nodes are available.
struct SupernovaQuiver {
  ColouredQuiver quiver;
  int core_colour = 0;
  std::vector<int> core_nodes;
  std::vector<std::vector<int>> leg_nodes;  // per core node, leg_nodes[i][0] == core_nodes[i]
  std::vector<Leg> legs;                    // per core node

  std::vector<int> dim_vector() const;
  std::vector<QScalar> param_vector() const;
  /// Index of the core node owning the given quiver node, and its depth
  /// (0-based) down the leg.
  std::pair<int, int> locate(int node) const;
  /// q^d over all nodes.
  QScalar q_to_the_d() const;
  void validate() const;
};

/// Glues one leg per core node onto a complete k-partite core.  Leg edges
/// consume fresh colours; interior leg nodes are named "<core>.k".
SupernovaQuiver attach_legs(const ColouredQuiver& core, const std::vector<Leg>& legs);

// ---------------------------------------------------------------------------
// Graph-spec text format (see README for the grammar).

struct GraphSpec {
  SupernovaQuiver snova;
  bool has_legs = false;  // false when the file declared a bare quiver
  ColouredQuiver bare;    // used when has_legs is false
  std::map<std::string, int> explicit_dims;
  std::map<std::string, QScalar> explicit_params;

  const ColouredQuiver& quiver() const { return has_legs ? snova.quiver : bare; }
};

GraphSpec parse_graph_spec(std::istream& in);
GraphSpec parse_graph_spec_file(const std::string& path);
std::string emit_graph_spec(const GraphSpec& spec);

/// Parses a scalar token: rational "3/2", "-2", decimal "1.25", root of
/// unity "e(1/3)", product "3/2*e(1/6)", or complex "(re,im)".
QScalar parse_scalar(const std::string& token);

IrregularType parse_irregular_type_file(const std::string& path);

}  // namespace mqv
