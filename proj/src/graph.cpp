#include "mqv/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mqv {

int ColouredQuiver::node_index(const std::string& name) const {
  for (int i = 0; i < int(node_names.size()); ++i)
    if (node_names[i] == name) return i;
  throw Error("unknown node '" + name + "'");
}

int ColouredQuiver::add_node(const std::string& name) {
  for (const auto& n : node_names)
    if (n == name) throw Error("duplicate node '" + name + "'");
  node_names.push_back(name);
  colour_order_at.emplace_back();
  return int(node_names.size()) - 1;
}

int ColouredQuiver::edge_multiplicity(int a, int b) const {
  int m = 0;
  for (const auto& e : edges)
    if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) ++m;
  return m;
}

IntMat ColouredQuiver::adjacency() const {
  int n = node_count();
  IntMat a = IntMat::Zero(n, n);
  for (const auto& e : edges) {
    a(e.a, e.b) += 1;
    a(e.b, e.a) += 1;
  }
  return a;
}

void ColouredQuiver::validate() const {
  int n = node_count();
  if (int(colour_order_at.size()) != n) throw Error("colour order table size mismatch");
  for (const auto& e : edges) {
    if (e.a == e.b) throw Error("edge loop at node " + node_names[e.a]);
    if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n) throw Error("edge endpoint out of range");
    if (e.colour < 0 || e.colour >= colour_count()) throw Error("edge colour out of range");
    if (e.multiplicity != 1)
      throw Error("edge multiplicities other than 1 are outside the simply-laced scope");
  }
  if (int(colours.size()) != colour_count()) throw Error("colour class table size mismatch");

  for (int c = 0; c < colour_count(); ++c) {
    const auto& cls = colours[c];
    std::set<int> seen;
    for (const auto& part : cls.parts) {
      if (part.empty()) throw Error("empty part in colour " + colour_names[c]);
      for (int v : part)
        if (!seen.insert(v).second)
          throw Error("node repeated in ordering of colour " + colour_names[c]);
    }
    // the monochromatic subgraph must be exactly the complete k-partite graph
    // of the declared partition
    std::vector<int> nodes = cls.node_order();
    for (size_t i = 0; i < nodes.size(); ++i)
      for (size_t j = i + 1; j < nodes.size(); ++j) {
        int mult = 0;
        for (const auto& e : edges)
          if (e.colour == c && ((e.a == nodes[i] && e.b == nodes[j]) ||
                                (e.a == nodes[j] && e.b == nodes[i])))
            ++mult;
        bool same_part = cls.part_of(nodes[i]) == cls.part_of(nodes[j]);
        int want = same_part ? 0 : 1;
        if (mult != want)
          throw Error("colour " + colour_names[c] + " is not the declared complete " +
                      "k-partite graph between " + node_names[nodes[i]] + " and " +
                      node_names[nodes[j]]);
      }
    for (const auto& e : edges)
      if (e.colour == c) {
        if (cls.part_of(e.a) < 0 || cls.part_of(e.b) < 0)
          throw Error("edge of colour " + colour_names[c] + " touches a node missing from its ordering");
      }
    // complete k-partite graphs with k >= 2 are connected; the k = 1 classes
    // (no edges) are the edgeless graphs and stay legal
  }

  for (int i = 0; i < n; ++i) {
    std::set<int> member;
    for (int c = 0; c < colour_count(); ++c)
      if (colours[c].part_of(i) >= 0) member.insert(c);
    std::set<int> declared(colour_order_at[i].begin(), colour_order_at[i].end());
    if (declared.size() != colour_order_at[i].size())
      throw Error("colour repeated in the order at node " + node_names[i]);
    if (member != declared)
      throw Error("colour order at node " + node_names[i] + " does not match its colours");
  }
}

ColouredQuiver build_complete_kpartite(const std::vector<std::vector<std::string>>& parts,
                                       const std::string& colour_name) {
  ColouredQuiver q;
  q.colour_names.push_back(colour_name);
  ColouredQuiver::ColourClass cls;
  for (const auto& part : parts) {
    if (part.empty()) throw Error("invalid partition: empty part");
    std::vector<int> idx;
    for (const auto& name : part) idx.push_back(q.add_node(name));
    cls.parts.push_back(idx);
  }
  q.colours.push_back(cls);
  int n = q.node_count();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (cls.part_of(i) != cls.part_of(j)) q.edges.push_back({i, j, 0});
  for (int i = 0; i < n; ++i) q.colour_order_at[i] = {0};
  q.validate();
  return q;
}

void IrregularType::validate() const {
  std::vector<Cx> a_eigs;
  for (const auto& p : parts) {
    for (const auto& prev : a_eigs)
      if (std::abs(prev - p.a_eig) < 1e-12)
        throw Error("invalid irregular type: repeated leading eigenvalue");
    a_eigs.push_back(p.a_eig);
    if (p.nodes.empty()) throw Error("invalid irregular type: empty part");
    for (size_t i = 0; i < p.nodes.size(); ++i) {
      if (p.nodes[i].dim < 0) throw Error("invalid irregular type: negative dimension");
      for (size_t j = i + 1; j < p.nodes.size(); ++j)
        if (std::abs(p.nodes[i].t_eig - p.nodes[j].t_eig) < 1e-12)
          throw Error("invalid irregular type: repeated T eigenvalue within a part");
    }
  }
}

ColouredQuiver fission_graph(const IrregularType& q) {
  q.validate();
  std::vector<std::vector<std::string>> parts;
  for (const auto& p : q.parts) {
    std::vector<std::string> names;
    for (const auto& n : p.nodes) names.push_back(n.name);
    parts.push_back(names);
  }
  return build_complete_kpartite(parts);
}

void Leg::validate() const {
  if (dims.empty()) throw Error("leg with no nodes");
  if (dims.size() != params.size()) throw Error("leg dims/params length mismatch");
  for (int d : dims)
    if (d < 0) throw Error("negative leg dimension");
  for (const auto& p : params)
    if (std::abs(p.v) == 0.0) throw Error("zero leg parameter");
}

std::vector<QScalar> Leg::marking() const {
  std::vector<QScalar> xi;
  QScalar acc = QScalar::one();
  for (const auto& p : params) {
    acc = acc * p;
    xi.push_back(acc);
  }
  return xi;
}

std::vector<int> SupernovaQuiver::dim_vector() const {
  std::vector<int> d(quiver.node_count(), 0);
  for (size_t l = 0; l < legs.size(); ++l)
    for (size_t k = 0; k < leg_nodes[l].size(); ++k) d[leg_nodes[l][k]] = legs[l].dims[k];
  return d;
}

std::vector<QScalar> SupernovaQuiver::param_vector() const {
  std::vector<QScalar> q(quiver.node_count(), QScalar::one());
  for (size_t l = 0; l < legs.size(); ++l)
    for (size_t k = 0; k < leg_nodes[l].size(); ++k) q[leg_nodes[l][k]] = legs[l].params[k];
  return q;
}

std::pair<int, int> SupernovaQuiver::locate(int node) const {
  for (size_t l = 0; l < leg_nodes.size(); ++l)
    for (size_t k = 0; k < leg_nodes[l].size(); ++k)
      if (leg_nodes[l][k] == node) return {int(l), int(k)};
  throw Error("node not part of the supernova structure");
}

QScalar SupernovaQuiver::q_to_the_d() const {
  auto d = dim_vector();
  auto q = param_vector();
  QScalar acc = QScalar::one();
  for (size_t i = 0; i < q.size(); ++i) acc = acc * q[i].pow(d[i]);
  return acc;
}

void SupernovaQuiver::validate() const {
  quiver.validate();
  if (core_nodes.size() != legs.size() || core_nodes.size() != leg_nodes.size())
    throw Error("supernova leg tables inconsistent");
  for (size_t l = 0; l < legs.size(); ++l) {
    legs[l].validate();
    if (leg_nodes[l].size() != legs[l].dims.size()) throw Error("leg node list length mismatch");
    if (leg_nodes[l][0] != core_nodes[l]) throw Error("leg does not start at its core node");
  }
}

SupernovaQuiver attach_legs(const ColouredQuiver& core, const std::vector<Leg>& legs) {
  core.validate();
  if (core.colour_count() != 1) throw Error("attach_legs expects a monochromatic core");
  if (int(legs.size()) != core.node_count()) throw Error("one leg per core node required");

  SupernovaQuiver s;
  s.quiver = core;
  s.core_colour = 0;
  for (int i = 0; i < core.node_count(); ++i) s.core_nodes.push_back(i);
  s.legs = legs;
  s.leg_nodes.resize(legs.size());

  for (int i = 0; i < core.node_count(); ++i) {
    legs[i].validate();
    s.leg_nodes[i].push_back(i);
    int prev = i;
    for (int k = 1; k < int(legs[i].dims.size()); ++k) {
      int fresh = s.quiver.add_node(core.node_names[i] + "." + std::to_string(k + 1));
      int colour = int(s.quiver.colour_names.size());
      s.quiver.colour_names.push_back("leg:" + core.node_names[i] + ":" + std::to_string(k));
      ColouredQuiver::ColourClass cls;
      cls.parts = {{prev}, {fresh}};
      s.quiver.colours.push_back(cls);
      s.quiver.edges.push_back({prev, fresh, colour});
      s.quiver.colour_order_at[prev].push_back(colour);
      s.quiver.colour_order_at[fresh].push_back(colour);
      s.leg_nodes[i].push_back(fresh);
      prev = fresh;
    }
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Parsing.

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

Rational parse_rational(const std::string& s, bool* ok) {
  *ok = false;
  long long num = 0, den = 1;
  size_t slash = s.find('/');
  try {
    size_t used = 0;
    std::string head = slash == std::string::npos ? s : s.substr(0, slash);
    num = std::stoll(head, &used);
    if (used != head.size()) return {};
    if (slash != std::string::npos) {
      std::string tail = s.substr(slash + 1);
      den = std::stoll(tail, &used);
      if (used != tail.size() || den == 0) return {};
    }
  } catch (...) {
    return {};
  }
  *ok = true;
  return Rational(num, den);
}

}  // namespace

QScalar parse_scalar(const std::string& token) {
  // complex pair "(re,im)"
  if (!token.empty() && token.front() == '(') {
    size_t comma = token.find(',');
    if (comma == std::string::npos || token.back() != ')')
      throw Error("bad complex literal '" + token + "'");
    double re = std::stod(token.substr(1, comma - 1));
    double im = std::stod(token.substr(comma + 1, token.size() - comma - 2));
    return QScalar(Cx(re, im));
  }
  // optional "R*e(T)" product
  std::string head = token, tail;
  size_t star = token.find("*e(");
  if (star != std::string::npos) {
    head = token.substr(0, star);
    tail = token.substr(star + 1);
  } else if (token.rfind("e(", 0) == 0) {
    head = "1";
    tail = token;
  }
  ExactScalar e = ExactScalar::one();
  bool exact = true;
  double approx = 1.0;
  if (!head.empty()) {
    bool ok = false;
    Rational r = parse_rational(head, &ok);
    if (ok) {
      e = ExactScalar::from_rational(r);
      approx = r.value();
    } else {
      exact = false;
      approx = std::stod(head);
    }
  }
  if (!tail.empty()) {
    if (tail.back() != ')') throw Error("bad scalar literal '" + token + "'");
    bool ok = false;
    Rational t = parse_rational(tail.substr(2, tail.size() - 3), &ok);
    if (!ok) throw Error("bad root-of-unity literal '" + token + "'");
    ExactScalar phase{Rational(1), t.mod1()};
    e = e * phase;
    if (!exact) return QScalar(approx * phase.value());
  }
  if (exact) return QScalar(e);
  return QScalar(Cx(approx, 0.0));
}

GraphSpec parse_graph_spec(std::istream& in) {
  GraphSpec spec;
  ColouredQuiver q;
  struct LegLine {
    std::string node;
    Leg leg;
    int line;
  };
  std::vector<LegLine> leg_lines;
  std::string line;
  int lineno = 0;
  bool saw_nodes = false;

  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto tok = tokenize(line);
    if (tok.empty()) continue;

    if (tok[0] == "nodes") {
      if (saw_nodes) throw ParseError("duplicate nodes line", lineno);
      saw_nodes = true;
      for (size_t i = 1; i < tok.size(); ++i) q.add_node(tok[i]);
    } else if (tok[0] == "colour" || tok[0] == "color") {
      if (tok.size() < 3 || tok[2] != ":") throw ParseError("expected 'colour <name> : ...'", lineno);
      int c = int(q.colour_names.size());
      q.colour_names.push_back(tok[1]);
      ColouredQuiver::ColourClass cls;
      std::vector<int> part;
      for (size_t i = 3; i < tok.size(); ++i) {
        if (tok[i] == "|") {
          if (part.empty()) throw ParseError("empty part", lineno);
          cls.parts.push_back(part);
          part.clear();
        } else {
          try {
            part.push_back(q.node_index(tok[i]));
          } catch (const Error& e) {
            throw ParseError(e.what(), lineno);
          }
        }
      }
      if (part.empty()) throw ParseError("empty part", lineno);
      cls.parts.push_back(part);
      q.colours.push_back(cls);
      auto nodes = cls.node_order();
      for (size_t i = 0; i < nodes.size(); ++i) {
        for (size_t j = i + 1; j < nodes.size(); ++j)
          if (cls.part_of(nodes[i]) != cls.part_of(nodes[j]))
            q.edges.push_back({nodes[i], nodes[j], c});
        q.colour_order_at[nodes[i]].push_back(c);
      }
    } else if (tok[0] == "leg") {
      if (tok.size() < 3 || tok[2] != ":") throw ParseError("expected 'leg <node> : dims ... ; params ...'", lineno);
      LegLine ll;
      ll.node = tok[1];
      ll.line = lineno;
      size_t i = 3;
      if (i >= tok.size() || tok[i] != "dims") throw ParseError("expected 'dims'", lineno);
      ++i;
      for (; i < tok.size() && tok[i] != ";"; ++i) ll.leg.dims.push_back(std::stoi(tok[i]));
      if (i >= tok.size()) throw ParseError("expected ';' then 'params'", lineno);
      ++i;
      if (i >= tok.size() || tok[i] != "params") throw ParseError("expected 'params'", lineno);
      ++i;
      for (; i < tok.size(); ++i) {
        try {
          ll.leg.params.push_back(parse_scalar(tok[i]));
        } catch (const Error& e) {
          throw ParseError(e.what(), lineno);
        }
      }
      if (ll.leg.dims.size() != ll.leg.params.size())
        throw ParseError("leg dims/params length mismatch", lineno);
      leg_lines.push_back(ll);
    } else if (tok[0] == "dim") {
      if (tok.size() != 3) throw ParseError("expected 'dim <node> <int>'", lineno);
      spec.explicit_dims[tok[1]] = std::stoi(tok[2]);
    } else if (tok[0] == "param") {
      if (tok.size() != 3) throw ParseError("expected 'param <node> <scalar>'", lineno);
      try {
        spec.explicit_params.emplace(tok[1], parse_scalar(tok[2]));
      } catch (const Error& e) {
        throw ParseError(e.what(), lineno);
      }
    } else {
      throw ParseError("unknown directive '" + tok[0] + "'", lineno);
    }
  }
  if (!saw_nodes) throw ParseError("missing nodes line", 0);

  try {
    if (!leg_lines.empty()) {
      if (q.colour_count() != 1)
        throw Error("legs require a single monochromatic core colour");
      std::vector<Leg> legs(q.node_count());
      std::vector<bool> have(q.node_count(), false);
      for (const auto& ll : leg_lines) {
        int i = q.node_index(ll.node);
        if (have[i]) throw Error("duplicate leg for node " + ll.node);
        have[i] = true;
        legs[i] = ll.leg;
      }
      for (int i = 0; i < q.node_count(); ++i)
        if (!have[i]) throw Error("missing leg for node " + q.node_names[i]);
      spec.snova = attach_legs(q, legs);
      spec.has_legs = true;
    } else {
      q.validate();
      spec.bare = q;
      spec.has_legs = false;
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), lineno);
  }
  return spec;
}

GraphSpec parse_graph_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_graph_spec(in);
}

namespace {

std::string scalar_token(const QScalar& s) {
  if (s.exact) {
    const auto& e = *s.exact;
    std::ostringstream os;
    os << e.modulus.num;
    if (e.modulus.den != 1) os << "/" << e.modulus.den;
    if (!e.turn.is_zero()) os << "*e(" << e.turn.num << "/" << e.turn.den << ")";
    return os.str();
  }
  return format_cx(s.v);
}

}  // namespace

std::string emit_graph_spec(const GraphSpec& spec) {
  const ColouredQuiver& q = spec.quiver();
  std::ostringstream os;
  os << "nodes";
  int nbase = spec.has_legs ? int(spec.snova.core_nodes.size()) : q.node_count();
  for (int i = 0; i < nbase; ++i) os << " " << q.node_names[i];
  os << "\n";
  int ncol = spec.has_legs ? 1 : q.colour_count();
  for (int c = 0; c < ncol; ++c) {
    os << "colour " << q.colour_names[c] << " :";
    const auto& cls = q.colours[c];
    for (size_t p = 0; p < cls.parts.size(); ++p) {
      if (p) os << " |";
      for (int v : cls.parts[p]) os << " " << q.node_names[v];
    }
    os << "\n";
  }
  if (spec.has_legs) {
    for (size_t l = 0; l < spec.snova.legs.size(); ++l) {
      const Leg& leg = spec.snova.legs[l];
      os << "leg " << q.node_names[spec.snova.core_nodes[l]] << " : dims";
      for (int d : leg.dims) os << " " << d;
      os << " ; params";
      for (const auto& p : leg.params) os << " " << scalar_token(p);
      os << "\n";
    }
  }
  for (const auto& [name, d] : spec.explicit_dims) os << "dim " << name << " " << d << "\n";
  for (const auto& [name, p] : spec.explicit_params)
    os << "param " << name << " " << scalar_token(p) << "\n";
  return os.str();
}

IrregularType parse_irregular_type_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  IrregularType q;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto tok = tokenize(line);
    if (tok.empty()) continue;
    if (tok[0] != "part" || tok.size() < 3 || tok[2] != ":")
      throw ParseError("expected 'part <a-eig> : node <name> <t-eig> dim <d> ; ...'", lineno);
    IrregularType::Part part;
    part.a_eig = parse_scalar(tok[1]).v;
    size_t i = 3;
    while (i < tok.size()) {
      if (tok[i] == ";") {
        ++i;
        continue;
      }
      if (tok[i] != "node" || i + 4 >= tok.size() || tok[i + 3] != "dim")
        throw ParseError("expected 'node <name> <t-eig> dim <d>'", lineno);
      IrregularType::Node n;
      n.name = tok[i + 1];
      n.t_eig = parse_scalar(tok[i + 2]).v;
      n.dim = std::stoi(tok[i + 4]);
      part.nodes.push_back(n);
      i += 5;
    }
    q.parts.push_back(part);
  }
  q.validate();
  return q;
}

}  // namespace mqv
