#include "mqv/kacmoody.hpp"

#include <algorithm>
#include <queue>
#include <set>

namespace mqv {

IntMat cartan_matrix(const ColouredQuiver& g) {
  for (const auto& e : g.edges)
    if (e.a == e.b) throw Error("cartan matrix undefined with edge loops");
  return 2 * IntMat::Identity(g.node_count(), g.node_count()) - g.adjacency();
}

long long bilinear_form(const RootVector& beta, const RootVector& delta, const IntMat& cartan) {
  if (int(beta.size()) != cartan.rows() || int(delta.size()) != cartan.rows())
    throw Error("bilinear form: index set mismatch");
  long long s = 0;
  for (int i = 0; i < cartan.rows(); ++i)
    for (int j = 0; j < cartan.cols(); ++j)
      s += (long long)beta[i] * cartan(i, j) * delta[j];
  return s;
}

long long bilinear_form(const RootVector& beta, const RootVector& delta, const ColouredQuiver& g) {
  return bilinear_form(beta, delta, cartan_matrix(g));
}

RootVector reflect_dimension(int i, const RootVector& d, const IntMat& cartan) {
  if (i < 0 || i >= cartan.rows()) throw Error("reflect_dimension: unknown node");
  if (int(d.size()) != cartan.rows()) throw Error("reflect_dimension: index set mismatch");
  long long pairing = 0;
  for (int j = 0; j < cartan.rows(); ++j) pairing += (long long)cartan(i, j) * d[j];
  RootVector out = d;
  out[i] -= int(pairing);
  return out;
}

RootVector reflect_dimension(int i, const RootVector& d, const ColouredQuiver& g) {
  return reflect_dimension(i, d, cartan_matrix(g));
}

Params reflect_parameters(int i, const Params& q, const IntMat& cartan) {
  if (i < 0 || i >= cartan.rows()) throw Error("reflect_parameters: unknown node");
  if (int(q.size()) != cartan.rows()) throw Error("reflect_parameters: index set mismatch");
  Params out = q;
  for (int j = 0; j < cartan.rows(); ++j)
    out[j] = q[i].pow(-cartan(i, j)) * q[j];
  return out;
}

Params reflect_parameters(int i, const Params& q, const ColouredQuiver& g) {
  return reflect_parameters(i, q, cartan_matrix(g));
}

QScalar param_power(const Params& q, const RootVector& beta) {
  if (q.size() != beta.size()) throw Error("param_power: index set mismatch");
  QScalar acc = QScalar::one();
  for (size_t i = 0; i < q.size(); ++i) acc = acc * q[i].pow(beta[i]);
  return acc;
}

bool RootClassification::contains(const RootVector& d) const {
  auto eq = [&](const RootVector& r) { return r == d; };
  return std::any_of(real_positive.begin(), real_positive.end(), eq) ||
         std::any_of(imaginary_positive.begin(), imaginary_positive.end(), eq);
}

bool in_fundamental_region(const RootVector& beta, const ColouredQuiver& g) {
  int n = g.node_count();
  bool nonzero = false;
  for (int i = 0; i < n; ++i) {
    if (beta[i] < 0) return false;
    if (beta[i] > 0) nonzero = true;
  }
  if (!nonzero) return false;
  IntMat c = cartan_matrix(g);
  for (int i = 0; i < n; ++i) {
    long long pairing = 0;
    for (int j = 0; j < n; ++j) pairing += (long long)c(i, j) * beta[j];
    if (pairing > 0) return false;
  }
  // connected support
  std::vector<int> support;
  for (int i = 0; i < n; ++i)
    if (beta[i] > 0) support.push_back(i);
  std::set<int> seen{support[0]};
  std::queue<int> work;
  work.push(support[0]);
  while (!work.empty()) {
    int v = work.front();
    work.pop();
    for (int u : support)
      if (!seen.count(u) && g.adjacent(u, v)) {
        seen.insert(u);
        work.push(u);
      }
  }
  return seen.size() == support.size();
}

namespace {

// Orbit closure under simple reflections inside the box [0, bound]^n,
// starting from the given seeds.  Only nonnegative vectors inside the box
// are retained; any positive root in the box is reachable this way since the
// height-lowering chain from it stays in the box.
std::set<RootVector> box_orbit(const std::vector<RootVector>& seeds, const IntMat& cartan,
                               int bound) {
  std::set<RootVector> seen;
  std::queue<RootVector> work;
  auto in_box = [&](const RootVector& v) {
    for (int x : v)
      if (x < 0 || x > bound) return false;
    return true;
  };
  for (const auto& s : seeds)
    if (in_box(s) && seen.insert(s).second) work.push(s);
  int n = cartan.rows();
  while (!work.empty()) {
    RootVector v = work.front();
    work.pop();
    for (int i = 0; i < n; ++i) {
      RootVector w = reflect_dimension(i, v, cartan);
      if (in_box(w) && seen.insert(w).second) work.push(w);
    }
  }
  return seen;
}

}  // namespace

RootClassification classify_roots(const ColouredQuiver& g, int bound) {
  if (bound < 1) throw Error("classify_roots: bound must be >= 1");
  int n = g.node_count();
  IntMat c = cartan_matrix(g);

  std::vector<RootVector> simples;
  for (int i = 0; i < n; ++i) {
    RootVector e(n, 0);
    e[i] = 1;
    simples.push_back(e);
  }

  std::vector<RootVector> fundamental;
  RootVector v(n, 0);
  for (;;) {
    if (in_fundamental_region(v, g)) fundamental.push_back(v);
    int k = 0;
    while (k < n && v[k] == bound) v[k++] = 0;
    if (k == n) break;
    ++v[k];
  }

  RootClassification out;
  for (const auto& r : box_orbit(simples, c, bound)) out.real_positive.push_back(r);
  auto imag = box_orbit(fundamental, c, bound);
  for (const auto& r : imag) out.imaginary_positive.push_back(r);
  // real and imaginary orbits are disjoint (form 2 vs <= 0), but keep the
  // sets clean if a degenerate graph ever made them meet
  auto is_imag = [&](const RootVector& r) { return imag.count(r) > 0; };
  out.real_positive.erase(
      std::remove_if(out.real_positive.begin(), out.real_positive.end(), is_imag),
      out.real_positive.end());
  return out;
}

bool is_positive_root(const RootVector& d, const ColouredQuiver& g) {
  int bound = 0;
  for (int x : d) {
    if (x < 0) return false;
    bound = std::max(bound, x);
  }
  if (bound == 0) return false;
  return classify_roots(g, bound).contains(d);
}

std::vector<RootVector> genericity_set(const RootVector& d, const ColouredQuiver& g) {
  int n = g.node_count();
  if (int(d.size()) != n) throw Error("genericity_set: index set mismatch");
  for (int x : d)
    if (x < 0) throw Error("genericity_set: d must be nonnegative");
  std::vector<RootVector> out;
  RootVector a(n, 0);
  for (;;) {
    bool all_zero = true, equals_d = true;
    for (int i = 0; i < n; ++i) {
      if (a[i] != 0) all_zero = false;
      if (a[i] != d[i]) equals_d = false;
    }
    if (!all_zero && !equals_d && bilinear_form(a, a, g) <= 2) out.push_back(a);
    int k = 0;
    while (k < n && a[k] == d[k]) a[k++] = 0;
    if (k == n) break;
    ++a[k];
  }
  return out;
}

GenericityReport is_generic(const Params& q, const RootVector& d, const ColouredQuiver& g,
                            double tol) {
  GenericityReport rep;
  for (const auto& alpha : genericity_set(d, g)) {
    QScalar p = param_power(q, alpha);
    if (p.is_exact()) {
      if (p.exact->is_one()) {
        rep.generic = false;
        rep.witness = alpha;
        return rep;
      }
    } else {
      double dist = std::abs(p.v - Cx(1.0));
      if (dist < tol) {
        rep.generic = false;
        rep.witness = alpha;
        return rep;
      }
      if (dist < 10 * tol) rep.undecided = true;
    }
  }
  return rep;
}

long long expected_dimension(const RootVector& d, const ColouredQuiver& g) {
  return 2 - bilinear_form(d, d, g);
}

}  // namespace mqv
