#include <sstream>

#include "doctest.h"
#include "mqv/representation.hpp"
#include "testutil.hpp"

using namespace mqv;

namespace {

ColouredQuiver interval() { return build_complete_kpartite({{"a"}, {"b"}}); }
ColouredQuiver triangle() { return build_complete_kpartite({{"a"}, {"b"}, {"c"}}); }

GraphRep interval_scalars(Cx x, Cx y) {
  GraphRep rep(interval(), {1, 1});
  rep.map(1, 0)(0, 0) = x;  // into the first node: upper
  rep.map(0, 1)(0, 0) = y;
  return rep;
}

}  // namespace

TEST_SUITE_BEGIN("representation");

TEST_CASE("unitriangular assembly") {
  GraphRep zero(interval(), {1, 1});
  auto [vp0, vm0] = assemble_unitriangular(zero, 0);
  CHECK((vp0 - Mat::Identity(2, 2)).norm() == 0);
  CHECK((vm0 - Mat::Identity(2, 2)).norm() == 0);

  auto rep = interval_scalars(Cx(2), Cx(3));
  auto [vp, vm] = assemble_unitriangular(rep, 0);
  CHECK(vp(0, 1) == Cx(2));
  CHECK(vm(1, 0) == Cx(3));

  // same-part blocks stay zero
  GraphRep sq(build_complete_kpartite({{"a", "b"}, {"c"}}), {1, 1, 1});
  for (auto& [k, m] : sq.maps) m.setConstant(Cx(1));
  auto [vps, vms] = assemble_unitriangular(sq, 0);
  CHECK(vps(0, 1) == Cx(0));
  CHECK(vms(1, 0) == Cx(0));

  auto r = testutil::rng(3);
  GraphRep tri = GraphRep::random(triangle(), {1, 1, 1}, r);
  auto [vpt, vmt] = assemble_unitriangular(tri, 0);
  CHECK(vpt(0, 2) == tri.map(2, 0)(0, 0));
  CHECK(vmt(2, 1) == tri.map(1, 2)(0, 0));
}

TEST_CASE("invertibility minors") {
  GraphRep zero(interval(), {2, 3});
  auto rep0 = invertibility_minors(zero, 0);
  for (Cx m : rep0.minors) CHECK(std::abs(m - Cx(1)) < 1e-14);

  auto rep = interval_scalars(Cx(2), Cx(3));
  auto mr = invertibility_minors(rep, 0);
  CHECK(std::abs(mr.minors[1] - Cx(7)) < 1e-14);  // trailing minor 1 + yx
  CHECK(std::abs(mr.minors[0] - Cx(1)) < 1e-14);  // full determinant

  auto r = testutil::rng(31);
  int nonzero = 0;
  for (int t = 0; t < 40; ++t) {
    GraphRep rr = GraphRep::random(triangle(), {1, 2, 1}, r);
    if (std::abs(invertibility_minors(rr, 0).product) > 1e-8) ++nonzero;
  }
  CHECK(nonzero >= 38);  // generic representations are invertible
}

TEST_CASE("big cell factorisation") {
  GraphRep zero(interval(), {2, 2});
  auto f0 = big_cell_factor(zero, 0);
  CHECK((f0.w_plus - Mat::Identity(4, 4)).norm() == 0);
  CHECK((f0.g_matrix() - Mat::Identity(4, 4)).norm() == 0);

  auto rep = interval_scalars(Cx(2), Cx(3));
  auto f = big_cell_factor(rep, 0);
  CHECK(std::abs(f.g[1](0, 0) - Cx(7)) < 1e-14);          // 1 + yx
  CHECK(std::abs(f.g[0](0, 0) - Cx(1.0 / 7.0)) < 1e-14);  // det 1 overall

  auto r = testutil::rng(37);
  for (int t = 0; t < 60; ++t) {
    std::vector<int> d{1 + int(r() % 3), 1 + int(r() % 3), 1 + int(r() % 3)};
    GraphRep rr = GraphRep::random(triangle(), d, r);
    BigCellFactors ff;
    try {
      ff = big_cell_factor(rr, 0);
    } catch (const NotInvertibleError&) {
      continue;
    }
    auto [vp, vm] = assemble_unitriangular(rr, 0);
    Mat prod = vm * vp;
    CHECK((prod - ff.w_plus * ff.g_matrix() * ff.w_minus).norm() < 1e-10 * mat_scale(prod));
    CHECK(std::abs(ff.g_matrix().determinant() - Cx(1)) < 1e-9);
  }

  // the failing node is reported
  auto sing = interval_scalars(Cx(1), Cx(-1));
  try {
    big_cell_factor(sing, 0);
    CHECK(false);
  } catch (const NotInvertibleError& e) {
    CHECK(e.colour == 0);
    CHECK(e.node == 1);  // trailing minor 1 + yx vanishes at the second node
  }
}

TEST_CASE("moment map") {
  GraphRep zero(triangle(), {1, 1, 1});
  auto m = moment_map(zero);
  for (const auto& mu : m.mu) CHECK((mu - Mat::Identity(1, 1)).norm() < 1e-14);
  CHECK(m.det_product_residual < 1e-14);

  // single colour: mu_i equals the diagonal factor
  auto rep = interval_scalars(Cx(2), Cx(3));
  auto mm = moment_map(rep);
  CHECK(std::abs(mm.mu[0](0, 0) - Cx(1.0 / 7.0)) < 1e-14);
  CHECK(std::abs(mm.mu[1](0, 0) - Cx(7)) < 1e-14);

  // two colours at a node: the declared cyclic order matters
  auto core = build_complete_kpartite({{"c"}, {"o1"}});
  Leg central, outer;
  central.dims = {2, 1};
  central.params = {QScalar::from_rational(2), QScalar::from_rational(3)};
  outer.dims = {2};
  outer.params = {QScalar::from_rational(5)};
  auto snova = attach_legs(core, {central, outer});
  auto r = testutil::rng(57);
  GraphRep rr = GraphRep::random(snova.quiver, snova.dim_vector(), r);
  auto m1 = moment_map(rr);
  ColouredQuiver flipped = snova.quiver;
  std::reverse(flipped.colour_order_at[0].begin(), flipped.colour_order_at[0].end());
  GraphRep rr2 = rr;
  rr2.quiver = flipped;
  auto m2 = moment_map(rr2);
  CHECK((m1.mu[0] - m2.mu[0]).norm() > 1e-6);  // products in opposite order differ
  CHECK(m1.det_product_residual < 1e-10);
}

TEST_CASE("fiber membership") {
  GraphRep zero(interval(), {1, 1});
  Params ones{QScalar::one(), QScalar::one()};
  CHECK(in_fiber(zero, ones));
  Params off{QScalar::from_rational(2), QScalar::from_rational(1, 2)};
  CHECK(!in_fiber(zero, off));

  // a genuine fiber point: 1 + xy = 1/t
  Cx t(2, 0);
  auto rep = interval_scalars(Cx(1), 1.0 / t - 1.0);
  Params q{QScalar(t), QScalar(1.0 / t)};
  CHECK(in_fiber(rep, q));
  // det-product constraint means q^d = 1 here
  CHECK(std::abs(q[0].v * q[1].v - Cx(1)) < 1e-14);
}

TEST_CASE("irreducibility against the subspace oracle") {
  // one node, dimension one: irreducible
  auto single = build_complete_kpartite({{"a"}});
  GraphRep s1(single, {1});
  CHECK(is_irreducible(s1));
  GraphRep s2(single, {2});
  CHECK(!is_irreducible(s2));

  GraphRep zero(interval(), {1, 1});
  CHECK(!is_irreducible(zero));
  CHECK(is_irreducible(interval_scalars(Cx(1), Cx(1))));

  // generic (2,2) interval representations are always reducible
  auto r = testutil::rng(43);
  for (int t = 0; t < 5; ++t) {
    GraphRep rr = GraphRep::random(interval(), {2, 2}, r);
    CHECK(!is_irreducible(rr));
    auto oracle = testutil::reducibility_oracle(rr, r);
    CHECK(oracle.reducible);
  }

  // random suite against the oracle
  std::vector<std::vector<int>> shapes{{1, 1}, {2, 1}, {2, 2}, {3, 1}, {1, 2, 1}, {1, 1, 1}};
  int checked = 0;
  for (int t = 0; t < 150; ++t) {
    auto& shape = shapes[t % shapes.size()];
    ColouredQuiver g = shape.size() == 2 ? interval() : triangle();
    GraphRep rr = GraphRep::random(g, shape, r);
    if (t % 3 == 0) {
      // sparse representations reach the reducible side more often
      for (auto& [k, m] : rr.maps)
        if (r() % 2 == 0) m.setZero();
    }
    bool fast = is_irreducible(rr);
    auto oracle = testutil::reducibility_oracle(rr, r);
    CHECK(fast == !oracle.reducible);
    ++checked;
  }
  CHECK(checked == 150);
}

TEST_CASE("subrepresentation closure keeps invertibility") {
  auto r = testutil::rng(47);
  int seen = 0;
  for (int t = 0; t < 60 && seen < 10; ++t) {
    GraphRep rr = GraphRep::random(interval(), {2, 2}, r);
    if (std::abs(invertibility_minors(rr, 0).product) < 1e-6) continue;
    auto oracle = testutil::reducibility_oracle(rr, r);
    if (!oracle.reducible) continue;
    GraphRep sub = restrict_rep(rr, oracle.bases);
    auto minors = invertibility_minors(sub, 0);
    CHECK(std::abs(minors.product) > 1e-8);
    ++seen;
  }
  CHECK(seen >= 10);
}

TEST_CASE("triangle invariants") {
  GraphRep zero(triangle(), {1, 1, 1});
  auto t0 = triangle_invariants(zero);
  CHECK(std::abs(t0.a) < 1e-14);
  CHECK(std::abs(t0.h1 - Cx(1)) < 1e-14);
  CHECK(t0.residual_rel1 < 1e-14);

  GraphRep ones(triangle(), {1, 1, 1});
  for (auto& [k, m] : ones.maps) m.setConstant(Cx(1));
  auto t1 = triangle_invariants(ones);
  CHECK(std::abs(t1.a - Cx(1)) < 1e-14);
  CHECK(std::abs(t1.p - Cx(1)) < 1e-14);
  CHECK(t1.residual_abc_pr < 1e-14);
  CHECK(t1.residual_rel1 < 1e-14);
  CHECK(t1.residual_rel2 < 1e-14);

  auto r = testutil::rng(53);
  for (int t = 0; t < 50; ++t) {
    GraphRep rr = GraphRep::random(triangle(), {1, 1, 1}, r);
    auto ti = triangle_invariants(rr);
    CHECK(ti.residual_abc_pr < 1e-12);
    CHECK(ti.residual_rel1 < 1e-12);
    CHECK(ti.residual_rel2 < 1e-12);
  }
}

TEST_CASE("quotient dimension probe") {
  // interval, generic q with q1 q2 = 1: expected dimension 0
  Cx t(2, 0);
  auto rep = interval_scalars(Cx(1), 1.0 / t - 1.0);
  CHECK(quotient_dimension_probe(rep) == 0);

  // a single node with d = 1 has no parameters at all
  auto single = build_complete_kpartite({{"a"}});
  GraphRep s1(single, {1});
  CHECK(quotient_dimension_probe(s1) == 0);
}

TEST_CASE("representation files round-trip") {
  auto r = testutil::rng(61);
  GraphRep rep = GraphRep::random(triangle(), {1, 2, 1}, r);
  std::string text = emit_rep(rep);
  std::istringstream in(text);
  GraphRep back = parse_rep(in, rep.quiver, rep.dims);
  for (const auto& [key, m] : rep.maps) CHECK((m - back.maps.at(key)).norm() < 1e-12);

  // missing maps default to zero
  std::istringstream empty("");
  GraphRep zero = parse_rep(empty, rep.quiver, rep.dims);
  for (const auto& [key, m] : zero.maps) CHECK(m.norm() == 0);

  // shape violations are rejected with the line number
  std::istringstream bad("map a b : (1,0) (2,0) (3,0)\n");
  CHECK_THROWS_AS(parse_rep(bad, rep.quiver, rep.dims), ParseError);
  std::istringstream unknown("map a zz : (1,0)\n");
  CHECK_THROWS_AS(parse_rep(unknown, rep.quiver, rep.dims), ParseError);
  std::istringstream nonedge("map a b : (1,0)\n");
  GraphRep rep2(build_complete_kpartite({{"a", "b"}, {"c"}}), {1, 1, 1});
  CHECK_THROWS_AS(parse_rep(nonedge, rep2.quiver, rep2.dims), ParseError);
}

TEST_CASE("two-part reorder transport preserves moments") {
  auto r = testutil::rng(59);
  for (int t = 0; t < 40; ++t) {
    auto g = build_complete_kpartite({{"a", "b"}, {"c"}});
    std::vector<int> dims{1 + int(r() % 2), 1 + int(r() % 2), 1 + int(r() % 2)};
    GraphRep rr = GraphRep::random(g, dims, r);
    GraphRep swapped;
    MomentValue m1;
    try {
      m1 = moment_map(rr);
      swapped = transport_part_swap(rr, 0);
    } catch (const NotInvertibleError&) {
      continue;
    }
    auto m2 = moment_map(swapped);
    for (int i = 0; i < g.node_count(); ++i)
      CHECK((m1.mu[i] - m2.mu[i]).norm() < 1e-9 * mat_scale(m1.mu[i]));
    // fiber membership and determinant multiset agree as a consequence
  }
}

TEST_SUITE_END();
