#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hysim/hybrid_time.hpp"
#include "hysim/random.hpp"

using namespace hysim;

namespace {

Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x << v;
  return x;
}

HybridTimeDomain two_phase() { return HybridTimeDomain({{0.0, 1.0}, {1.0, 2.0}}); }

HybridTimeDomain random_domain(Rng& rng) {
  std::vector<HybridTimeDomain::Phase> phases;
  double t = 0.0;
  const int n = rng.uniform_int(1, 6);
  for (int j = 0; j < n; ++j) {
    const double len = rng.uniform01() < 0.25 ? 0.0 : rng.uniform(0.0, 3.0);
    phases.push_back({t, t + len});
    t += len;
  }
  return HybridTimeDomain(phases);
}

}  // namespace

TEST_CASE("sup and length") {
  auto d = two_phase();
  CHECK(sup_t(d) == 2.0);
  CHECK(sup_j(d) == 1.0);
  CHECK(length(d) == 3.0);

  HybridTimeDomain point({{0.0, 0.0}});
  CHECK(length(point) == 0.0);

  HybridTimeDomain complete({{0.0, 1.0}}, /*complete=*/true);
  CHECK(std::isinf(length(complete)));
}

TEST_CASE("domain validity") {
  CHECK_THROWS_AS(HybridTimeDomain({{1.0, 2.0}}), HybridTimeError);          // t_start(0) != 0
  CHECK_THROWS_AS(HybridTimeDomain({{0.0, 1.0}, {1.5, 2.0}}), HybridTimeError);
  CHECK_THROWS_AS(HybridTimeDomain({{0.0, -1.0}}), HybridTimeError);
  CHECK(domain_is_valid(two_phase()));
}

TEST_CASE("hybrid ordering compares sums, not lexicographic") {
  CHECK(hybrid_leq({1.0, 0}, {0.0, 1}));
  CHECK(hybrid_leq({0.0, 1}, {1.0, 0}));  // both directions: equal sums
  CHECK(hybrid_leq({0.0, 0}, {1.0, 2}));
  CHECK_FALSE(hybrid_leq({3.0, 1}, {1.0, 1}));
  // the bookkeeping order distinguishes what the paper order identifies
  CHECK(lexicographic_leq({1.0, 0}, {0.0, 1}));
  CHECK_FALSE(lexicographic_leq({0.0, 1}, {1.0, 0}));
}

TEST_CASE("hybrid_leq is a total preorder on random point sets") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<HybridPoint> pts;
    for (int i = 0; i < 8; ++i)
      pts.push_back({rng.uniform(0.0, 4.0), rng.uniform_int(0, 4)});
    for (const auto& a : pts) {
      CHECK(hybrid_leq(a, a));  // reflexive
      for (const auto& b : pts) {
        CHECK((hybrid_leq(a, b) || hybrid_leq(b, a)));  // total
        for (const auto& c : pts)
          if (hybrid_leq(a, b) && hybrid_leq(b, c)) CHECK(hybrid_leq(a, c));  // transitive
      }
    }
  }
}

TEST_CASE("index_at") {
  auto d = two_phase();
  CHECK(index_at(d, 1.0) == 1);   // max over {0, 1}
  CHECK(index_at(d, 0.5) == 0);
  CHECK_THROWS_AS(index_at(d, 2.5), HybridTimeError);
}

TEST_CASE("index_at is nondecreasing in s") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto d = random_domain(rng);
    int prev = 0;
    const double T = sup_t(d);
    for (int k = 0; k <= 40; ++k) {
      const int i = index_at(d, T * k / 40.0);
      CHECK(i >= prev);
      prev = i;
    }
  }
}

TEST_CASE("jump_times") {
  CHECK(jump_times(two_phase()).size() == 1);
  CHECK(jump_times(two_phase())[0].t == 1.0);
  CHECK(jump_times(two_phase())[0].j == 0);
  CHECK(jump_times(HybridTimeDomain({{0.0, 2.0}})).empty());

  // instantaneous double jump at t = 1
  HybridTimeDomain dd({{0.0, 1.0}, {1.0, 1.0}, {1.0, 3.0}});
  auto g = jump_times(dd);
  REQUIRE(g.size() == 2);
  CHECK(g[0].t == 1.0);
  CHECK(g[0].j == 0);
  CHECK(g[1].t == 1.0);
  CHECK(g[1].j == 1);
}

TEST_CASE("jump count equals phases minus one on random domains") {
  Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    auto d = random_domain(rng);
    CHECK(static_cast<int>(jump_times(d).size()) == d.num_phases() - 1);
  }
}

TEST_CASE("slice_window") {
  HybridTimeDomain flat({{0.0, 2.0}});
  auto w = slice_window(flat, 1.0);
  REQUIRE(w.size() == 2);
  CHECK(w[0].t == 0.0);
  CHECK(w[1].t == 1.0);

  HybridTimeDomain dd({{0.0, 1.0}, {1.0, 1.0}, {1.0, 3.0}});
  auto w3 = slice_window(dd, 3.0);  // t + j in [2, 3]
  bool has_12 = false;
  for (const auto& p : w3)
    if (p.j == 2 && p.t == 1.0) has_12 = true;
  CHECK(has_12);

  CHECK_THROWS_AS(slice_window(flat, 3.5), HybridTimeError);  // beyond length + 1
  CHECK_THROWS_AS(slice_window(flat, 0.5), HybridTimeError);
}

TEST_CASE("slice_window nonempty across its whole range (paper claim)") {
  Rng rng(13);
  for (int trial = 0; trial < 60; ++trial) {
    auto d = random_domain(rng);
    const double len = length(d);
    if (len == 0.0) continue;
    for (int k = 0; k < 20; ++k) {
      const double r = 1.0 + (len + 1.0 - 1.0 - 1e-9) * k / 19.0;
      CAPTURE(r);
      CHECK_FALSE(slice_window(d, r).empty());
    }
  }
}

TEST_CASE("arc interpolation and validity") {
  HybridArc arc(two_phase(), 1);
  arc.append_sample(0, 0.0, vec1(0.0));
  arc.append_sample(0, 1.0, vec1(2.0));
  arc.append_sample(1, 1.0, vec1(5.0));
  arc.append_sample(1, 2.0, vec1(6.0));
  CHECK_NOTHROW(validate_arc(arc));
  CHECK(arc.value({0.5, 0})[0] == doctest::Approx(1.0));
  CHECK(arc.value({1.0, 0})[0] == 2.0);  // pre-jump value
  CHECK(arc.value({1.0, 1})[0] == 5.0);  // post-jump value
  CHECK_THROWS_AS(arc.value({0.5, 1}), HybridTimeError);

  HybridArc bad(two_phase(), 1);
  bad.append_sample(0, 0.0, vec1(0.0));
  CHECK_THROWS_AS(validate_arc(bad), HybridTimeError);  // does not span the phase
}

TEST_CASE("input schedule evaluation and jump value") {
  HybridInput u(two_phase(), 1);
  HybridInput::PhaseSchedule s0;
  s0.switch_offsets = {0.5};
  s0.levels = {vec1(1.0), vec1(3.0)};
  s0.jump_value = vec1(-2.0);
  u.set_phase_schedule(0, s0);
  CHECK(u.value({0.25, 0})[0] == 1.0);
  CHECK(u.value({0.5, 0})[0] == 3.0);  // right-continuous at the switch
  CHECK(u.value({0.9, 0})[0] == 3.0);
  CHECK(u.value_at_jump(0)[0] == -2.0);
  CHECK(u.value({1.5, 1})[0] == 0.0);  // default zero level
  CHECK_FALSE(u.identically_zero());
  CHECK(HybridInput::zero(two_phase(), 1).identically_zero());
}

TEST_CASE("concat_inputs merges flow at the junction") {
  // u on [0,1] x {0}, u2 on [0,1] x {0}: flow-flow concatenation
  HybridInput u(HybridTimeDomain({{0.0, 1.0}}), 1);
  HybridInput::PhaseSchedule su;
  su.levels = {vec1(2.0)};
  u.set_phase_schedule(0, su);

  HybridInput u2(HybridTimeDomain({{0.0, 1.0}}), 1);
  HybridInput::PhaseSchedule s2;
  s2.switch_offsets = {0.5};
  s2.levels = {vec1(-1.0), vec1(4.0)};
  u2.set_phase_schedule(0, s2);

  auto cat = concat_inputs(u, u2, {1.0, 0});
  CHECK(cat.domain().num_phases() == 1);
  CHECK(sup_t(cat.domain()) == 2.0);
  CHECK(cat.value({0.5, 0})[0] == 2.0);
  CHECK(cat.value({1.2, 0})[0] == -1.0);
  CHECK(cat.value({1.7, 0})[0] == 4.0);

  CHECK_THROWS_AS(concat_inputs(u, u2, {0.5, 0}), HybridTimeError);
}

TEST_CASE("concat_inputs accumulates jumps") {
  HybridInput u(two_phase(), 1);          // one jump
  HybridInput u2(two_phase(), 1);         // one jump
  auto cat = concat_inputs(u, u2, {2.0, 1});
  CHECK(cat.domain().num_phases() == 3);  // 2 jumps total
  CHECK(jump_times(cat.domain()).size() == 2);
  CHECK_NOTHROW(validate_domain(cat.domain()));
  CHECK(sup_t(cat.domain()) == 4.0);
  CHECK(sup_j(cat.domain()) == 2.0);
}

TEST_CASE("InputSpec lookup") {
  auto z = InputSpec::zero(2);
  CHECK(z.value(3, 1.0).size() == 2);
  CHECK(z.value(3, 1.0).norm() == 0.0);
  CHECK(std::isinf(z.next_switch_after(0, 0.0)));

  InputSpec spec;
  spec.m = 1;
  spec.phases.push_back({{1.0, 2.0}, {vec1(0.0), vec1(5.0), vec1(-5.0)}, {}});
  CHECK(spec.value(0, 0.5)[0] == 0.0);
  CHECK(spec.value(0, 1.0)[0] == 5.0);
  CHECK(spec.value(7, 2.5)[0] == -5.0);  // later phases reuse the last entry
  CHECK(spec.next_switch_after(0, 1.0) == 2.0);
}
