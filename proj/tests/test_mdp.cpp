#include <cmath>

#include "doctest.h"
#include "support.hpp"

using namespace ldgba;
using namespace ldgba::testing;

namespace {

std::map<StateId, double> distribution(const LabeledMdp& m, StateId s, ActionId a) {
  std::map<StateId, double> out;
  for (const Outcome& o : m.choice(s, a).outcomes) out[o.next] += o.probability;
  return out;
}

ApSet label(const LabeledMdp& m, StateId s, ActionId a, StateId next) {
  for (const Outcome& o : m.choice(s, a).outcomes)
    if (o.next == next) return o.label;
  FAIL("no outcome");
  return 0;
}

MarkovChain chain(std::vector<std::vector<std::pair<std::size_t, double>>> rows) {
  MarkovChain mc;
  for (std::size_t i = 0; i < rows.size(); ++i) mc.states.push_back(static_cast<StateId>(i));
  mc.rows = std::move(rows);
  return mc;
}

constexpr ActionId kRight = 0, kLeft = 1, kUp = 2, kDown = 3, kToS0 = 4, kToS8 = 11;

}  // namespace

TEST_CASE("grid world dynamics") {
  const LabeledMdp g = build_gridworld();
  CHECK(g.num_states() == 9);
  CHECK(g.initial() == 7);
  CHECK(g.enabled(4).size() == 8);
  CHECK(g.action_name(kToS0) == "to_s0");
  CHECK(g.action_name(kToS8) == "to_s8");
  for (StateId s = 0; s < 9; ++s)
    if (s != 4) CHECK(g.enabled(s) == std::vector<ActionId>{kRight, kLeft, kUp, kDown});

  CHECK(distribution(g, 4, kToS0) == std::map<StateId, double>{{0, 0.9}, {4, 0.1}});
  CHECK(distribution(g, 0, kRight) == std::map<StateId, double>{{0, 0.1}, {1, 0.9}});
  CHECK(distribution(g, 7, kUp) == std::map<StateId, double>{{4, 0.9}, {7, 0.1}});
  CHECK(distribution(g, 1, kDown) == std::map<StateId, double>{{1, 0.1}, {4, 0.9}});
  CHECK(distribution(g, 3, kRight) == std::map<StateId, double>{{3, 0.1}, {4, 0.9}});
  CHECK(distribution(g, 8, kDown) == std::map<StateId, double>{{5, 0.1}, {8, 0.9}});
  CHECK(distribution(g, 0, kUp) == std::map<StateId, double>{{0, 0.9}, {3, 0.1}});

  CHECK(label(g, 4, kToS0, 0) == set_of({"a"}));
  CHECK(label(g, 4, kToS8, 8) == set_of({"b"}));
  CHECK(label(g, 4, kToS0, 4) == 0);
  CHECK(label(g, 1, kRight, 2) == set_of({"c"}));
  CHECK(max_row_error(g) <= kStochasticTolerance);

  // Exactly one a-labeled and one b-labeled transition; c on entries to
  // s2, s3, s5, s6 only.
  int a_count = 0, b_count = 0;
  std::set<StateId> c_targets;
  for (StateId s = 0; s < 9; ++s)
    for (const Choice& c : g.choices(s))
      for (const Outcome& o : c.outcomes) {
        a_count += (o.label & set_of({"a"})) != 0;
        b_count += (o.label & set_of({"b"})) != 0;
        if (o.label & set_of({"c"})) c_targets.insert(o.next);
        CHECK(((o.label & set_of({"c"})) != 0) == (o.next == 2 || o.next == 3 || o.next == 5 || o.next == 6));
      }
  CHECK(a_count == 1);
  CHECK(b_count == 1);
  CHECK(c_targets == std::set<StateId>{2, 3, 5, 6});
}

TEST_CASE("model validation") {
  auto one_state = [](std::vector<Choice> row) {
    return LabeledMdp({"s"}, {"go"}, {"a"}, 0, {std::move(row)});
  };
  CHECK_NOTHROW(one_state({{0, {{0, 1.0, 0}}}}));
  CHECK_THROWS_AS(one_state({}), ValidationError);
  CHECK_THROWS_AS(one_state({{0, {{0, 0.5, 0}}}}), ValidationError);
  CHECK_THROWS_AS(one_state({{0, {{0, 1.0 + 1e-9, 0}}}}), ValidationError);
  CHECK_NOTHROW(one_state({{0, {{0, 0.5, 0}, {0, 0.5 + 1e-13, 1}}}}));
  CHECK_THROWS_AS(one_state({{0, {{1, 1.0, 0}}}}), ValidationError);
  CHECK_THROWS_AS(one_state({{0, {{0, 1.0, 2}}}}), ValidationError);
  CHECK_THROWS_AS(one_state({{1, {{0, 1.0, 0}}}}), ValidationError);
  CHECK_THROWS_AS(one_state({{0, {{0, 1.0, 0}}}, {0, {{0, 1.0, 0}}}}), ValidationError);
  CHECK_THROWS_AS(LabeledMdp({"s"}, {"go"}, {"a"}, 1, {{{0, {{0, 1.0, 0}}}}}), ValidationError);
}

TEST_CASE("induced chains") {
  const LabeledMdp g = build_gridworld();
  PositionalPolicy pi(9);
  for (StateId s = 0; s < 9; ++s) pi.set(s, s == 4 ? kToS0 : kUp);
  const MarkovChain mc = induce_chain(g, pi);
  CHECK(mc.states[mc.initial] == 7);
  CHECK(max_row_error(mc) <= kStochasticTolerance);
  std::map<StateId, double> row;
  for (auto [j, p] : mc.rows[mc.initial]) row[mc.states[j]] = p;
  CHECK(row == std::map<StateId, double>{{4, 0.9}, {7, 0.1}});

  SUBCASE("undefined reachable choice") {
    PositionalPolicy partial(9);
    partial.set(7, kUp);
    try {
      induce_chain(g, partial);
      FAIL("no error");
    } catch (const UndefinedChoice& e) {
      CHECK(e.state() == 4);
    }
  }
  SUBCASE("deterministic model gives a functional graph") {
    const LabeledMdp m({"s0", "s1", "s2"}, {"go"}, {"a"}, 0,
                       {{{0, {{1, 1.0, 0}}}}, {{0, {{2, 1.0, 0}}}}, {{0, {{1, 1.0, 1}}}}});
    PositionalPolicy p(3);
    for (StateId s = 0; s < 3; ++s) p.set(s, 0);
    const MarkovChain c = induce_chain(m, p);
    CHECK(c.size() == 3);
    for (const auto& r : c.rows) {
      REQUIRE(r.size() == 1);
      CHECK(r.front().second == 1.0);
    }
  }
  SUBCASE("policy must pick an enabled action") {
    PositionalPolicy bad(9);
    for (StateId s = 0; s < 9; ++s) bad.set(s, kUp);
    CHECK_THROWS(induce_chain(g, bad));
  }
}

TEST_CASE("recurrence decomposition") {
  SUBCASE("absorbing state") {
    const auto d = decompose(chain({{{1, 1.0}}, {{1, 1.0}}}));
    CHECK(d.transient == std::vector<std::size_t>{0});
    REQUIRE(d.recurrent_classes.size() == 1);
    CHECK(d.recurrent_classes[0] == std::vector<std::size_t>{1});
  }
  SUBCASE("irreducible cycle") {
    const auto d = decompose(chain({{{1, 1.0}}, {{2, 1.0}}, {{0, 1.0}}}));
    CHECK(d.transient.empty());
    REQUIRE(d.recurrent_classes.size() == 1);
    CHECK(d.recurrent_classes[0].size() == 3);
  }
  SUBCASE("grid corner loop on the plain model") {
    const LabeledMdp g = build_gridworld();
    PositionalPolicy pi(9);
    for (StateId s = 0; s < 9; ++s) pi.set(s, kUp);
    pi.set(4, kToS0);
    pi.set(0, kRight);
    pi.set(1, kDown);
    pi.set(8, kLeft);
    const MarkovChain mc = induce_chain(g, pi);
    const auto d = decompose(mc);
    REQUIRE(d.recurrent_classes.size() == 1);
    std::set<StateId> cls;
    for (auto i : d.recurrent_classes[0]) cls.insert(mc.states[i]);
    CHECK(cls == std::set<StateId>{0, 1, 4});
  }
  SUBCASE("classes are closed and strongly connected") {
    std::mt19937_64 rng(17);
    for (int k = 0; k < 50; ++k) {
      const MarkovChain mc = random_chain(rng, 15);
      const auto d = decompose(mc);
      std::size_t covered = d.transient.size();
      for (const auto& cls : d.recurrent_classes) {
        covered += cls.size();
        const std::set<std::size_t> in(cls.begin(), cls.end());
        for (auto i : cls) {
          double mass = 0.0;
          for (auto [j, p] : mc.rows[i])
            if (in.count(j)) mass += p;
          CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
        }
        // Every member reaches every other inside the class.
        for (auto start : cls) {
          std::set<std::size_t> seen{start};
          std::vector<std::size_t> stack{start};
          while (!stack.empty()) {
            auto i = stack.back();
            stack.pop_back();
            for (auto [j, p] : mc.rows[i])
              if (in.count(j) && seen.insert(j).second) stack.push_back(j);
          }
          CHECK(seen.size() == cls.size());
        }
      }
      CHECK(covered == mc.size());
    }
  }
}

TEST_CASE("reachability probabilities") {
  SUBCASE("everything is a target") {
    const MarkovChain mc = chain({{{1, 0.5}, {2, 0.5}}, {{1, 1.0}}, {{2, 1.0}}});
    const ReachResult r = reach_probability(mc, {0, 1, 2});
    for (double p : r.probability) CHECK(p == 1.0);
  }
  SUBCASE("one-step split") {
    const MarkovChain mc = chain({{{1, 0.5}, {2, 0.5}}, {{1, 1.0}}, {{2, 1.0}}});
    const ReachResult r = reach_probability(mc, {1});
    CHECK(r.probability[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.probability[2] == 0.0);
    CHECK(r.residual < 1e-10);
  }
  SUBCASE("gambler's ruin") {
    // Fair walk on 0..4 absorbed at the ends: P(reach 4 from i) = i / 4.
    MarkovChain mc = chain({{{0, 1.0}}, {{0, 0.5}, {2, 0.5}}, {{1, 0.5}, {3, 0.5}}, {{2, 0.5}, {4, 0.5}}, {{4, 1.0}}});
    const ReachResult r = reach_probability(mc, {4});
    for (std::size_t i = 0; i < 5; ++i) CHECK(r.probability[i] == doctest::Approx(i / 4.0).epsilon(1e-12));
  }
  SUBCASE("empty target is rejected") {
    CHECK_THROWS(reach_probability(chain({{{0, 1.0}}}), {}));
  }
  SUBCASE("Monte Carlo agreement") {
    std::mt19937_64 rng(23);
    constexpr std::size_t kRuns = 10000;
    for (int k = 0; k < 20; ++k) {
      const MarkovChain mc = random_chain(rng, 20);
      const std::vector<std::size_t> target{19, static_cast<std::size_t>(k % 16)};
      const double exact = reach_probability(mc, target).probability[mc.initial];
      const double estimate = simulate_reach(mc, target, kRuns, 10000, rng);
      const double se = std::sqrt(exact * (1 - exact) / kRuns);
      CHECK(std::abs(estimate - exact) <= 3 * se + 1e-12);
    }
  }
}

TEST_CASE("MDP text format") {
  const LabeledMdp g = build_gridworld();
  const std::string text = serialize_mdp(g);
  CHECK(serialize_mdp(parse_mdp(text)) == text);
  CHECK(serialize_mdp(read_mdp_file(LDGBA_DATA_DIR "/grid9.mdp")) == text);

  const LabeledMdp m = parse_mdp(
      "# coin\nstates: s0 s1\nactions: flip\nap: a b\ninitial: s0\n"
      "prob s0 flip s0 0.5\nprob s0 flip s1 0.5\nprob s1 flip s1 1\nlabel s0 flip s1 {a,b}\n");
  CHECK(m.num_states() == 2);
  CHECK(m.find_state("s1") == StateId{1});
  CHECK(m.find_action("flip") == ActionId{0});
  CHECK_FALSE(m.find_action("jump").has_value());
  CHECK(label(m, 0, 0, 1) == 0b11);
  CHECK(label(m, 0, 0, 0) == 0);

  const std::string head = "states: s0\nactions: go\nap: a\ninitial: s0\n";
  CHECK_THROWS_AS(parse_mdp(head + "prob s0 go s0 0.5\n"), ValidationError);
  CHECK_THROWS_AS(parse_mdp(head + "prob s0 go s9 1\n"), ParseError);
  CHECK_THROWS_AS(parse_mdp(head + "prob s0 go s0 x\n"), ParseError);
  CHECK_THROWS_AS(parse_mdp(head + "prob s0 go s0 1\nlabel s0 go s0 {z}\n"), ParseError);
  CHECK_THROWS_AS(parse_mdp(head + "prob s0 go s0 1\nlabel s0 stay s0 {a}\n"), ParseError);
  CHECK_THROWS_AS(parse_mdp("states: s0\n"), ParseError);
}
