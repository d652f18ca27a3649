// Randomized properties that cut across modules.

#include <cmath>

#include "doctest.h"
#include "support.hpp"

using namespace ldgba;
using namespace ldgba::testing;

namespace {

// Complete deterministic automaton over {a, b} with random acceptance.
TGba random_deterministic(std::mt19937_64& rng, std::size_t states, std::size_t sets) {
  std::uniform_int_distribution<StateId> st(0, static_cast<StateId>(states - 1));
  std::uniform_int_distribution<AccMask> acc(0, full_mask(sets));
  std::vector<Transition> ts;
  std::vector<AccMask> masks;
  std::vector<std::string> names;
  for (StateId x = 0; x < states; ++x) {
    names.push_back(default_state_name(x));
    for (ApSet l = 0; l < 4; ++l) {
      ts.push_back({x, Letter::of(l), st(rng)});
      masks.push_back(rng() % 3 == 0 ? acc(rng) : 0);
    }
  }
  return TGba({"a", "b"}, names, 0, sets, ts, masks);
}

const std::vector<std::string> kAb{"a", "b"};

}  // namespace

TEST_CASE("LTL identities on random formulas and words") {
  std::mt19937_64 rng(101);
  using F = LtlFormula;
  for (int i = 0; i < 2000; ++i) {
    const F phi = random_formula(rng, 4), psi = random_formula(rng, 3);
    const LassoWord w = random_lasso(rng, kAbc, 3, 3);
    CHECK(eval_lasso(F::eventually(phi), w) == eval_lasso(F::until(F::top(), phi), w));
    CHECK(eval_lasso(F::globally(phi), w) == eval_lasso(F::negation(F::eventually(F::negation(phi))), w));
    CHECK(eval_lasso(F::negation(F::conjunction(phi, psi)), w) ==
          eval_lasso(F::disjunction(F::negation(phi), F::negation(psi)), w));
    CHECK(eval_lasso(F::implication(phi, psi), w) == eval_lasso(F::disjunction(F::negation(phi), psi), w));
  }
}

TEST_CASE("suffix stability") {
  std::mt19937_64 rng(103);
  for (int i = 0; i < 1000; ++i) {
    const LtlFormula sub = random_formula(rng, 3);
    const LtlFormula phi = i % 2 ? LtlFormula::globally(sub) : LtlFormula::eventually(sub);
    const LassoWord w = random_lasso(rng, kAbc, 3, 3);
    for (int k : {1, 2}) {
      LassoWord rotated = w;
      for (int r = 0; r < k; ++r) rotated.prefix.insert(rotated.prefix.end(), w.cycle.begin(), w.cycle.end());
      CHECK(eval_lasso(phi, rotated) == eval_lasso(phi, w));
    }
  }
}

TEST_CASE("memory update algebra") {
  for (std::size_t n = 1; n <= 4; ++n)
    for (AccMask v = 0; v <= full_mask(n); ++v)
      for (AccMask e = 0; e <= full_mask(n); ++e) {
        const MemoryVector m = vec_max(MemoryVector(n, v), MemoryVector(n, e));
        CHECK(m.bits() == (v | e));
        // reset fires exactly on the all-ones vector.
        CHECK((reset(m) != m) == m.all_ones());
        if (m.all_ones()) CHECK(reset(m).all_zeros());
      }
}

TEST_CASE("memory records accepting sets since the last reset") {
  std::mt19937_64 rng(107);
  for (int k = 0; k < 200; ++k) {
    const TGba b = random_deterministic(rng, 3, 3);
    const AugmentedAutomaton aug = augment(b);
    CHECK(aug.automaton.num_states() <= b.num_states() * 8);
    StateId x = aug.automaton.initial();
    AccMask seen = 0;  // sets visited since the last reset, tracked directly
    for (int step = 0; step < 200; ++step) {
      const Letter l = Letter::of(static_cast<ApSet>(rng() % 4));
      const auto moves = aug.automaton.successors(x, l);
      REQUIRE(moves.size() == 1);
      const TransitionId t = moves.front();
      const StateId base_src = aug.states[x].base;
      const StateId next = aug.automaton.transition(t).dst;
      const auto base_t = b.find(base_src, l, aug.states[next].base);
      REQUIRE(base_t.has_value());
      const MemoryVector before = *aug.states[x].memory;
      const MemoryVector after = *aug.states[next].memory;
      seen |= b.acceptance(*base_t);
      if (seen == b.all_sets()) {
        CHECK(after.all_zeros());
        seen = 0;
      } else {
        CHECK(after.bits() == seen);
        CHECK((after.bits() & before.bits()) == before.bits());  // monotone between resets
      }
      // Augmented acceptance: original sets not yet recorded in memory.
      CHECK(aug.automaton.acceptance(t) == (b.acceptance(*base_t) & ~before.bits()));
      x = next;
    }
  }
}

TEST_CASE("language preservation on random automata") {
  std::mt19937_64 rng(109);
  for (int k = 0; k < 60; ++k) {
    const TGba b = random_deterministic(rng, 3, 2);
    const TGba aug = augment(b).automaton;
    const TGba merged = merge_unaccepting(augment(b)).automaton;
    const TGba deg = degeneralize(b);
    CHECK(merged.num_states() <= aug.num_states());
    for (int i = 0; i < 100; ++i) {
      const LassoWord w = random_lasso(rng, kAb, 3, 4);
      const bool expected = accepts_lasso(b, w);
      CHECK(accepts_lasso(aug, w) == expected);
      CHECK(accepts_lasso(merged, w) == expected);
      CHECK(accepts_lasso(deg, w) == expected);
    }
    // Deterministic automata are limit-deterministic; so are the outputs.
    CHECK_NOTHROW(check_limit_deterministic(aug));
    CHECK_NOTHROW(check_limit_deterministic(merged));
    CHECK_NOTHROW(check_limit_deterministic(deg));
    const std::string text = serialize_automaton(merged);
    CHECK(serialize_automaton(parse_automaton(text)) == text);
  }
}

TEST_CASE("frontier and memory agree until the first reset") {
  const TGba b = fixture_gfa_gfb_gnc();
  const AugmentedAutomaton aug = augment(b);
  std::mt19937_64 rng(113);
  std::size_t steps_checked = 0;
  for (int run = 0; run < 10000; ++run) {
    FrontierState frontier(b);
    StateId xa = aug.automaton.initial();
    StateId xb = b.initial();
    for (int step = 0; step < 50; ++step) {
      const Letter l = Letter::of(static_cast<ApSet>(rng() % 4));  // c-free, stays in x0
      const TransitionId t = b.successors(xb, l).front();
      const MemoryVector m = vec_max(*aug.states[xa].memory, visitf(b, t));
      if (m.all_ones()) break;  // reset: the correspondence ends here
      frontier = frontier_step(frontier, t, b).next;
      xa = aug.automaton.transition(aug.automaton.successors(xa, l).front()).dst;
      xb = b.transition(t).dst;
      for (std::size_t j = 0; j < b.num_acceptance_sets(); ++j) {
        bool removed = true;
        for (TransitionId f : b.accepting_set(j)) removed = removed && !frontier.contains(f);
        CHECK(aug.states[xa].memory->test(j) == removed);
      }
      ++steps_checked;
    }
  }
  CHECK(steps_checked > 10000);
}

TEST_CASE("recurrent classes meet all accepting sets or none") {
  const ProductMdp p = build_product(build_gridworld(), merge_unaccepting(augment(fixture_gfa_gfb_gnc())).automaton);
  std::mt19937_64 rng(127);
  for (int k = 0; k < 300; ++k) {
    const PolicyEvaluation e = evaluate_policy(p, random_policy(p, rng));
    for (const auto& cls : e.classes) CHECK((cls.coverage == 0 || cls.coverage == p.all_sets()));
  }
}

TEST_CASE("reachability is monotone in the target") {
  std::mt19937_64 rng(131);
  for (int k = 0; k < 100; ++k) {
    const MarkovChain mc = random_chain(rng, 12);
    std::vector<std::size_t> small{rng() % 12};
    std::vector<std::size_t> large = small;
    large.push_back(rng() % 12);
    large.push_back(rng() % 12);
    const auto ps = reach_probability(mc, small).probability;
    const auto pl = reach_probability(mc, large).probability;
    for (std::size_t i = 0; i < 12; ++i) CHECK(pl[i] >= ps[i] - 1e-12);
  }
}

TEST_CASE("stochastic rows in every constructed model") {
  const LabeledMdp g = build_gridworld();
  const TGba b = fixture_gfa_gfb_gnc();
  for (const TGba& a : {b, augment(b).automaton, merge_unaccepting(augment(b)).automaton, degeneralize(b)}) {
    const ProductMdp p = build_product(g, a);
    CHECK(max_row_error(p.mdp()) <= kStochasticTolerance);
    std::mt19937_64 rng(137);
    for (int k = 0; k < 20; ++k) CHECK(max_row_error(induce_chain(p.mdp(), random_policy(p, rng))) <= kStochasticTolerance);
  }
}

TEST_CASE("training: bounds, determinism and trend") {
  const ProductMdp p = build_product(build_gridworld(), merge_unaccepting(augment(fixture_gfa_gfb_gnc())).automaton);
  const TrainConfig cfg = TrainConfig::desk();
  const TrainResult r = train(p, RewardScheme::Accepting, cfg);
  const double bound = cfg.r_p / (1 - cfg.gamma);
  for (const auto& s : r.sessions)
    for (StateId x = 0; x < p.num_states(); ++x)
      for (double v : s.q.values(x)) CHECK((v >= 0.0 && v <= bound));

  const TrainResult again = train(p, RewardScheme::Accepting, cfg);
  CHECK(curves_csv(again) == curves_csv(r));
  CHECK(satisfaction_csv(again) == satisfaction_csv(r));
  for (std::size_t i = 0; i < r.sessions.size(); ++i) CHECK(again.sessions[i].policy == r.sessions[i].policy);

  const std::size_t tenth = cfg.episodes / 10;
  double first = 0.0, last = 0.0;
  for (std::size_t e = 0; e < tenth; ++e) {
    first += r.curve.mean[e];
    last += r.curve.mean[cfg.episodes - 1 - e];
  }
  CHECK(last > first);

  // The frontier scheme stays within the same bound.
  const ProductMdp plain = build_product(build_gridworld(), fixture_gfa_gfb_gnc());
  TrainConfig small = cfg;
  small.episodes = 20;
  for (const auto& s : train(plain, RewardScheme::Frontier, small).sessions)
    for (StateId x = 0; x < plain.num_states(); ++x)
      for (double v : s.q.values(x)) CHECK((v >= 0.0 && v <= bound));
}
