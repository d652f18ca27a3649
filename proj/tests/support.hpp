#pragma once

// Random generators and small fixtures shared by the test binaries.

#include <random>
#include <vector>

#include "ldgba/experiment.hpp"

namespace ldgba::testing {

inline const std::vector<std::string> kAbc{"a", "b", "c"};

inline ApSet set_of(std::initializer_list<const char*> names) {
  ApSet s = 0;
  for (const char* n : names) s |= ApSet{1} << (n[0] - 'a');
  return s;
}

inline LassoWord lasso(std::vector<ApSet> prefix, std::vector<ApSet> cycle) {
  return LassoWord{kAbc, std::move(prefix), std::move(cycle)};
}

inline LassoWord random_lasso(std::mt19937_64& rng, const std::vector<std::string>& aps, std::size_t max_prefix,
                              std::size_t max_cycle) {
  std::uniform_int_distribution<std::size_t> plen(0, max_prefix), clen(1, max_cycle);
  std::uniform_int_distribution<ApSet> letter(0, (ApSet{1} << aps.size()) - 1);
  LassoWord w{aps, {}, {}};
  w.prefix.resize(plen(rng));
  w.cycle.resize(clen(rng));
  for (auto& l : w.prefix) l = letter(rng);
  for (auto& l : w.cycle) l = letter(rng);
  return w;
}

inline LtlFormula random_formula(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> leaf(0, 4), op(0, 8);
  if (depth == 0 || leaf(rng) == 0) {
    switch (leaf(rng)) {
      case 0: return LtlFormula::top();
      case 1: return LtlFormula::atom("a");
      case 2: return LtlFormula::atom("b");
      case 3: return LtlFormula::atom("c");
      default: return LtlFormula::bottom();
    }
  }
  auto sub = [&] { return random_formula(rng, depth - 1); };
  switch (op(rng)) {
    case 0: return LtlFormula::negation(sub());
    case 1: return LtlFormula::conjunction(sub(), sub());
    case 2: return LtlFormula::disjunction(sub(), sub());
    case 3: return LtlFormula::implication(sub(), sub());
    case 4: return LtlFormula::next(sub());
    case 5: return LtlFormula::until(sub(), sub());
    case 6: return LtlFormula::eventually(sub());
    case 7: return LtlFormula::globally(sub());
    default: return LtlFormula::until(sub(), sub());
  }
}

// Random chain with a few absorbing states; every row sums to 1.
inline MarkovChain random_chain(std::mt19937_64& rng, std::size_t n) {
  MarkovChain mc;
  mc.states.resize(n);
  mc.rows.resize(n);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1), fanout(1, 3);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    mc.states[i] = static_cast<StateId>(i);
    if (i >= n - 3) {
      mc.rows[i] = {{i, 1.0}};
      continue;
    }
    std::map<std::size_t, double> row;
    for (std::size_t k = fanout(rng); k > 0; --k) row[pick(rng)] += weight(rng);
    double total = 0.0;
    for (auto& [j, w] : row) total += w;
    for (auto& [j, w] : row) mc.rows[i].emplace_back(j, w / total);
  }
  return mc;
}

// Simulates from the initial state; a run succeeds when it visits `target`
// within `max_steps` steps.
inline double simulate_reach(const MarkovChain& mc, const std::vector<std::size_t>& target, std::size_t runs,
                             std::size_t max_steps, std::mt19937_64& rng) {
  std::vector<char> is_target(mc.size(), 0);
  for (auto t : target) is_target[t] = 1;
  // States that cannot reach the target end a run early.
  std::vector<char> can_reach(is_target);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < mc.size(); ++i)
      if (!can_reach[i])
        for (auto [j, p] : mc.rows[i])
          if (can_reach[j]) {
            can_reach[i] = 1;
            changed = true;
            break;
          }
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    std::size_t s = mc.initial;
    for (std::size_t step = 0; step <= max_steps; ++step) {
      if (is_target[s]) {
        ++hits;
        break;
      }
      if (!can_reach[s]) break;
      double x = u(rng);
      std::size_t next = mc.rows[s].back().first;
      for (auto [j, p] : mc.rows[s]) {
        if (x < p) {
          next = j;
          break;
        }
        x -= p;
      }
      s = next;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(runs);
}

inline StateId state_named(const TGba& b, const std::string& name) {
  for (StateId x = 0; x < b.num_states(); ++x)
    if (b.state_name(x) == name) return x;
  throw std::out_of_range("no state " + name);
}

// The corner cycle s7 -> s4 -> s0 -> s1 -> s4 -> s8 -> s7 on the augmented
// product, alternating at s4 by memory.
inline PositionalPolicy safe_cycle_policy(const ProductMdp& p) {
  PositionalPolicy pi(p.num_states());
  const TGba& b = p.automaton();
  for (StateId s = 0; s < p.num_states(); ++s) {
    const StateId room = p.mdp_state(s);
    const std::string memory = b.state_name(p.automaton_state(s));
    ActionId a = p.mdp().choices(s).front().action;
    switch (room) {
      case 7: a = 2; break;  // Up
      case 0: a = 0; break;  // Right
      case 1: a = 3; break;  // Down
      case 8: a = 1; break;  // Left
      case 4: a = memory == "x0@10" ? 11 : 4; break;  // to_s8 : to_s0
      default: break;
    }
    pi.set(s, a);
  }
  return pi;
}

}  // namespace ldgba::testing
