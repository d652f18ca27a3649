#include "ldgba/augment.hpp"

#include <deque>
#include <map>

namespace ldgba {

MemoryVector::MemoryVector(std::size_t length, AccMask bits) : length_(length), bits_(bits) {
  if (length < 1 || length > kMaxAcceptanceSets) throw Error("memory vector length out of range");
  if ((bits & ~full_mask(length)) != 0) throw Error("memory vector bits exceed its length");
}

std::string MemoryVector::to_string() const {
  std::string out;
  for (std::size_t j = 0; j < length_; ++j) out += test(j) ? '1' : '0';
  return out;
}

MemoryVector visitf(const TGba& b, TransitionId e) {
  return MemoryVector(b.num_acceptance_sets(), b.acceptance(e));
}

MemoryVector reset(const MemoryVector& v) { return v.all_ones() ? MemoryVector::zeros(v.size()) : v; }

MemoryVector vec_max(const MemoryVector& v, const MemoryVector& u) {
  if (v.size() != u.size()) throw Error("memory vectors differ in length");
  return MemoryVector(v.size(), v.bits() | u.bits());
}

MemoryVector next_memory(const MemoryVector& v, const TGba& b, TransitionId e) {
  return reset(vec_max(v, visitf(b, e)));
}

std::string AugmentedState::name(const TGba& original) const {
  return original.state_name(base) + "@" + (memory ? memory->to_string() : std::string("*"));
}

AugmentedAutomaton augment(const TGba& b) {
  const std::size_t n = b.num_acceptance_sets();
  std::map<std::pair<StateId, AccMask>, StateId> index;
  std::vector<AugmentedState> states;
  std::deque<StateId> work;
  auto intern = [&](StateId x, const MemoryVector& v) {
    auto [it, fresh] = index.emplace(std::pair{x, v.bits()}, static_cast<StateId>(states.size()));
    if (fresh) {
      states.push_back({x, v});
      work.push_back(it->second);
    }
    return it->second;
  };
  intern(b.initial(), MemoryVector::zeros(n));

  std::vector<Transition> transitions;
  std::vector<AccMask> acceptance;
  while (!work.empty()) {
    const StateId q = work.front();
    work.pop_front();
    const StateId x = states[q].base;
    const MemoryVector v = *states[q].memory;
    for (TransitionId t : b.outgoing(x)) {
      const Transition& tr = b.transition(t);
      const StateId dst = intern(tr.dst, next_memory(v, b, t));
      transitions.push_back({q, tr.letter, dst});
      // Keep F_j membership only where v_j = 0.
      acceptance.push_back(b.acceptance(t) & ~v.bits());
    }
  }

  std::vector<std::string> names;
  for (const auto& s : states) names.push_back(s.name(b));
  TGba automaton(b.aps(), std::move(names), 0, n, std::move(transitions), std::move(acceptance));
  return {std::move(automaton), std::move(states)};
}

AugmentedAutomaton merge_unaccepting(const AugmentedAutomaton& augmented) {
  const TGba& b = augmented.automaton;
  const std::size_t num = b.num_states();

  // live[s]: some accepting transition is reachable from s.
  std::vector<std::vector<StateId>> predecessors(num);
  std::vector<char> live(num, 0);
  std::deque<StateId> work;
  for (TransitionId t = 0; t < b.transitions().size(); ++t) {
    const Transition& tr = b.transition(t);
    predecessors[tr.dst].push_back(tr.src);
    if (b.acceptance(t) != 0 && !live[tr.src]) {
      live[tr.src] = 1;
      work.push_back(tr.src);
    }
  }
  while (!work.empty()) {
    const StateId s = work.front();
    work.pop_front();
    for (StateId p : predecessors[s]) {
      if (!live[p]) {
        live[p] = 1;
        work.push_back(p);
      }
    }
  }

  // Renumber in breadth-first order from the initial state so the result is
  // canonical; dead states share one representative per base state.
  std::vector<StateId> representative(num);
  std::map<StateId, StateId> merged_by_base;
  std::vector<AugmentedState> states;
  std::vector<StateId> old_to_new(num, UINT32_MAX);
  auto assign = [&](StateId old) -> bool {
    if (old_to_new[old] != UINT32_MAX) return false;
    if (live[old]) {
      old_to_new[old] = static_cast<StateId>(states.size());
      states.push_back(augmented.states[old]);
      return true;
    }
    const StateId base = augmented.states[old].base;
    auto [it, fresh] = merged_by_base.emplace(base, static_cast<StateId>(states.size()));
    if (fresh) states.push_back({base, std::nullopt});
    old_to_new[old] = it->second;
    return true;
  };
  std::deque<StateId> bfs;
  assign(b.initial());
  bfs.push_back(b.initial());
  while (!bfs.empty()) {
    const StateId s = bfs.front();
    bfs.pop_front();
    for (TransitionId t : b.outgoing(s))
      if (assign(b.transition(t).dst)) bfs.push_back(b.transition(t).dst);
  }

  std::vector<Transition> transitions;
  std::vector<AccMask> acceptance;
  for (TransitionId t = 0; t < b.transitions().size(); ++t) {
    const Transition& tr = b.transition(t);
    if (old_to_new[tr.src] == UINT32_MAX) continue;
    transitions.push_back({old_to_new[tr.src], tr.letter, old_to_new[tr.dst]});
    acceptance.push_back(b.acceptance(t));
  }

  // Recover the pre-augmentation state names from the augmented ones.
  std::vector<std::string> names;
  for (std::size_t s = 0; s < states.size(); ++s) {
    const StateId some_old = [&] {
      for (StateId old = 0; old < num; ++old)
        if (old_to_new[old] == s) return old;
      return StateId{0};
    }();
    const std::string& old_name = b.state_name(some_old);
    names.push_back(states[s].memory ? old_name : old_name.substr(0, old_name.rfind('@')) + "@*");
  }
  TGba automaton(b.aps(), std::move(names), 0, b.num_acceptance_sets(), std::move(transitions), std::move(acceptance));
  return {std::move(automaton), std::move(states)};
}

}  // namespace ldgba
