#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ldgba/automata.hpp"

namespace ldgba {

// Binary vector of length n recording which accepting sets have been visited
// since the last reset. Bit j (zero-based) stands for F_{j+1}.
class MemoryVector {
 public:
  MemoryVector(std::size_t length, AccMask bits = 0);

  static MemoryVector zeros(std::size_t length) { return MemoryVector(length, 0); }
  static MemoryVector ones(std::size_t length) { return MemoryVector(length, full_mask(length)); }

  std::size_t size() const { return length_; }
  AccMask bits() const { return bits_; }
  bool test(std::size_t j) const { return (bits_ >> j) & 1u; }
  bool all_zeros() const { return bits_ == 0; }
  bool all_ones() const { return bits_ == full_mask(length_); }

  // "10" for (1,0)^T: first component first.
  std::string to_string() const;

  auto operator<=>(const MemoryVector&) const = default;

 private:
  std::size_t length_;
  AccMask bits_;
};

MemoryVector visitf(const TGba& b, TransitionId e);
MemoryVector reset(const MemoryVector& v);
MemoryVector vec_max(const MemoryVector& v, const MemoryVector& u);

// reset(Max(v, visitf(e))): the memory after taking e from memory v.
MemoryVector next_memory(const MemoryVector& v, const TGba& b, TransitionId e);

struct AugmentedState {
  StateId base = 0;
  std::optional<MemoryVector> memory;  // nullopt after merging

  // x0@10, or x1@* for a merged state.
  std::string name(const TGba& original) const;
};

struct AugmentedAutomaton {
  TGba automaton;
  std::vector<AugmentedState> states;  // indexed by automaton state id
};

// Reachable part of X × V from (x_init, 0). A transition ((x,v),σ,(x',v'))
// exists for every (x,σ,x') in δ with v' = reset(Max(v, visitf(x,σ,x'))) and
// belongs to the new F_j iff (x,σ,x') ∈ F_j and v_j = 0.
AugmentedAutomaton augment(const TGba& b);

// Collapses, per base state, all augmented states from which no accepting
// transition is reachable into a single (x, *) state.
AugmentedAutomaton merge_unaccepting(const AugmentedAutomaton& augmented);

}  // namespace ldgba
