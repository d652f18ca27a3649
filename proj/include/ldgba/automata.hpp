#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ldgba/ltl.hpp"
#include "ldgba/types.hpp"

namespace ldgba {

struct Transition {
  StateId src = 0;
  Letter letter;
  StateId dst = 0;

  auto operator<=>(const Transition&) const = default;
};

// Transition-based generalized Büchi automaton over Σ = 2^AP ∪ {ε}.
//
// Transitions are stored letter-explicitly, sorted by (src, letter, dst) and
// without duplicates; each carries a mask of the accepting sets F_1..F_n it
// belongs to. Missing letters are allowed (the automaton may be partial).
class TGba {
 public:
  TGba(std::vector<std::string> aps, std::vector<std::string> state_names, StateId initial,
       std::size_t num_acceptance_sets, std::vector<Transition> transitions, std::vector<AccMask> acceptance);

  const std::vector<std::string>& aps() const { return aps_; }
  std::size_t num_states() const { return state_names_.size(); }
  const std::string& state_name(StateId s) const { return state_names_.at(s); }
  const std::vector<std::string>& state_names() const { return state_names_; }
  StateId initial() const { return initial_; }
  std::size_t num_acceptance_sets() const { return num_sets_; }
  AccMask all_sets() const { return full_mask(num_sets_); }
  std::size_t num_letters() const { return std::size_t{1} << aps_.size(); }

  std::span<const Transition> transitions() const { return transitions_; }
  const Transition& transition(TransitionId t) const { return transitions_.at(t); }
  AccMask acceptance(TransitionId t) const { return acceptance_.at(t); }
  bool in_set(TransitionId t, std::size_t j) const { return (acceptance_.at(t) >> j) & 1u; }

  // Transitions of F_{j+1}, zero-based j.
  std::vector<TransitionId> accepting_set(std::size_t j) const;
  std::vector<TransitionId> accepting_transitions() const;

  std::span<const TransitionId> outgoing(StateId s) const { return outgoing_.at(s); }
  std::vector<TransitionId> successors(StateId s, Letter letter) const;
  std::optional<TransitionId> find(StateId src, Letter letter, StateId dst) const;
  bool has_epsilon() const;

 private:
  std::vector<std::string> aps_;
  std::vector<std::string> state_names_;
  StateId initial_;
  std::size_t num_sets_;
  std::vector<Transition> transitions_;
  std::vector<AccMask> acceptance_;
  std::vector<std::vector<TransitionId>> outgoing_;
};

std::string default_state_name(StateId s);

// Text format (line oriented, '#' comments):
//   ap: a b c
//   states: 2
//   initial: 0
//   acceptance-sets: 2
//   name: 1 x1            (optional, default x<id>)
//   0 a & !c 0 [acc: 1]   (src guard dst, guard is a Boolean formula or eps)
// Accepting-set indices are 1-based.
TGba parse_automaton(std::string_view text);
TGba read_automaton_file(const std::filesystem::path& path);
std::string serialize_automaton(const TGba& b);

std::string letter_to_guard(ApSet letter, const std::vector<std::string>& aps);

enum class LimitDetCondition { AcceptingOutsideFinal, FinalNondeterministic, FinalToInitial, EpsilonPlacement };

class NotLimitDeterministic : public Error {
 public:
  NotLimitDeterministic(LimitDetCondition condition, const std::string& what) : Error(what), condition_(condition) {}
  LimitDetCondition condition() const { return condition_; }

 private:
  LimitDetCondition condition_;
};

struct LimitDetPartition {
  std::vector<StateId> x_initial;
  std::vector<StateId> x_final;
  // Whether every final state also has exactly one outgoing transition into
  // X_final in total (the literal count reading). Informational only: the
  // check enforces at most one successor per (state, letter).
  bool single_transition_reading = false;
};

// X_final is the least set containing every ε-target and every endpoint of an
// accepting transition that is closed under letter successors; every valid
// partition contains it, so checking this one decides existence.
LimitDetPartition check_limit_deterministic(const TGba& b);

// Counter construction: states (x, c) named "x.c", c in 1..n, advancing when an F_c
// transition is taken at counter c; accepting on the wrap from n.
TGba degeneralize(const TGba& b);

// Does some run of b over prefix·cycle^ω satisfy the generalized Büchi
// condition? Letters are projected onto b's proposition universe by name.
bool accepts_lasso(const TGba& b, const LassoWord& word);

// The two-state automaton for GF a & GF b & G !c: x0 loops on c-free letters,
// with F_1 = {(x0,{a},x0),(x0,{a,b},x0)} and F_2 = {(x0,{b},x0),(x0,{a,b},x0)};
// any letter containing c moves to the sink x1.
TGba fixture_gfa_gfb_gnc();

}  // namespace ldgba
