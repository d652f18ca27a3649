#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ldgba/types.hpp"

namespace ldgba {

struct Outcome {
  StateId next = 0;
  double probability = 0.0;
  ApSet label = 0;  // L(s, a, s') over the MDP's proposition universe
};

struct Choice {
  ActionId action = 0;
  std::vector<Outcome> outcomes;
};

inline constexpr double kStochasticTolerance = 1e-12;

// Labeled MDP. Each state lists its enabled actions as choices sorted by
// action id; every choice carries a distribution over successors with one
// label per positive-probability successor.
class LabeledMdp {
 public:
  LabeledMdp(std::vector<std::string> state_names, std::vector<std::string> action_names,
             std::vector<std::string> aps, StateId initial, std::vector<std::vector<Choice>> choices);

  std::size_t num_states() const { return state_names_.size(); }
  std::size_t num_actions() const { return action_names_.size(); }
  const std::string& state_name(StateId s) const { return state_names_.at(s); }
  const std::string& action_name(ActionId a) const { return action_names_.at(a); }
  const std::vector<std::string>& state_names() const { return state_names_; }
  const std::vector<std::string>& action_names() const { return action_names_; }
  const std::vector<std::string>& aps() const { return aps_; }
  StateId initial() const { return initial_; }

  std::span<const Choice> choices(StateId s) const { return choices_.at(s); }
  std::optional<std::size_t> choice_index(StateId s, ActionId a) const;
  const Choice& choice(StateId s, ActionId a) const;
  std::vector<ActionId> enabled(StateId s) const;

  std::optional<StateId> find_state(std::string_view name) const;
  std::optional<ActionId> find_action(std::string_view name) const;

 private:
  std::vector<std::string> state_names_;
  std::vector<std::string> action_names_;
  std::vector<std::string> aps_;
  StateId initial_;
  std::vector<std::vector<Choice>> choices_;
};

class UndefinedChoice : public Error {
 public:
  explicit UndefinedChoice(StateId s) : Error("policy has no choice for state " + std::to_string(s)), state_(s) {}
  StateId state() const { return state_; }

 private:
  StateId state_;
};

// Deterministic stationary policy: at most one action per state.
class PositionalPolicy {
 public:
  PositionalPolicy() = default;
  explicit PositionalPolicy(std::size_t num_states) : choice_(num_states) {}

  void set(StateId s, ActionId a);
  bool defined(StateId s) const { return s < choice_.size() && choice_[s].has_value(); }
  ActionId at(StateId s) const;
  std::size_t size() const { return choice_.size(); }

  bool operator==(const PositionalPolicy&) const = default;

 private:
  std::vector<std::optional<ActionId>> choice_;
};

struct MarkovChain {
  std::vector<StateId> states;  // model state for each chain index
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::size_t initial = 0;

  std::size_t size() const { return states.size(); }
};

struct RecurrenceDecomposition {
  std::vector<std::size_t> transient;
  std::vector<std::vector<std::size_t>> recurrent_classes;
};

struct ReachResult {
  std::vector<double> probability;  // per chain index
  double residual = 0.0;            // max-norm residual of the solved system
};

// Chain over the states reachable from the initial state under `policy`.
MarkovChain induce_chain(const LabeledMdp& m, const PositionalPolicy& policy);

// Recurrent classes are the bottom strongly connected components.
RecurrenceDecomposition decompose(const MarkovChain& mc);

// Probability of eventually visiting `target` (chain indices), solved exactly
// by LU factorization over the states that can reach the target.
ReachResult reach_probability(const MarkovChain& mc, const std::vector<std::size_t>& target);

// Max |1 - row sum| over every (state, action) row.
double max_row_error(const LabeledMdp& m);
double max_row_error(const MarkovChain& mc);

// 3×3 rooms, s4 the corridor, s7 the initial room.
//   s0 s1 s2
//   s3 s4 s5
//   s6 s7 s8
// Actions: Right Left Up Down, then to_s0..to_s8 (no to_s4).
LabeledMdp build_gridworld();

// Text format:
//   states: s0 s1 ...
//   actions: go stay ...
//   ap: a b c
//   initial: s0
//   prob s0 go s1 0.9
//   label s0 go s1 {a,b}
LabeledMdp parse_mdp(std::string_view text);
LabeledMdp read_mdp_file(const std::filesystem::path& path);
std::string serialize_mdp(const LabeledMdp& m);

}  // namespace ldgba
