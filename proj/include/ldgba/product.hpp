#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ldgba/automata.hpp"
#include "ldgba/mdp.hpp"

namespace ldgba {

struct ProductEdge {
  AccMask acceptance = 0;
  TransitionId automaton_transition = 0;
};

class AlphabetMismatch : public Error {
 public:
  using Error::Error;
};

class MissingAutomatonMove : public Error {
 public:
  using Error::Error;
};

// Product of a labeled MDP with an automaton. Product states are pairs
// (s, x) rendered "(s|x)"; actions are the MDP's actions followed by one
// ε-action per automaton state (id = |A| + x), named "eps_" + name of x.
class ProductMdp {
 public:
  ProductMdp(LabeledMdp mdp, TGba automaton, std::vector<StateId> mdp_state, std::vector<StateId> automaton_state,
             std::vector<std::vector<std::vector<ProductEdge>>> edges, std::size_t num_mdp_actions);

  const LabeledMdp& mdp() const { return mdp_; }
  const TGba& automaton() const { return automaton_; }
  std::size_t num_states() const { return mdp_.num_states(); }
  StateId initial() const { return mdp_.initial(); }
  std::size_t num_acceptance_sets() const { return automaton_.num_acceptance_sets(); }
  AccMask all_sets() const { return automaton_.all_sets(); }

  StateId mdp_state(StateId s) const { return mdp_state_.at(s); }
  StateId automaton_state(StateId s) const { return automaton_state_.at(s); }
  std::optional<StateId> find(StateId mdp_state, StateId automaton_state) const;
  const std::string& state_name(StateId s) const { return mdp_.state_name(s); }

  bool is_epsilon_action(ActionId a) const { return a >= num_mdp_actions_; }
  const ProductEdge& edge(StateId s, std::size_t choice, std::size_t outcome) const {
    return edges_[s][choice][outcome];
  }

 private:
  LabeledMdp mdp_;
  TGba automaton_;
  std::vector<StateId> mdp_state_;
  std::vector<StateId> automaton_state_;
  std::vector<std::vector<std::vector<ProductEdge>>> edges_;
  std::size_t num_mdp_actions_;
};

// Reachable product from (s_init, x_init). A labeled move needs exactly one
// automaton successor on the projected label; otherwise construction throws.
ProductMdp build_product(const LabeledMdp& m, const TGba& b);

// r_p on transitions in some accepting set, 0 elsewhere.
double reward_accepting(AccMask acceptance, double r_p);

// Working set of accepting transitions for the accepting-frontier baseline.
class FrontierState {
 public:
  explicit FrontierState(const TGba& b);
  FrontierState(const TGba& b, const std::vector<TransitionId>& remaining);

  bool contains(TransitionId t) const { return remaining_.at(t) != 0; }
  std::vector<TransitionId> remaining() const;

  // Removes every accepting set containing t when t is still pending, and
  // refills the set once it empties. Returns whether t was pending.
  bool advance(TransitionId t, const TGba& b);

  bool operator==(const FrontierState&) const = default;

 private:
  void refill(const TGba& b);

  std::vector<char> remaining_;
};

struct FrontierStep {
  FrontierState next;
  bool reward;
};

FrontierStep frontier_step(const FrontierState& f, TransitionId t, const TGba& b);

struct Witness {
  StateId from;
  ActionId action;
  StateId to;
};

struct ClassReport {
  std::vector<StateId> states;  // product states
  AccMask coverage = 0;
  bool accepting = false;
  std::vector<std::optional<Witness>> witnesses;  // one per accepting set
};

struct PolicyEvaluation {
  double sat_probability = 0.0;
  bool positively_satisfies = false;
  std::size_t reachable_states = 0;
  std::size_t transient_count = 0;
  std::vector<ClassReport> classes;
  double residual = 0.0;
};

// A recurrent class is accepting when its transitions meet every accepting
// set; the satisfaction probability is the probability of reaching one.
PolicyEvaluation evaluate_policy(const ProductMdp& p, const PositionalPolicy& policy);

nlohmann::json evaluation_to_json(const ProductMdp& p, const PositionalPolicy& policy, const PolicyEvaluation& e);
nlohmann::json policy_to_json(const ProductMdp& p, const PositionalPolicy& policy);

// True when two accepting sets are entered only from one common product
// state under disjoint action sets, so no positional policy meets both.
bool check_positional_impossibility(const ProductMdp& p);

}  // namespace ldgba
