#include "ldgba/product.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

namespace ldgba {

ProductMdp::ProductMdp(LabeledMdp mdp, TGba automaton, std::vector<StateId> mdp_state,
                       std::vector<StateId> automaton_state, std::vector<std::vector<std::vector<ProductEdge>>> edges,
                       std::size_t num_mdp_actions)
    : mdp_(std::move(mdp)),
      automaton_(std::move(automaton)),
      mdp_state_(std::move(mdp_state)),
      automaton_state_(std::move(automaton_state)),
      edges_(std::move(edges)),
      num_mdp_actions_(num_mdp_actions) {}

std::optional<StateId> ProductMdp::find(StateId s, StateId x) const {
  for (StateId q = 0; q < num_states(); ++q)
    if (mdp_state_[q] == s && automaton_state_[q] == x) return q;
  return std::nullopt;
}

ProductMdp build_product(const LabeledMdp& m, const TGba& b) {
  std::vector<std::size_t> ap_in_mdp(b.aps().size());
  for (std::size_t i = 0; i < b.aps().size(); ++i) {
    auto it = std::find(m.aps().begin(), m.aps().end(), b.aps()[i]);
    if (it == m.aps().end()) throw AlphabetMismatch("automaton proposition '" + b.aps()[i] + "' is not labeled by the MDP");
    ap_in_mdp[i] = static_cast<std::size_t>(it - m.aps().begin());
  }
  auto project = [&](ApSet label) {
    ApSet out = 0;
    for (std::size_t i = 0; i < ap_in_mdp.size(); ++i)
      if ((label >> ap_in_mdp[i]) & 1u) out |= ApSet{1} << i;
    return out;
  };

  std::map<std::pair<StateId, StateId>, StateId> index;
  std::vector<StateId> mdp_state, automaton_state;
  std::deque<StateId> work;
  auto intern = [&](StateId s, StateId x) {
    auto [it, fresh] = index.emplace(std::pair{s, x}, static_cast<StateId>(mdp_state.size()));
    if (fresh) {
      mdp_state.push_back(s);
      automaton_state.push_back(x);
      work.push_back(it->second);
    }
    return it->second;
  };
  intern(m.initial(), b.initial());

  const auto num_mdp_actions = static_cast<ActionId>(m.num_actions());
  std::vector<std::vector<Choice>> choices;
  std::vector<std::vector<std::vector<ProductEdge>>> edges;
  while (!work.empty()) {
    const StateId q = work.front();
    work.pop_front();
    const StateId s = mdp_state[q], x = automaton_state[q];
    std::vector<Choice> row;
    std::vector<std::vector<ProductEdge>> row_edges;
    for (const Choice& c : m.choices(s)) {
      Choice pc{c.action, {}};
      std::vector<ProductEdge> pe;
      for (const Outcome& o : c.outcomes) {
        const Letter letter = Letter::of(project(o.label));
        const auto moves = b.successors(x, letter);
        if (moves.empty())
          throw MissingAutomatonMove("automaton state " + b.state_name(x) + " has no move on {" +
                                     letter_to_guard(letter.aps(), b.aps()) + "} produced by (" + m.state_name(s) +
                                     ", " + m.action_name(c.action) + ", " + m.state_name(o.next) + ")");
        if (moves.size() > 1)
          throw ValidationError("automaton state " + b.state_name(x) + " is nondeterministic on {" +
                                letter_to_guard(letter.aps(), b.aps()) + "}");
        const TransitionId t = moves.front();
        pc.outcomes.push_back({intern(o.next, b.transition(t).dst), o.probability, o.label});
        pe.push_back({b.acceptance(t), t});
      }
      // Emit outcomes in the model's canonical order so edges stay aligned.
      std::vector<std::size_t> perm(pc.outcomes.size());
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::stable_sort(perm.begin(), perm.end(), [&](std::size_t i, std::size_t j) {
        return std::tie(pc.outcomes[i].next, pc.outcomes[i].label) < std::tie(pc.outcomes[j].next, pc.outcomes[j].label);
      });
      Choice sorted{c.action, {}};
      std::vector<ProductEdge> sorted_edges;
      for (std::size_t i : perm) {
        sorted.outcomes.push_back(pc.outcomes[i]);
        sorted_edges.push_back(pe[i]);
      }
      pc = std::move(sorted);
      pe = std::move(sorted_edges);
      row.push_back(std::move(pc));
      row_edges.push_back(std::move(pe));
    }
    for (TransitionId t : b.outgoing(x)) {
      const Transition& tr = b.transition(t);
      if (!tr.letter.is_epsilon()) continue;
      row.push_back({num_mdp_actions + tr.dst, {{intern(s, tr.dst), 1.0, 0}}});
      row_edges.push_back({{0, t}});
    }
    if (choices.size() <= q) {
      choices.resize(q + 1);
      edges.resize(q + 1);
    }
    choices[q] = std::move(row);
    edges[q] = std::move(row_edges);
  }
  choices.resize(mdp_state.size());
  edges.resize(mdp_state.size());

  std::vector<std::string> names;
  for (StateId q = 0; q < mdp_state.size(); ++q)
    names.push_back("(" + m.state_name(mdp_state[q]) + "|" + b.state_name(automaton_state[q]) + ")");
  std::vector<std::string> actions = m.action_names();
  for (StateId x = 0; x < b.num_states(); ++x) actions.push_back("eps_" + b.state_name(x));

  LabeledMdp product(std::move(names), std::move(actions), m.aps(), 0, std::move(choices));
  return ProductMdp(std::move(product), b, std::move(mdp_state), std::move(automaton_state), std::move(edges),
                    num_mdp_actions);
}

double reward_accepting(AccMask acceptance, double r_p) {
  if (!(r_p > 0.0)) throw Error("r_p must be positive");
  return acceptance != 0 ? r_p : 0.0;
}

// ---------------------------------------------------------------------------
// Accepting frontier

FrontierState::FrontierState(const TGba& b) : remaining_(b.transitions().size(), 0) { refill(b); }

FrontierState::FrontierState(const TGba& b, const std::vector<TransitionId>& remaining)
    : remaining_(b.transitions().size(), 0) {
  for (TransitionId t : remaining) {
    if (b.acceptance(t) == 0) throw Error("frontier may only hold accepting transitions");
    remaining_.at(t) = 1;
  }
}

void FrontierState::refill(const TGba& b) {
  for (TransitionId t = 0; t < remaining_.size(); ++t) remaining_[t] = b.acceptance(t) != 0;
}

std::vector<TransitionId> FrontierState::remaining() const {
  std::vector<TransitionId> out;
  for (TransitionId t = 0; t < remaining_.size(); ++t)
    if (remaining_[t]) out.push_back(t);
  return out;
}

bool FrontierState::advance(TransitionId t, const TGba& b) {
  if (!remaining_.at(t)) return false;
  const AccMask removed = b.acceptance(t);
  bool empty = true;
  for (TransitionId u = 0; u < remaining_.size(); ++u) {
    if (remaining_[u] && (b.acceptance(u) & removed) != 0) remaining_[u] = 0;
    if (remaining_[u]) empty = false;
  }
  if (empty) refill(b);
  return true;
}

FrontierStep frontier_step(const FrontierState& f, TransitionId t, const TGba& b) {
  FrontierStep step{f, false};
  step.reward = step.next.advance(t, b);
  return step;
}

// ---------------------------------------------------------------------------
// Exact policy evaluation

PolicyEvaluation evaluate_policy(const ProductMdp& p, const PositionalPolicy& policy) {
  const LabeledMdp& m = p.mdp();
  const MarkovChain mc = induce_chain(m, policy);
  const RecurrenceDecomposition dec = decompose(mc);

  PolicyEvaluation out;
  out.reachable_states = mc.size();
  out.transient_count = dec.transient.size();
  std::vector<std::size_t> accepting_states;
  for (const auto& cls : dec.recurrent_classes) {
    ClassReport report;
    report.witnesses.assign(p.num_acceptance_sets(), std::nullopt);
    for (std::size_t i : cls) {
      const StateId s = mc.states[i];
      report.states.push_back(s);
      const ActionId a = policy.at(s);
      const std::size_t c = *m.choice_index(s, a);
      const auto& outcomes = m.choices(s)[c].outcomes;
      for (std::size_t o = 0; o < outcomes.size(); ++o) {
        const AccMask acc = p.edge(s, c, o).acceptance;
        report.coverage |= acc;
        for (std::size_t j = 0; j < p.num_acceptance_sets(); ++j)
          if (((acc >> j) & 1u) && !report.witnesses[j]) report.witnesses[j] = Witness{s, a, outcomes[o].next};
      }
    }
    std::sort(report.states.begin(), report.states.end());
    report.accepting = report.coverage == p.all_sets();
    if (report.accepting) accepting_states.insert(accepting_states.end(), cls.begin(), cls.end());
    out.classes.push_back(std::move(report));
  }
  if (!accepting_states.empty()) {
    const ReachResult r = reach_probability(mc, accepting_states);
    out.sat_probability = r.probability[mc.initial];
    out.residual = r.residual;
  }
  out.positively_satisfies = out.sat_probability > 0.0;
  return out;
}

nlohmann::json policy_to_json(const ProductMdp& p, const PositionalPolicy& policy) {
  nlohmann::json j = nlohmann::json::object();
  for (StateId s = 0; s < p.num_states(); ++s)
    if (policy.defined(s)) j[p.state_name(s)] = p.mdp().action_name(policy.at(s));
  return j;
}

nlohmann::json evaluation_to_json(const ProductMdp& p, const PositionalPolicy& policy, const PolicyEvaluation& e) {
  nlohmann::json j;
  j["policy"] = policy_to_json(p, policy);
  j["reachable_states"] = e.reachable_states;
  j["transient_count"] = e.transient_count;
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t k = 0; k < e.classes.size(); ++k) {
    const ClassReport& c = e.classes[k];
    nlohmann::json cj;
    cj["id"] = k;
    cj["states"] = nlohmann::json::array();
    for (StateId s : c.states) cj["states"].push_back(p.state_name(s));
    std::string bitmap;
    for (std::size_t i = 0; i < p.num_acceptance_sets(); ++i) bitmap += ((c.coverage >> i) & 1u) ? '1' : '0';
    cj["coverage"] = bitmap;
    cj["accepting"] = c.accepting;
    cj["witnesses"] = nlohmann::json::array();
    for (std::size_t i = 0; i < c.witnesses.size(); ++i) {
      if (!c.witnesses[i]) continue;
      cj["witnesses"].push_back({{"set", i + 1},
                                 {"from", p.state_name(c.witnesses[i]->from)},
                                 {"action", p.mdp().action_name(c.witnesses[i]->action)},
                                 {"to", p.state_name(c.witnesses[i]->to)}});
    }
    classes.push_back(std::move(cj));
  }
  j["classes"] = std::move(classes);
  j["sat_probability"] = e.sat_probability;
  j["positively_satisfies"] = e.positively_satisfies;
  j["residual"] = e.residual;
  return j;
}

bool check_positional_impossibility(const ProductMdp& p) {
  const std::size_t n = p.num_acceptance_sets();
  struct Departures {
    std::set<StateId> sources;
    std::set<ActionId> actions;
  };
  std::vector<Departures> per_set(n);
  const LabeledMdp& m = p.mdp();
  for (StateId s = 0; s < p.num_states(); ++s) {
    const auto row = m.choices(s);
    for (std::size_t c = 0; c < row.size(); ++c) {
      for (std::size_t o = 0; o < row[c].outcomes.size(); ++o) {
        const AccMask acc = p.edge(s, c, o).acceptance;
        for (std::size_t j = 0; j < n; ++j) {
          if ((acc >> j) & 1u) {
            per_set[j].sources.insert(s);
            per_set[j].actions.insert(row[c].action);
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = per_set[i];
      const auto& b = per_set[j];
      if (a.sources.size() != 1 || b.sources != a.sources) continue;
      const bool disjoint = std::none_of(a.actions.begin(), a.actions.end(),
                                         [&](ActionId x) { return b.actions.count(x) > 0; });
      if (disjoint) return true;
    }
  }
  return false;
}

}  // namespace ldgba
