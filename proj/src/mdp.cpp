#include "ldgba/mdp.hpp"

#include <algorithm>
#include <tuple>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "graph.hpp"

namespace ldgba {

LabeledMdp::LabeledMdp(std::vector<std::string> state_names, std::vector<std::string> action_names,
                       std::vector<std::string> aps, StateId initial, std::vector<std::vector<Choice>> choices)
    : state_names_(std::move(state_names)),
      action_names_(std::move(action_names)),
      aps_(std::move(aps)),
      initial_(initial),
      choices_(std::move(choices)) {
  if (state_names_.empty()) throw ValidationError("MDP needs at least one state");
  if (choices_.size() != state_names_.size()) throw ValidationError("choice table does not match state count");
  if (initial_ >= num_states()) throw ValidationError("initial state out of range");
  if (aps_.size() > kMaxPropositions) throw ValidationError("too many atomic propositions");
  const ApSet letter_mask = static_cast<ApSet>((std::size_t{1} << aps_.size()) - 1);
  for (StateId s = 0; s < num_states(); ++s) {
    auto& row = choices_[s];
    if (row.empty()) throw ValidationError("state " + state_names_[s] + " has no enabled action");
    std::sort(row.begin(), row.end(), [](const Choice& x, const Choice& y) { return x.action < y.action; });
    for (std::size_t i = 0; i < row.size(); ++i) {
      Choice& c = row[i];
      // Canonical outcome order, so a model and its serialization sample identically.
      std::stable_sort(c.outcomes.begin(), c.outcomes.end(), [](const Outcome& x, const Outcome& y) {
        return std::tie(x.next, x.label) < std::tie(y.next, y.label);
      });
      if (c.action >= num_actions()) throw ValidationError("action id out of range");
      if (i > 0 && row[i - 1].action == c.action) throw ValidationError("duplicate action at " + state_names_[s]);
      if (c.outcomes.empty()) throw ValidationError("empty distribution at " + state_names_[s]);
      double total = 0.0;
      for (const Outcome& o : c.outcomes) {
        if (o.next >= num_states()) throw ValidationError("successor out of range");
        if (!(o.probability > 0.0) || o.probability > 1.0) throw ValidationError("probability must lie in (0, 1]");
        if ((o.label & ~letter_mask) != 0) throw ValidationError("label outside the proposition universe");
        total += o.probability;
      }
      if (std::abs(total - 1.0) > kStochasticTolerance)
        throw ValidationError("distribution of (" + state_names_[s] + ", " + action_names_[c.action] +
                              ") sums to " + std::to_string(total));
    }
  }
}

std::optional<std::size_t> LabeledMdp::choice_index(StateId s, ActionId a) const {
  const auto row = choices(s);
  auto it = std::lower_bound(row.begin(), row.end(), a, [](const Choice& c, ActionId x) { return c.action < x; });
  if (it == row.end() || it->action != a) return std::nullopt;
  return static_cast<std::size_t>(it - row.begin());
}

const Choice& LabeledMdp::choice(StateId s, ActionId a) const {
  auto i = choice_index(s, a);
  if (!i) throw Error("action " + std::to_string(a) + " not enabled at state " + state_name(s));
  return choices_[s][*i];
}

std::vector<ActionId> LabeledMdp::enabled(StateId s) const {
  std::vector<ActionId> out;
  for (const Choice& c : choices(s)) out.push_back(c.action);
  return out;
}

std::optional<StateId> LabeledMdp::find_state(std::string_view name) const {
  auto it = std::find(state_names_.begin(), state_names_.end(), name);
  if (it == state_names_.end()) return std::nullopt;
  return static_cast<StateId>(it - state_names_.begin());
}

std::optional<ActionId> LabeledMdp::find_action(std::string_view name) const {
  auto it = std::find(action_names_.begin(), action_names_.end(), name);
  if (it == action_names_.end()) return std::nullopt;
  return static_cast<ActionId>(it - action_names_.begin());
}

void PositionalPolicy::set(StateId s, ActionId a) {
  if (s >= choice_.size()) choice_.resize(s + 1);
  choice_[s] = a;
}

ActionId PositionalPolicy::at(StateId s) const {
  if (!defined(s)) throw UndefinedChoice(s);
  return *choice_[s];
}

// ---------------------------------------------------------------------------
// Markov chain analysis

MarkovChain induce_chain(const LabeledMdp& m, const PositionalPolicy& policy) {
  MarkovChain mc;
  std::vector<std::size_t> index(m.num_states(), SIZE_MAX);
  std::deque<StateId> work;
  auto visit = [&](StateId s) {
    if (index[s] == SIZE_MAX) {
      index[s] = mc.states.size();
      mc.states.push_back(s);
      work.push_back(s);
    }
    return index[s];
  };
  mc.initial = visit(m.initial());
  while (!work.empty()) {
    const StateId s = work.front();
    work.pop_front();
    const Choice& c = m.choice(s, policy.at(s));
    std::vector<std::pair<std::size_t, double>> row;
    for (const Outcome& o : c.outcomes) row.emplace_back(visit(o.next), o.probability);
    std::sort(row.begin(), row.end());
    // Merge parallel outcomes (same successor, different labels).
    std::vector<std::pair<std::size_t, double>> merged;
    for (const auto& [j, p] : row) {
      if (!merged.empty() && merged.back().first == j) merged.back().second += p;
      else merged.emplace_back(j, p);
    }
    if (mc.rows.size() <= index[s]) mc.rows.resize(index[s] + 1);
    mc.rows[index[s]] = std::move(merged);
  }
  mc.rows.resize(mc.states.size());
  return mc;
}

RecurrenceDecomposition decompose(const MarkovChain& mc) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < mc.size(); ++i)
    for (const auto& [j, p] : mc.rows[i])
      if (p > 0.0) edges.emplace_back(i, j);
  const auto scc = detail::strongly_connected_components(mc.size(), edges);

  std::vector<char> bottom(scc.count, 1);
  for (const auto& [i, j] : edges)
    if (scc.component[i] != scc.component[j]) bottom[scc.component[i]] = 0;

  RecurrenceDecomposition out;
  std::map<std::size_t, std::size_t> class_of_component;
  for (std::size_t i = 0; i < mc.size(); ++i) {
    const std::size_t c = scc.component[i];
    if (!bottom[c]) {
      out.transient.push_back(i);
      continue;
    }
    auto [it, fresh] = class_of_component.emplace(c, out.recurrent_classes.size());
    if (fresh) out.recurrent_classes.emplace_back();
    out.recurrent_classes[it->second].push_back(i);
  }
  return out;
}

ReachResult reach_probability(const MarkovChain& mc, const std::vector<std::size_t>& target) {
  if (target.empty()) throw Error("reachability target must be nonempty");
  const std::size_t n = mc.size();
  std::vector<char> in_target(n, 0);
  for (std::size_t t : target) {
    if (t >= n) throw Error("target index out of range");
    in_target[t] = 1;
  }

  // Backward closure: states with a positive-probability path to the target.
  std::vector<std::vector<std::size_t>> predecessors(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [j, p] : mc.rows[i])
      if (p > 0.0) predecessors[j].push_back(i);
  std::vector<char> reaches(in_target);
  std::deque<std::size_t> work(target.begin(), target.end());
  while (!work.empty()) {
    const std::size_t j = work.front();
    work.pop_front();
    for (std::size_t i : predecessors[j]) {
      if (!reaches[i]) {
        reaches[i] = 1;
        work.push_back(i);
      }
    }
  }

  std::vector<std::size_t> unknown_index(n, SIZE_MAX);
  std::vector<std::size_t> unknowns;
  for (std::size_t i = 0; i < n; ++i) {
    if (reaches[i] && !in_target[i]) {
      unknown_index[i] = unknowns.size();
      unknowns.push_back(i);
    }
  }

  ReachResult out;
  out.probability.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (in_target[i]) out.probability[i] = 1.0;
  if (unknowns.empty()) return out;

  const auto k = static_cast<Eigen::Index>(unknowns.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (const auto& [j, p] : mc.rows[unknowns[static_cast<std::size_t>(r)]]) {
      if (in_target[j]) b(r) += p;
      else if (unknown_index[j] != SIZE_MAX) a(r, static_cast<Eigen::Index>(unknown_index[j])) -= p;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (std::abs(lu.determinant()) < 1e-300) throw Error("singular reachability system");
  const Eigen::VectorXd x = lu.solve(b);
  out.residual = (a * x - b).lpNorm<Eigen::Infinity>();
  for (Eigen::Index r = 0; r < k; ++r)
    out.probability[unknowns[static_cast<std::size_t>(r)]] = std::clamp(x(r), 0.0, 1.0);
  return out;
}

double max_row_error(const LabeledMdp& m) {
  double worst = 0.0;
  for (StateId s = 0; s < m.num_states(); ++s) {
    for (const Choice& c : m.choices(s)) {
      double total = 0.0;
      for (const Outcome& o : c.outcomes) total += o.probability;
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  return worst;
}

double max_row_error(const MarkovChain& mc) {
  double worst = 0.0;
  for (const auto& row : mc.rows) {
    double total = 0.0;
    for (const auto& [j, p] : row) total += p;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Grid world

namespace {

enum Direction { kRight = 0, kLeft = 1, kUp = 2, kDown = 3 };

constexpr ActionId kToS0 = 4;
constexpr ActionId kToS8 = 11;

StateId grid_move(StateId s, int direction) {
  int row = static_cast<int>(s) / 3, col = static_cast<int>(s) % 3;
  switch (direction) {
    case kRight: ++col; break;
    case kLeft: --col; break;
    case kUp: --row; break;
    case kDown: ++row; break;
  }
  if (row < 0 || row > 2 || col < 0 || col > 2) return s;
  return static_cast<StateId>(row * 3 + col);
}

int opposite(int direction) { return direction ^ 1; }

}  // namespace

LabeledMdp build_gridworld() {
  constexpr ApSet a = 1, b = 2, c = 4;
  std::vector<std::string> states;
  for (int i = 0; i < 9; ++i) states.push_back("s" + std::to_string(i));
  std::vector<std::string> actions = {"Right", "Left", "Up", "Down"};
  std::vector<StateId> room_of_action(4, 0);
  for (StateId i = 0; i < 9; ++i) {
    if (i == 4) continue;
    actions.push_back("to_s" + std::to_string(i));
    room_of_action.push_back(i);
  }

  auto label = [&](StateId s, ActionId act, StateId next) -> ApSet {
    if (next == 2 || next == 3 || next == 5 || next == 6) return c;
    if (s == 4 && next == 0 && act == kToS0) return a;
    if (s == 4 && next == 8 && act == kToS8) return b;
    return 0;
  };
  auto add = [&](std::vector<Outcome>& outcomes, StateId s, ActionId act, StateId next, double p) {
    for (Outcome& o : outcomes) {
      if (o.next == next) {
        o.probability += p;
        return;
      }
    }
    outcomes.push_back({next, p, label(s, act, next)});
  };

  std::vector<std::vector<Choice>> choices(9);
  for (StateId s = 0; s < 9; ++s) {
    if (s == 4) {
      for (ActionId act = 4; act < actions.size(); ++act) {
        Choice ch{act, {}};
        add(ch.outcomes, s, act, room_of_action[act], 0.9);
        add(ch.outcomes, s, act, s, 0.1);
        choices[s].push_back(std::move(ch));
      }
      continue;
    }
    for (int dir = kRight; dir <= kDown; ++dir) {
      const auto act = static_cast<ActionId>(dir);
      Choice ch{act, {}};
      add(ch.outcomes, s, act, grid_move(s, dir), 0.9);
      add(ch.outcomes, s, act, grid_move(s, opposite(dir)), 0.1);
      choices[s].push_back(std::move(ch));
    }
  }
  return LabeledMdp(std::move(states), std::move(actions), {"a", "b", "c"}, 7, std::move(choices));
}

// ---------------------------------------------------------------------------
// Text I/O

namespace {

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string format_probability(double p) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, p);
  return std::string(buffer, ptr);
}

std::string format_label(ApSet label, const std::vector<std::string>& aps) {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < aps.size(); ++i) {
    if ((label >> i) & 1u) {
      out += (first ? "" : ",") + aps[i];
      first = false;
    }
  }
  return out + "}";
}

}  // namespace

LabeledMdp parse_mdp(std::string_view text) {
  std::vector<std::string> states, actions, aps;
  std::optional<std::string> initial;
  using Key = std::tuple<StateId, ActionId, StateId>;
  std::map<std::pair<StateId, ActionId>, std::map<StateId, double>> probs;
  std::map<Key, ApSet> labels;
  std::vector<std::pair<Key, std::size_t>> label_lines;

  auto lookup = [](const std::vector<std::string>& names, const std::string& name, std::size_t line,
                   const char* what) -> std::uint32_t {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ParseError(std::string("undeclared ") + what + " '" + name + "'", line, 1);
    return static_cast<std::uint32_t>(it - names.begin());
  };

  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    auto words = split_words(raw.substr(0, raw.find('#')));
    if (words.empty()) continue;
    const std::string& key = words[0];
    if (key == "states:") {
      states.assign(words.begin() + 1, words.end());
    } else if (key == "actions:") {
      actions.assign(words.begin() + 1, words.end());
    } else if (key == "ap:") {
      aps.assign(words.begin() + 1, words.end());
    } else if (key == "initial:") {
      if (words.size() != 2) throw ParseError("expected 'initial: <state>'", line_no, 1);
      initial = words[1];
    } else if (key == "prob") {
      if (words.size() != 5) throw ParseError("expected 'prob <s> <a> <s'> <p>'", line_no, 1);
      const StateId s = lookup(states, words[1], line_no, "state");
      const ActionId a = lookup(actions, words[2], line_no, "action");
      const StateId t = lookup(states, words[3], line_no, "state");
      double p = 0.0;
      auto [ptr, ec] = std::from_chars(words[4].data(), words[4].data() + words[4].size(), p);
      if (ec != std::errc{} || ptr != words[4].data() + words[4].size())
        throw ParseError("bad probability '" + words[4] + "'", line_no, 1);
      if (p <= 0.0) continue;
      probs[{s, a}][t] += p;
    } else if (key == "label") {
      if (words.size() < 5) throw ParseError("expected 'label <s> <a> <s'> {..}'", line_no, 1);
      const Key k{lookup(states, words[1], line_no, "state"), lookup(actions, words[2], line_no, "action"),
                  lookup(states, words[3], line_no, "state")};
      std::string set;
      for (std::size_t i = 4; i < words.size(); ++i) set += words[i];
      if (set.size() < 2 || set.front() != '{' || set.back() != '}')
        throw ParseError("label set must be written {a,b}", line_no, 1);
      set = set.substr(1, set.size() - 2);
      std::replace(set.begin(), set.end(), ',', ' ');
      ApSet label = 0;
      for (const auto& ap : split_words(set)) label |= ApSet{1} << lookup(aps, ap, line_no, "proposition");
      labels[k] = label;
      label_lines.emplace_back(k, line_no);
    } else {
      throw ParseError("unknown directive '" + key + "'", line_no, 1);
    }
  }
  if (states.empty()) throw ParseError("missing 'states:'", line_no, 1);
  if (!initial) throw ParseError("missing 'initial:'", line_no, 1);
  const StateId init = lookup(states, *initial, line_no, "state");

  for (const auto& [k, line] : label_lines) {
    auto it = probs.find({std::get<0>(k), std::get<1>(k)});
    if (it == probs.end() || !it->second.count(std::get<2>(k)))
      throw ParseError("label on a zero-probability transition", line, 1);
  }

  std::vector<std::vector<Choice>> choices(states.size());
  for (const auto& [sa, dist] : probs) {
    Choice c{sa.second, {}};
    for (const auto& [t, p] : dist) {
      auto it = labels.find({sa.first, sa.second, t});
      c.outcomes.push_back({t, p, it == labels.end() ? ApSet{0} : it->second});
    }
    choices[sa.first].push_back(std::move(c));
  }
  return LabeledMdp(std::move(states), std::move(actions), std::move(aps), init, std::move(choices));
}

LabeledMdp read_mdp_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open MDP file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_mdp(buffer.str());
}

std::string serialize_mdp(const LabeledMdp& m) {
  std::ostringstream out;
  auto list = [&](const char* key, const std::vector<std::string>& names) {
    out << key;
    for (const auto& n : names) out << ' ' << n;
    out << '\n';
  };
  list("states:", m.state_names());
  list("actions:", m.action_names());
  list("ap:", m.aps());
  out << "initial: " << m.state_name(m.initial()) << '\n';
  for (StateId s = 0; s < m.num_states(); ++s)
    for (const Choice& c : m.choices(s))
      for (const Outcome& o : c.outcomes)
        out << "prob " << m.state_name(s) << ' ' << m.action_name(c.action) << ' ' << m.state_name(o.next) << ' '
            << format_probability(o.probability) << '\n';
  for (StateId s = 0; s < m.num_states(); ++s)
    for (const Choice& c : m.choices(s))
      for (const Outcome& o : c.outcomes)
        if (o.label != 0)
          out << "label " << m.state_name(s) << ' ' << m.action_name(c.action) << ' ' << m.state_name(o.next) << ' '
              << format_label(o.label, m.aps()) << '\n';
  return out.str();
}

}  // namespace ldgba
