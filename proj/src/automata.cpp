#include "ldgba/automata.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "graph.hpp"

namespace ldgba {

std::string default_state_name(StateId s) { return "x" + std::to_string(s); }

TGba::TGba(std::vector<std::string> aps, std::vector<std::string> state_names, StateId initial,
           std::size_t num_acceptance_sets, std::vector<Transition> transitions, std::vector<AccMask> acceptance)
    : aps_(std::move(aps)), state_names_(std::move(state_names)), initial_(initial), num_sets_(num_acceptance_sets) {
  if (aps_.size() > kMaxPropositions) throw ValidationError("too many atomic propositions");
  if (std::set<std::string>(aps_.begin(), aps_.end()).size() != aps_.size())
    throw ValidationError("duplicate atomic proposition");
  if (state_names_.empty()) throw ValidationError("automaton needs at least one state");
  if (initial_ >= state_names_.size()) throw ValidationError("initial state out of range");
  if (num_sets_ < 1 || num_sets_ > kMaxAcceptanceSets)
    throw ValidationError("number of accepting sets must be in 1.." + std::to_string(kMaxAcceptanceSets));
  if (transitions.size() != acceptance.size()) throw ValidationError("acceptance list does not match transitions");

  const ApSet letter_mask = static_cast<ApSet>(num_letters() - 1);
  std::map<Transition, AccMask> merged;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const Transition& t = transitions[i];
    if (t.src >= num_states() || t.dst >= num_states())
      throw ValidationError("transition references undeclared state");
    if (!t.letter.is_epsilon() && (t.letter.aps() & ~letter_mask) != 0)
      throw ValidationError("transition letter outside the proposition universe");
    if ((acceptance[i] & ~all_sets()) != 0) throw ValidationError("acceptance index out of range");
    merged[t] |= acceptance[i];
  }
  transitions_.reserve(merged.size());
  acceptance_.reserve(merged.size());
  outgoing_.assign(num_states(), {});
  for (const auto& [t, acc] : merged) {
    outgoing_[t.src].push_back(static_cast<TransitionId>(transitions_.size()));
    transitions_.push_back(t);
    acceptance_.push_back(acc);
  }
}

std::vector<TransitionId> TGba::accepting_set(std::size_t j) const {
  std::vector<TransitionId> out;
  for (TransitionId t = 0; t < transitions_.size(); ++t)
    if (in_set(t, j)) out.push_back(t);
  return out;
}

std::vector<TransitionId> TGba::accepting_transitions() const {
  std::vector<TransitionId> out;
  for (TransitionId t = 0; t < transitions_.size(); ++t)
    if (acceptance_[t] != 0) out.push_back(t);
  return out;
}

std::vector<TransitionId> TGba::successors(StateId s, Letter letter) const {
  std::vector<TransitionId> out;
  for (TransitionId t : outgoing(s))
    if (transitions_[t].letter == letter) out.push_back(t);
  return out;
}

std::optional<TransitionId> TGba::find(StateId src, Letter letter, StateId dst) const {
  auto it = std::lower_bound(transitions_.begin(), transitions_.end(), Transition{src, letter, dst});
  if (it == transitions_.end() || !(*it == Transition{src, letter, dst})) return std::nullopt;
  return static_cast<TransitionId>(it - transitions_.begin());
}

bool TGba::has_epsilon() const {
  return std::any_of(transitions_.begin(), transitions_.end(), [](const Transition& t) { return t.letter.is_epsilon(); });
}

// ---------------------------------------------------------------------------
// Text I/O

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::size_t parse_index(const std::string& text, std::size_t line, const char* what) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError(std::string("expected ") + what + ", got '" + text + "'", line, 1);
  return value;
}

}  // namespace

std::string letter_to_guard(ApSet letter, const std::vector<std::string>& aps) {
  if (aps.empty()) return "true";
  std::string out;
  for (std::size_t i = 0; i < aps.size(); ++i) {
    if (i > 0) out += " & ";
    if (!((letter >> i) & 1u)) out += "!";
    out += aps[i];
  }
  return out;
}

TGba parse_automaton(std::string_view text) {
  std::optional<std::vector<std::string>> aps;
  std::optional<std::size_t> num_states;
  std::optional<std::size_t> initial;
  std::optional<std::size_t> num_sets;
  std::map<std::size_t, std::string> names;
  std::vector<Transition> transitions;
  std::vector<AccMask> acceptance;

  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    std::string line = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (line.empty()) continue;

    auto header = [&](std::string_view key) -> std::optional<std::string> {
      if (line.rfind(key, 0) != 0) return std::nullopt;
      return trim(std::string_view(line).substr(key.size()));
    };
    if (auto v = header("ap:")) {
      aps = split_ws(*v);
      for (const auto& a : *aps) {
        if (a.empty() || a[0] < 'a' || a[0] > 'z' || a == "true" || a == "false" || a == "eps")
          throw ParseError("invalid proposition name '" + a + "'", line_no, 1);
      }
      continue;
    }
    if (auto v = header("states:")) {
      num_states = parse_index(*v, line_no, "state count");
      continue;
    }
    if (auto v = header("initial:")) {
      initial = parse_index(*v, line_no, "initial state");
      continue;
    }
    if (auto v = header("acceptance-sets:")) {
      num_sets = parse_index(*v, line_no, "accepting-set count");
      continue;
    }
    if (auto v = header("name:")) {
      auto parts = split_ws(*v);
      if (parts.size() != 2) throw ParseError("expected 'name: <id> <name>'", line_no, 1);
      names[parse_index(parts[0], line_no, "state id")] = parts[1];
      continue;
    }

    if (!aps || !num_states || !num_sets)
      throw ParseError("transition before 'ap:', 'states:' and 'acceptance-sets:' headers", line_no, 1);

    AccMask acc = 0;
    std::string body = line;
    if (auto open = line.find('['); open != std::string::npos) {
      const auto close = line.find(']', open);
      if (close == std::string::npos) throw ParseError("unterminated acceptance list", line_no, open + 1);
      std::string list = trim(std::string_view(line).substr(open + 1, close - open - 1));
      if (list.rfind("acc:", 0) != 0) throw ParseError("expected 'acc:' list", line_no, open + 2);
      std::string items = list.substr(4);
      std::replace(items.begin(), items.end(), ',', ' ');
      for (const auto& item : split_ws(items)) {
        const std::size_t j = parse_index(item, line_no, "accepting-set index");
        if (j < 1 || j > *num_sets)
          throw ParseError("acceptance index " + item + " out of range 1.." + std::to_string(*num_sets), line_no, open + 1);
        acc |= AccMask{1} << (j - 1);
      }
      body = trim(std::string_view(line).substr(0, open));
    }

    auto words = split_ws(body);
    if (words.size() < 3) throw ParseError("expected '<src> <guard> <dst>'", line_no, 1);
    const std::size_t src = parse_index(words.front(), line_no, "source state");
    const std::size_t dst = parse_index(words.back(), line_no, "target state");
    if (src >= *num_states || dst >= *num_states)
      throw ParseError("reference to undeclared state", line_no, 1);
    std::string guard;
    for (std::size_t i = 1; i + 1 < words.size(); ++i) guard += (i > 1 ? " " : "") + words[i];

    if (guard == "eps") {
      transitions.push_back({static_cast<StateId>(src), Letter::epsilon(), static_cast<StateId>(dst)});
      acceptance.push_back(acc);
      continue;
    }
    LtlFormula g = [&] {
      try {
        return parse_ltl(guard);
      } catch (const ParseError& e) {
        throw ParseError("bad guard '" + guard + "': " + e.what(), line_no, 1);
      }
    }();
    if (!g.is_propositional()) throw ParseError("guard uses a temporal operator", line_no, 1);
    for (const auto& a : g.atoms())
      if (std::find(aps->begin(), aps->end(), a) == aps->end())
        throw ParseError("reference to undeclared proposition '" + a + "'", line_no, 1);
    for (ApSet letter = 0; letter < (ApSet{1} << aps->size()); ++letter) {
      if (eval_propositional(g, *aps, letter)) {
        transitions.push_back({static_cast<StateId>(src), Letter::of(letter), static_cast<StateId>(dst)});
        acceptance.push_back(acc);
      }
    }
  }

  if (!aps) throw ParseError("missing 'ap:' header", line_no, 1);
  if (!num_states) throw ParseError("missing 'states:' header", line_no, 1);
  if (!initial) throw ParseError("missing 'initial:' header", line_no, 1);
  if (!num_sets) throw ParseError("missing 'acceptance-sets:' header", line_no, 1);
  if (*initial >= *num_states) throw ParseError("initial state is undeclared", line_no, 1);

  std::vector<std::string> state_names;
  for (std::size_t s = 0; s < *num_states; ++s) state_names.push_back(default_state_name(static_cast<StateId>(s)));
  for (const auto& [s, name] : names) {
    if (s >= *num_states) throw ParseError("name given for undeclared state " + std::to_string(s), line_no, 1);
    state_names[s] = name;
  }
  return TGba(std::move(*aps), std::move(state_names), static_cast<StateId>(*initial), *num_sets,
              std::move(transitions), std::move(acceptance));
}

TGba read_automaton_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open automaton file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_automaton(buffer.str());
}

std::string serialize_automaton(const TGba& b) {
  std::ostringstream out;
  out << "ap:";
  for (const auto& a : b.aps()) out << ' ' << a;
  out << "\nstates: " << b.num_states() << "\ninitial: " << b.initial()
      << "\nacceptance-sets: " << b.num_acceptance_sets() << '\n';
  for (StateId s = 0; s < b.num_states(); ++s)
    if (b.state_name(s) != default_state_name(s)) out << "name: " << s << ' ' << b.state_name(s) << '\n';
  for (TransitionId t = 0; t < b.transitions().size(); ++t) {
    const Transition& tr = b.transition(t);
    out << tr.src << ' ' << (tr.letter.is_epsilon() ? std::string("eps") : letter_to_guard(tr.letter.aps(), b.aps()))
        << ' ' << tr.dst;
    if (AccMask acc = b.acceptance(t); acc != 0) {
      out << " [acc: ";
      bool first = true;
      for (std::size_t j = 0; j < b.num_acceptance_sets(); ++j) {
        if ((acc >> j) & 1u) {
          out << (first ? "" : ",") << j + 1;
          first = false;
        }
      }
      out << ']';
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Limit determinism

LimitDetPartition check_limit_deterministic(const TGba& b) {
  std::vector<char> final_state(b.num_states(), 0);
  std::deque<StateId> work;
  auto mark = [&](StateId s) {
    if (!final_state[s]) {
      final_state[s] = 1;
      work.push_back(s);
    }
  };
  for (TransitionId t = 0; t < b.transitions().size(); ++t) {
    const Transition& tr = b.transition(t);
    if (tr.letter.is_epsilon()) mark(tr.dst);
    if (b.acceptance(t) != 0) {
      mark(tr.src);
      mark(tr.dst);
    }
  }
  while (!work.empty()) {
    const StateId s = work.front();
    work.pop_front();
    for (TransitionId t : b.outgoing(s))
      if (!b.transition(t).letter.is_epsilon()) mark(b.transition(t).dst);
  }

  auto name = [&](StateId s) { return b.state_name(s); };
  for (TransitionId t = 0; t < b.transitions().size(); ++t) {
    const Transition& tr = b.transition(t);
    if (b.acceptance(t) != 0 && (!final_state[tr.src] || !final_state[tr.dst]))
      throw NotLimitDeterministic(LimitDetCondition::AcceptingOutsideFinal,
                                  "accepting transition from " + name(tr.src) + " leaves X_final");
    if (tr.letter.is_epsilon() && final_state[tr.src])
      throw NotLimitDeterministic(LimitDetCondition::EpsilonPlacement,
                                  "epsilon transition leaves final state " + name(tr.src));
    if (!tr.letter.is_epsilon() && final_state[tr.src] && !final_state[tr.dst])
      throw NotLimitDeterministic(LimitDetCondition::FinalToInitial,
                                  "final state " + name(tr.src) + " moves into X_initial");
  }

  LimitDetPartition out;
  out.single_transition_reading = true;
  for (StateId s = 0; s < b.num_states(); ++s) {
    if (!final_state[s]) {
      out.x_initial.push_back(s);
      continue;
    }
    out.x_final.push_back(s);
    std::size_t into_final = 0;
    std::optional<Letter> previous;
    for (TransitionId t : b.outgoing(s)) {
      const Transition& tr = b.transition(t);
      if (previous && *previous == tr.letter)
        throw NotLimitDeterministic(
            LimitDetCondition::FinalNondeterministic,
            "final state " + name(s) + " has two successors on letter {" +
                letter_to_guard(tr.letter.aps(), b.aps()) +
                "} (per-letter determinism reading; the literal single-transition count also fails)");
      previous = tr.letter;
      if (final_state[tr.dst]) ++into_final;
    }
    if (into_final != 1) out.single_transition_reading = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Degeneralization

TGba degeneralize(const TGba& b) {
  const std::size_t n = b.num_acceptance_sets();
  std::map<std::pair<StateId, std::size_t>, StateId> index;
  std::vector<std::pair<StateId, std::size_t>> states;
  std::deque<StateId> work;
  auto intern = [&](StateId x, std::size_t c) {
    auto [it, fresh] = index.emplace(std::pair{x, c}, static_cast<StateId>(states.size()));
    if (fresh) {
      states.emplace_back(x, c);
      work.push_back(it->second);
    }
    return it->second;
  };
  intern(b.initial(), 0);

  std::vector<Transition> transitions;
  std::vector<AccMask> acceptance;
  while (!work.empty()) {
    const StateId q = work.front();
    work.pop_front();
    const auto [x, c] = states[q];
    for (TransitionId t : b.outgoing(x)) {
      const Transition& tr = b.transition(t);
      const bool advance = !tr.letter.is_epsilon() && b.in_set(t, c);
      const std::size_t next = advance ? (c + 1) % n : c;
      const StateId dst = intern(tr.dst, next);
      transitions.push_back({q, tr.letter, dst});
      acceptance.push_back(advance && c == n - 1 ? 1u : 0u);
    }
  }

  std::vector<std::string> names;
  for (const auto& [x, c] : states) names.push_back(b.state_name(x) + "." + std::to_string(c + 1));
  return TGba(b.aps(), std::move(names), 0, 1, std::move(transitions), std::move(acceptance));
}

// ---------------------------------------------------------------------------
// Lasso acceptance

bool accepts_lasso(const TGba& b, const LassoWord& word) {
  if (word.cycle.empty()) throw Error("lasso word needs a nonempty cycle");
  std::vector<std::size_t> position_of(b.aps().size());
  for (std::size_t i = 0; i < b.aps().size(); ++i) {
    auto it = std::find(word.aps.begin(), word.aps.end(), b.aps()[i]);
    if (it == word.aps.end()) throw Error("word does not define proposition '" + b.aps()[i] + "'");
    position_of[i] = static_cast<std::size_t>(it - word.aps.begin());
  }
  auto project = [&](ApSet letter) {
    ApSet out = 0;
    for (std::size_t i = 0; i < position_of.size(); ++i)
      if ((letter >> position_of[i]) & 1u) out |= ApSet{1} << i;
    return out;
  };

  // Runs take finitely many ε-moves only when the ε-subgraph is acyclic.
  {
    std::vector<std::pair<std::size_t, std::size_t>> eps;
    for (const Transition& tr : b.transitions()) {
      if (!tr.letter.is_epsilon()) continue;
      if (tr.src == tr.dst) throw std::logic_error("automaton has a cycle of epsilon transitions");
      eps.emplace_back(tr.src, tr.dst);
    }
    if (!eps.empty() && detail::strongly_connected_components(b.num_states(), eps).count < b.num_states())
      throw std::logic_error("automaton has a cycle of epsilon transitions");
  }

  // Node (pos, x) is pos * |X| + x.
  const std::size_t num_x = b.num_states();
  const std::size_t num_nodes = word.positions() * num_x;
  struct Edge {
    std::size_t from, to;
    AccMask acc;
    bool epsilon;
  };
  std::vector<Edge> edges;
  std::vector<std::size_t> local(num_nodes, SIZE_MAX);
  std::vector<std::size_t> order;
  std::deque<std::size_t> work;
  auto visit = [&](std::size_t node) {
    if (local[node] == SIZE_MAX) {
      local[node] = order.size();
      order.push_back(node);
      work.push_back(node);
    }
  };
  visit(b.initial());
  while (!work.empty()) {
    const std::size_t node = work.front();
    work.pop_front();
    const std::size_t pos = node / num_x;
    const auto x = static_cast<StateId>(node % num_x);
    const Letter letter = Letter::of(project(word.letter(pos)));
    for (TransitionId t : b.outgoing(x)) {
      const Transition& tr = b.transition(t);
      std::size_t target;
      if (tr.letter.is_epsilon()) target = pos * num_x + tr.dst;
      else if (tr.letter == letter) target = word.successor(pos) * num_x + tr.dst;
      else continue;
      visit(target);
      edges.push_back({node, target, b.acceptance(t), tr.letter.is_epsilon()});
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> local_edges;
  local_edges.reserve(edges.size());
  for (const auto& e : edges) local_edges.emplace_back(local[e.from], local[e.to]);
  const auto scc = detail::strongly_connected_components(order.size(), local_edges);

  std::vector<AccMask> seen(scc.count, 0);
  std::vector<char> has_letter_edge(scc.count, 0);
  for (const auto& e : edges) {
    const std::size_t cu = scc.component[local[e.from]];
    if (cu != scc.component[local[e.to]]) continue;
    seen[cu] |= e.acc;
    if (!e.epsilon) has_letter_edge[cu] = 1;
  }
  for (std::size_t c = 0; c < scc.count; ++c)
    if (has_letter_edge[c] && seen[c] == b.all_sets()) return true;
  return false;
}

// ---------------------------------------------------------------------------

TGba fixture_gfa_gfb_gnc() {
  constexpr ApSet a = 1, b = 2, c = 4;
  std::vector<Transition> transitions;
  std::vector<AccMask> acceptance;
  for (ApSet letter = 0; letter < 8; ++letter) {
    if (letter & c) {
      transitions.push_back({0, Letter::of(letter), 1});
      acceptance.push_back(0);
    } else {
      transitions.push_back({0, Letter::of(letter), 0});
      acceptance.push_back(((letter & a) ? 1u : 0u) | ((letter & b) ? 2u : 0u));
    }
    transitions.push_back({1, Letter::of(letter), 1});
    acceptance.push_back(0);
  }
  return TGba({"a", "b", "c"}, {"x0", "x1"}, 0, 2, std::move(transitions), std::move(acceptance));
}

}  // namespace ldgba
