#include "ldgba/learn.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>
#include <mutex>
#include <thread>

namespace ldgba {

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0, 1)");
  if (!(r_p > 0.0)) throw ValidationError("r_p must be positive");
  if (episodes < 1 || steps_per_episode < 1 || sessions < 1)
    throw ValidationError("episodes, steps_per_episode and sessions must be at least 1");
  if (!(epsilon_numerator > 0.0)) throw ValidationError("epsilon_numerator must be positive");
  // k^-w is square-summable only for w > 1/2 and not summable for w <= 1.
  if (!(alpha_exponent > 0.5 && alpha_exponent <= 1.0))
    throw ValidationError("alpha_exponent must lie in (0.5, 1] to satisfy the Robbins-Monro condition");
}

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

TrainConfig TrainConfig::paper() {
  TrainConfig cfg;
  cfg.episodes = 1000;
  cfg.steps_per_episode = 10000;
  cfg.sessions = 100;
  return cfg;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  if (!j.is_object()) throw ValidationError("training config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "gamma") cfg.gamma = value.get<double>();
    else if (key == "r_p") cfg.r_p = value.get<double>();
    else if (key == "episodes") cfg.episodes = value.get<std::size_t>();
    else if (key == "steps_per_episode") cfg.steps_per_episode = value.get<std::size_t>();
    else if (key == "sessions") cfg.sessions = value.get<std::size_t>();
    else if (key == "epsilon_numerator") cfg.epsilon_numerator = value.get<double>();
    else if (key == "alpha_exponent") cfg.alpha_exponent = value.get<double>();
    else if (key == "rng_seed") cfg.rng_seed = value.get<std::uint64_t>();
    else if (key == "threads") cfg.threads = value.get<std::size_t>();
    else throw ValidationError("unknown training config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"gamma", gamma},
          {"r_p", r_p},
          {"episodes", episodes},
          {"steps_per_episode", steps_per_episode},
          {"sessions", sessions},
          {"epsilon_numerator", epsilon_numerator},
          {"alpha_exponent", alpha_exponent},
          {"rng_seed", rng_seed}};
}

double epsilon(std::size_t visits, double numerator) {
  if (visits < 1) throw Error("epsilon needs a visit count of at least 1");
  return std::min(1.0, numerator / static_cast<double>(visits));
}

double alpha(std::size_t visits, double exponent) {
  if (visits < 1) throw Error("alpha needs a visit count of at least 1");
  return std::pow(static_cast<double>(visits), -exponent);
}

// ---------------------------------------------------------------------------

QTable::QTable(const ProductMdp& p) : state_visits_(p.num_states(), 0) {
  values_.reserve(p.num_states());
  pair_visits_.reserve(p.num_states());
  for (StateId s = 0; s < p.num_states(); ++s) {
    const std::size_t k = p.mdp().choices(s).size();
    values_.emplace_back(k, 0.0);
    pair_visits_.emplace_back(k, 0);
  }
}

double QTable::max_value(StateId s) const {
  const auto& v = values_.at(s);
  return *std::max_element(v.begin(), v.end());
}

std::size_t QTable::best_choice(StateId s) const {
  const auto& v = values_.at(s);
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void q_update(QTable& q, StateId s, std::size_t choice, double reward, StateId next, double gamma, double step) {
  const double current = q.value(s, choice);
  q.set(s, choice, current + step * (reward + gamma * q.max_value(next) - current));
}

PositionalPolicy greedy_policy(const QTable& q, const ProductMdp& p) {
  if (q.num_states() != p.num_states())
    throw Error("Q-table covers " + std::to_string(q.num_states()) + " states, product has " +
                std::to_string(p.num_states()));
  PositionalPolicy policy(p.num_states());
  for (StateId s = 0; s < p.num_states(); ++s) {
    if (q.values(s).size() != p.mdp().choices(s).size()) throw Error("Q-table row does not match product state");
    policy.set(s, p.mdp().choices(s)[q.best_choice(s)].action);
  }
  return policy;
}

// ---------------------------------------------------------------------------
// Training

namespace {

class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t session) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(session), static_cast<std::uint32_t>(session >> 32)};
    engine_.seed(seq);
  }

  // Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t below(std::size_t k) {
    return std::min(k - 1, static_cast<std::size_t>(uniform() * static_cast<double>(k)));
  }

 private:
  std::mt19937_64 engine_;
};

// Uniform among the maximizing choices, drawn from the session stream.
std::size_t greedy_choice(const QTable& q, StateId s, Stream& rng) {
  const auto& v = q.values(s);
  const double best = *std::max_element(v.begin(), v.end());
  const auto ties = static_cast<std::size_t>(std::count(v.begin(), v.end(), best));
  if (ties == 1) return q.best_choice(s);
  std::size_t pick = rng.below(ties);
  for (std::size_t c = 0; c < v.size(); ++c)
    if (v[c] == best && pick-- == 0) return c;
  return q.best_choice(s);
}

SessionResult run_session(const ProductMdp& p, RewardScheme scheme, const TrainConfig& cfg, std::size_t session) {
  const LabeledMdp& m = p.mdp();
  Stream rng(cfg.rng_seed, session);
  QTable q(p);
  SessionResult out{{}, {}, std::nullopt, {}, q};
  out.avg_reward.reserve(cfg.episodes);
  out.sat_probability.reserve(cfg.episodes);

  for (std::size_t episode = 1; episode <= cfg.episodes; ++episode) {
    StateId s = p.initial();
    FrontierState frontier(p.automaton());
    double total = 0.0;
    for (std::size_t step = 0; step < cfg.steps_per_episode; ++step) {
      const auto row = m.choices(s);
      const double eps = epsilon(q.visit_state(s), cfg.epsilon_numerator);
      const std::size_t c = rng.uniform() < eps ? rng.below(row.size()) : greedy_choice(q, s, rng);

      const auto& outcomes = row[c].outcomes;
      double u = rng.uniform();
      std::size_t o = 0;
      for (; o + 1 < outcomes.size(); ++o) {
        if (u < outcomes[o].probability) break;
        u -= outcomes[o].probability;
      }
      const ProductEdge& edge = p.edge(s, c, o);
      const StateId next = outcomes[o].next;

      double reward = 0.0;
      if (scheme == RewardScheme::Accepting) reward = reward_accepting(edge.acceptance, cfg.r_p);
      else if (frontier.advance(edge.automaton_transition, p.automaton())) reward = cfg.r_p;

      q_update(q, s, c, reward, next, cfg.gamma, alpha(q.visit_pair(s, c), cfg.alpha_exponent));
      total += reward;
      s = next;
    }
    out.avg_reward.push_back(total / static_cast<double>(cfg.steps_per_episode));
    const double sat = evaluate_policy(p, greedy_policy(q, p)).sat_probability;
    out.sat_probability.push_back(sat);
    if (!out.first_satisfying_episode && sat >= 1.0 - kSatisfiedTolerance) out.first_satisfying_episode = episode;
  }
  out.policy = greedy_policy(q, p);
  out.q = std::move(q);
  return out;
}

}  // namespace

LearningCurve aggregate(const std::vector<SessionResult>& sessions) {
  LearningCurve c;
  if (sessions.empty()) return c;
  const std::size_t episodes = sessions.front().avg_reward.size();
  const auto n = static_cast<double>(sessions.size());
  for (std::size_t e = 0; e < episodes; ++e) {
    double sum = 0.0;
    for (const auto& s : sessions) sum += s.avg_reward.at(e);
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& s : sessions) sq += (s.avg_reward[e] - mean) * (s.avg_reward[e] - mean);
    c.mean.push_back(mean);
    c.stddev.push_back(std::sqrt(sq / n));
  }
  return c;
}

TrainResult train(const ProductMdp& p, RewardScheme scheme, const TrainConfig& cfg) {
  cfg.validate();
  std::vector<std::optional<SessionResult>> slots(cfg.sessions);
  std::size_t workers = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cfg.sessions);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cfg.sessions;) {
      try {
        slots[i] = run_session(p, scheme, cfg, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  TrainResult out;
  for (auto& s : slots) out.sessions.push_back(std::move(*s));
  out.curve = aggregate(out.sessions);
  return out;
}

// ---------------------------------------------------------------------------
// Value iteration

ValueIterationResult value_iteration(const ProductMdp& p, double r_p, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("gamma must lie in [0, 1)");
  const LabeledMdp& m = p.mdp();
  const std::size_t n = p.num_states();
  ValueIterationResult out;
  out.values.assign(n, 0.0);
  out.q.resize(n);
  for (StateId s = 0; s < n; ++s) out.q[s].assign(m.choices(s).size(), 0.0);

  // ||V_k+1 - V*|| <= gamma / (1 - gamma) ||V_k+1 - V_k||.
  const double stop = gamma > 0.0 ? 1e-10 * (1.0 - gamma) / gamma : 0.0;
  std::vector<double> next(n);
  for (;;) {
    ++out.iterations;
    double delta = 0.0;
    for (StateId s = 0; s < n; ++s) {
      const auto row = m.choices(s);
      double best = -1.0;
      for (std::size_t c = 0; c < row.size(); ++c) {
        double qsa = 0.0;
        for (std::size_t o = 0; o < row[c].outcomes.size(); ++o) {
          const Outcome& oc = row[c].outcomes[o];
          qsa += oc.probability * (reward_accepting(p.edge(s, c, o).acceptance, r_p) + gamma * out.values[oc.next]);
        }
        out.q[s][c] = qsa;
        best = std::max(best, qsa);
      }
      next[s] = best;
      delta = std::max(delta, std::abs(best - out.values[s]));
    }
    out.values.swap(next);
    if (delta <= stop) break;
  }

  out.policy = PositionalPolicy(n);
  for (StateId s = 0; s < n; ++s) {
    const auto& qs = out.q[s];
    const double best = *std::max_element(qs.begin(), qs.end());
    std::size_t pick = 0;
    while (qs[pick] < best - 1e-9) ++pick;
    out.policy.set(s, m.choices(s)[pick].action);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
  return std::string(buffer, ptr);
}

std::string curves_csv(const TrainResult& r) {
  std::ostringstream out;
  out << "# avg_reward = total episode reward / steps_per_episode\n";
  out << "episode,session,avg_reward\n";
  for (std::size_t s = 0; s < r.sessions.size(); ++s)
    for (std::size_t e = 0; e < r.sessions[s].avg_reward.size(); ++e)
      out << e + 1 << ',' << s << ',' << format_double(r.sessions[s].avg_reward[e]) << '\n';
  return out.str();
}

std::string aggregate_csv(const LearningCurve& c) {
  std::ostringstream out;
  out << "# avg_reward = total episode reward / steps_per_episode\n";
  out << "episode,mean,std\n";
  for (std::size_t e = 0; e < c.mean.size(); ++e)
    out << e + 1 << ',' << format_double(c.mean[e]) << ',' << format_double(c.stddev[e]) << '\n';
  return out.str();
}

std::string satisfaction_csv(const TrainResult& r) {
  std::ostringstream out;
  out << "episode,session,sat_probability\n";
  for (std::size_t s = 0; s < r.sessions.size(); ++s)
    for (std::size_t e = 0; e < r.sessions[s].sat_probability.size(); ++e)
      out << e + 1 << ',' << s << ',' << format_double(r.sessions[s].sat_probability[e]) << '\n';
  return out.str();
}

}  // namespace ldgba
