#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ldgba/product.hpp"

namespace ldgba {

enum class RewardScheme {
  Accepting,  // r_p on every transition of some accepting set
  Frontier,   // r_p when the transition is still in the accepting frontier
};

struct TrainConfig {
  double gamma = 0.95;
  double r_p = 2.0;
  std::size_t episodes = 200;
  std::size_t steps_per_episode = 1000;
  std::size_t sessions = 10;
  double epsilon_numerator = 0.95;
  double alpha_exponent = 0.85;
  std::uint64_t rng_seed = 1;
  std::size_t threads = 0;  // 0: one worker per hardware thread

  // Throws ValidationError on out-of-range values.
  void validate() const;

  static TrainConfig desk();
  static TrainConfig paper();
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// min(1, numerator / n) with n the visit count of the current state.
double epsilon(std::size_t visits, double numerator = 0.95);
// k^-w with k the visit count of the current state-action pair.
double alpha(std::size_t visits, double exponent = 0.85);

// Tabular action values indexed by (product state, choice index); choice
// indices follow ascending action id.
class QTable {
 public:
  explicit QTable(const ProductMdp& p);

  std::size_t num_states() const { return values_.size(); }
  double value(StateId s, std::size_t choice) const { return values_.at(s).at(choice); }
  const std::vector<double>& values(StateId s) const { return values_.at(s); }
  void set(StateId s, std::size_t choice, double v) { values_.at(s).at(choice) = v; }
  double max_value(StateId s) const;
  // Lowest choice index among the maxima.
  std::size_t best_choice(StateId s) const;

  std::size_t state_visits(StateId s) const { return state_visits_.at(s); }
  std::size_t pair_visits(StateId s, std::size_t choice) const { return pair_visits_.at(s).at(choice); }
  std::size_t visit_state(StateId s) { return ++state_visits_.at(s); }
  std::size_t visit_pair(StateId s, std::size_t choice) { return ++pair_visits_.at(s).at(choice); }

 private:
  std::vector<std::vector<double>> values_;
  std::vector<std::size_t> state_visits_;
  std::vector<std::vector<std::size_t>> pair_visits_;
};

// Q(s,a) += alpha · (r + gamma · max_a' Q(s',a') - Q(s,a)).
void q_update(QTable& q, StateId s, std::size_t choice, double reward, StateId next, double gamma, double step);

PositionalPolicy greedy_policy(const QTable& q, const ProductMdp& p);

// A greedy policy counts as satisfying once its exact satisfaction
// probability is within this distance of 1.
inline constexpr double kSatisfiedTolerance = 1e-9;

struct SessionResult {
  std::vector<double> avg_reward;       // per episode: total reward / steps
  std::vector<double> sat_probability;  // greedy policy after each episode
  std::optional<std::size_t> first_satisfying_episode;  // 1-based
  PositionalPolicy policy;
  QTable q;
};

struct LearningCurve {
  std::vector<double> mean;  // per episode, across sessions
  std::vector<double> stddev;
};

struct TrainResult {
  std::vector<SessionResult> sessions;
  LearningCurve curve;
};

// Runs cfg.sessions independent Q-learning sessions on the product. Each
// episode restarts at the product initial state (and a full frontier for the
// frontier scheme); values and visit counts persist across episodes.
TrainResult train(const ProductMdp& p, RewardScheme scheme, const TrainConfig& cfg);

LearningCurve aggregate(const std::vector<SessionResult>& sessions);

struct ValueIterationResult {
  std::vector<double> values;
  std::vector<std::vector<double>> q;  // per state, per choice
  PositionalPolicy policy;
  std::size_t iterations = 0;
};

// Bellman optimality fixed point for the accepting reward, to 1e-10 in sup
// norm. The greedy policy breaks near-ties (1e-9) toward the lowest action id.
ValueIterationResult value_iteration(const ProductMdp& p, double r_p, double gamma);

// CSV documents: "episode,session,avg_reward" per session and
// "episode,mean,std" aggregated.
std::string curves_csv(const TrainResult& r);
std::string aggregate_csv(const LearningCurve& c);
std::string satisfaction_csv(const TrainResult& r);

std::string format_double(double v);

}  // namespace ldgba
