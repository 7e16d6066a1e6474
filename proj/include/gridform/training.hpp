#ifndef GRIDFORM_TRAINING_HPP
#define GRIDFORM_TRAINING_HPP

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "gridform/qnet.hpp"

namespace gridform {

struct Transition {
  InputTensor state_input;
  SwitchConfig action;
  double reward = 0.0;
  InputTensor next_input;
  bool done = false;
};

/// memory1: everything; memory2: reward >= r_std; memory3: done == false.
struct ReplayBuffers {
  std::size_t maxlen = 10000;
  double r_std = 0.5;
  int batch_size1 = 16, batch_size2 = 8, batch_size3 = 8;
  std::deque<Transition> memory1, memory2, memory3;
};

void record(ReplayBuffers& buffers, const Transition& tr);

/// Uniform samples of batch_size1..3 from the three buffers, concatenated.
/// Throws "replay not ready" on an underfilled buffer. Deterministic per seed.
std::vector<Transition> sample_minibatch(const ReplayBuffers& buffers, std::uint64_t seed);

struct ExplorationSchedule {
  double epsilon = 1.0;
  double k = 0.995;
  double epsilon_min = 0.1;
};

void epsilon_step(ExplorationSchedule& schedule);

/// Epsilon-greedy over cardinality-k configurations: explore with a uniform
/// random k-subset of switches, exploit with the decoded greedy action.
SwitchConfig select_action(const ExplorationSchedule& schedule, const QNetworkParams& params,
                           const InputTensor& input, int k, std::mt19937_64& rng);

struct TrainConfig {
  int episodes = 600;
  double gamma = 0.95;
  double learning_rate = 5e-5;
  std::uint64_t seed = 1;
  std::size_t maxlen = 10000;
  int batch_size1 = 16, batch_size2 = 8, batch_size3 = 8;
  std::size_t replay_min = 200; // memory1 fill required before replay starts
  double epsilon0 = 1.0, epsilon_k = 0.995, epsilon_min = 0.1;
  double r_std = 0.5; // in units of r_topo (fraction)
  int kernel = 3;     // conv kernel preset: 3 or 5
  // Greedy-probe convergence detection: this many consecutive full-length
  // probe rollouts counts as sustained success.
  int sustain_window = 30;
  bool stop_on_sustained = false;
};

struct EpisodeLog {
  int episode = 0;
  int survived = 0; // training-rollout steps before game-over (T = full)
  double ret = 0.0; // sum of gamma^t r_t over the training rollout
  double epsilon = 0.0;
  double mean_loss = 0.0;
  int probe_survived = 0; // greedy rollout on the nominal scenario
};

struct TrainResult {
  QNetworkParams params;
  std::vector<EpisodeLog> log;
  bool sustained = false;
  int sustained_at = -1; // first episode of the sustained window
};

/// The CM-DDQN loop: per-episode scenario, guard-off stepping, triple-buffer
/// replay with double-Q targets, target sync on game-over and at the final
/// step. Deterministic per (case, config) pair.
TrainResult train(const NetworkCase& c, const TrainConfig& tc, const RewardConfig& rc);

std::string training_log_csv(const std::vector<EpisodeLog>& log);

struct ScenarioMetrics {
  int feasible_steps = 0;
  bool full_length = false;
  double ret = 0.0;
  int hard_violation_steps = 0;    // infeasible topology actually implemented
  int voltage_violation_steps = 0; // any bus out of [0.95, 1.05]
  int branch_violation_steps = 0;
  bool switch_violation = false;   // any switch exceeded S_upp
  std::vector<double> load_served; // per executed step, p.u.
};

struct EvalMetrics {
  int scenarios = 0;
  int total_steps = 0;
  std::vector<ScenarioMetrics> per_scenario;
  double hard_violation_rate = 0.0;    // over steps
  double voltage_violation_rate = 0.0; // over steps
  double branch_violation_rate = 0.0;  // over steps
  double switch_violation_rate = 0.0;  // over episodes
  double full_length_rate = 0.0;       // over episodes
  double mean_return = 0.0;
  double mean_decision_ms = 0.0; // wall time; excluded from deterministic reports
};

EvalMetrics evaluate(const QNetworkParams& params, const NetworkCase& c, const RewardConfig& rc,
                     int scenarios, std::uint64_t seed, bool guard_on);

/// Per-episode scenario seed used by train/evaluate (split-mix of seed, index).
std::uint64_t scenario_seed(std::uint64_t seed, std::uint64_t index);

} // namespace gridform

#endif
