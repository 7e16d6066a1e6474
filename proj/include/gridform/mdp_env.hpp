#ifndef GRIDFORM_MDP_ENV_HPP
#define GRIDFORM_MDP_ENV_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "gridform/powerflow.hpp"

namespace gridform {

struct EnvState {
  int t = 0;
  SwitchConfig cfg;
  InjectionSet inj;
  std::vector<double> op_counts; // cumulative |alpha_s - alpha_{s-1}| per switch
};

/// 5 x l network encoding [P; Q; R; X; F], every entry in [0, 1].
struct InputTensor {
  int width = 0;
  std::array<std::vector<double>, 5> rows; // P, Q, R, X, F

  bool operator==(const InputTensor&) const = default;
};

struct RewardConfig {
  double r_topo = 1.0;  // feasibility reward magnitude
  double p_vol = 0.05;  // per-bus voltage penalty
  double b_base = 1.0;  // branch-overflow penalty base
  double s_upp = 4.0;   // per-switch operation limit
  double n_step = 0.0;  // switch-penalty normalizer; 0 = use case horizon T
  double gamma = 0.95;
  double p_nc = 1.0;    // non-convergence penalty per island
};

struct RewardBreakdown {
  double f_topo = 0.0;
  std::vector<double> f_ac; // per island
  double f_swi = 0.0;
  std::vector<double> f_pb; // per island
};

struct StepOutcome {
  EnvState next;
  double reward = 0.0;
  bool done = false;
  int s_topo = 1;
  bool action_applied = true; // false when the do-nothing guard discarded it
  RewardBreakdown info;
  std::optional<PFSolution> pf;
};

struct Scenario {
  std::vector<InjectionSet> steps; // length T
};

/// Frozen per-row min-max ranges, derived from case nominal ranges at
/// environment construction.
struct InputNormalizer {
  double p_min = 0.0, p_max = 1.0;
  double q_min = 0.0, q_max = 1.0;
  double r_max = 1.0, x_max = 1.0;
};

/// Draw DG output trajectories: each step value ~ Normal(expected, sigma)
/// with 3*sigma = 0.2*expected, truncated to +-3 sigma and clipped to
/// [0, p_max]. Loads are deterministic unless perturb_loads is set.
Scenario generate_scenario(const NetworkCase& c, std::uint64_t seed, bool perturb_loads = false);

/// Nominal scenario: expected trajectories, no noise.
Scenario nominal_scenario(const NetworkCase& c);

/// The MMGF decision process. Shared inputs (case, graph, normalizer) are
/// immutable; the scenario set by reset is the only per-episode state, so one
/// instance serves one rollout at a time.
class Environment {
 public:
  Environment(const NetworkCase& c, const RewardConfig& rc);

  const NetworkCase& network_case() const { return case_; }
  const TransformedGraph& graph() const { return tg_; }
  const RewardConfig& reward_config() const { return rcfg_; }
  const InputNormalizer& normalizer() const { return norm_; }
  int required_closed() const { return k_; }
  const Scenario& scenario() const { return scenario_; }

  EnvState reset(const Scenario& scenario);
  InputTensor build_input(const EnvState& s) const;

  /// Reward of taking cfg_new from `prev` (whose op_counts predate the
  /// action). pf may be null when cfg_new is infeasible.
  struct RewardResult { double r; int s_topo; RewardBreakdown info; };
  RewardResult reward(const SwitchConfig& cfg_new, const EnvState& prev, const PFSolution* pf) const;

  StepOutcome step(const EnvState& s, const SwitchConfig& action, bool online_guard);

 private:
  NetworkCase case_;
  RewardConfig rcfg_;
  TransformedGraph tg_;
  InputNormalizer norm_;
  int k_ = 0;
  Scenario scenario_;
  double n_step_ = 1.0;
};

} // namespace gridform

#endif
