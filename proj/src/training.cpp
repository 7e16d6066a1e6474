#include "gridform/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gridform {

std::uint64_t scenario_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 of the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void record(ReplayBuffers& buffers, const Transition& tr) {
  auto push = [&](std::deque<Transition>& q) {
    q.push_back(tr);
    if (q.size() > buffers.maxlen) q.pop_front();
  };
  push(buffers.memory1);
  if (tr.reward >= buffers.r_std) push(buffers.memory2);
  if (!tr.done) push(buffers.memory3);
}

std::vector<Transition> sample_minibatch(const ReplayBuffers& buffers, std::uint64_t seed) {
  if ((int)buffers.memory1.size() < buffers.batch_size1 ||
      (int)buffers.memory2.size() < buffers.batch_size2 ||
      (int)buffers.memory3.size() < buffers.batch_size3)
    throw std::runtime_error("replay not ready");
  std::mt19937_64 rng(seed);
  std::vector<Transition> out;
  auto draw = [&](const std::deque<Transition>& q, int count) {
    for (int i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> uni(0, q.size() - 1);
      out.push_back(q[uni(rng)]);
    }
  };
  draw(buffers.memory1, buffers.batch_size1);
  draw(buffers.memory2, buffers.batch_size2);
  draw(buffers.memory3, buffers.batch_size3);
  return out;
}

void epsilon_step(ExplorationSchedule& s) {
  double next = s.k * s.epsilon;
  s.epsilon = next > s.epsilon_min ? next : s.epsilon_min;
}

SwitchConfig select_action(const ExplorationSchedule& schedule, const QNetworkParams& params,
                           const InputTensor& input, int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  if (uni(rng) < schedule.epsilon) {
    // uniform k-subset via partial Fisher-Yates
    int w = params.shape.outputs;
    std::vector<int> idx(w);
    for (int i = 0; i < w; ++i) idx[i] = i;
    SwitchConfig cfg;
    cfg.alpha.assign(w, 0);
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<int> pick(i, w - 1);
      std::swap(idx[i], idx[pick(rng)]);
      cfg.alpha[idx[i]] = 1;
    }
    return cfg;
  }
  return decode_action(forward(params, input), k);
}

namespace {

// Greedy guard-off rollout on the nominal scenario; returns surviving steps.
int greedy_probe(Environment& env, const QNetworkParams& params, const Scenario& sc, int k) {
  EnvState s = env.reset(sc);
  int survived = 0;
  for (int t = 0; t < env.network_case().horizon; ++t) {
    SwitchConfig a = decode_action(forward(params, env.build_input(s)), k);
    StepOutcome out = env.step(s, a, false);
    if (out.s_topo == 0) break;
    ++survived;
    s = out.next;
    if (out.done) break;
  }
  return survived;
}

} // namespace

TrainResult train(const NetworkCase& c, const TrainConfig& tc, const RewardConfig& rc) {
  Environment env(c, rc);
  const int k = env.required_closed();
  const int T = c.horizon;

  QNetShape shape;
  shape.width = (int)c.lines.size();
  shape.outputs = env.graph().switch_count();
  shape.k1 = shape.k2 = tc.kernel;

  QNetworkParams online = init_params(shape, tc.seed);
  QNetworkParams target = online;
  AdamState opt;
  opt.lr = tc.learning_rate;

  ReplayBuffers buffers;
  buffers.maxlen = tc.maxlen;
  buffers.r_std = tc.r_std * rc.r_topo;
  buffers.batch_size1 = tc.batch_size1;
  buffers.batch_size2 = tc.batch_size2;
  buffers.batch_size3 = tc.batch_size3;

  ExplorationSchedule sched{tc.epsilon0, tc.epsilon_k, tc.epsilon_min};
  std::mt19937_64 act_rng(scenario_seed(tc.seed, 0xA5A5A5A5ULL));
  Scenario probe_sc = nominal_scenario(c);

  TrainResult res;
  int consecutive_full_probes = 0;
  std::uint64_t replay_counter = 0;

  for (int ep = 0; ep < tc.episodes; ++ep) {
    Scenario sc = generate_scenario(c, scenario_seed(tc.seed, (std::uint64_t)ep));
    EnvState s = env.reset(sc);

    EpisodeLog log;
    log.episode = ep;
    log.epsilon = sched.epsilon;
    double loss_sum = 0.0;
    int loss_count = 0;
    double discount = 1.0;

    for (int t = 0; t < T; ++t) {
      InputTensor input = env.build_input(s);
      SwitchConfig action = select_action(sched, online, input, k, act_rng);
      StepOutcome out = env.step(s, action, false);
      InputTensor next_input = env.build_input(out.next);

      record(buffers, {input, action, out.reward, next_input, out.done});
      log.ret += discount * out.reward;
      discount *= tc.gamma;

      bool replay_ready = buffers.memory1.size() >= tc.replay_min &&
                          (int)buffers.memory1.size() >= buffers.batch_size1 &&
                          (int)buffers.memory2.size() >= buffers.batch_size2 &&
                          (int)buffers.memory3.size() >= buffers.batch_size3;
      if (replay_ready) {
        auto batch = sample_minibatch(buffers, scenario_seed(tc.seed, 0x7E9A13ULL + replay_counter));
        ++replay_counter;
        std::vector<double> grad(online.shape.total(), 0.0);
        double batch_loss = 0.0;
        for (const Transition& tr : batch) {
          double y = td_target(tr.reward, tr.done, target, tr.next_input, k, tc.gamma);
          ForwardCache cache;
          std::vector<double> v = forward(online, tr.state_input, &cache);
          double q = q_value(v, k);
          batch_loss += (y - q) * (y - q);
          std::vector<double> g = backward(online, cache, k, y);
          for (size_t i = 0; i < grad.size(); ++i) grad[i] += g[i] / batch.size();
        }
        batch_loss /= batch.size();
        if (!std::isfinite(batch_loss)) throw std::runtime_error("training diverged: non-finite loss");
        apply_update(online, grad, opt);
        loss_sum += batch_loss;
        ++loss_count;
      }

      if (out.s_topo == 0) {
        target = online; // sync on game-over
        break;
      }
      ++log.survived;
      s = out.next;

      if (t + 1 == T) target = online; // sync at the episode-final step
      if (out.done) break;
    }

    log.mean_loss = loss_count ? loss_sum / loss_count : 0.0;
    log.probe_survived = greedy_probe(env, online, probe_sc, k);
    res.log.push_back(log);

    if (log.probe_survived == T) {
      ++consecutive_full_probes;
      if (!res.sustained && consecutive_full_probes >= tc.sustain_window) {
        res.sustained = true;
        res.sustained_at = ep - tc.sustain_window + 1;
        if (tc.stop_on_sustained) break;
      }
    } else {
      consecutive_full_probes = 0;
    }

    epsilon_step(sched);
  }

  res.params = online;
  return res;
}

std::string training_log_csv(const std::vector<EpisodeLog>& log) {
  std::ostringstream os;
  os << "episode,survived,return,epsilon,mean_loss,probe_survived\n";
  os.precision(17);
  for (const auto& e : log)
    os << e.episode << ',' << e.survived << ',' << e.ret << ',' << e.epsilon << ','
       << e.mean_loss << ',' << e.probe_survived << '\n';
  return os.str();
}

EvalMetrics evaluate(const QNetworkParams& params, const NetworkCase& c, const RewardConfig& rc,
                     int scenarios, std::uint64_t seed, bool guard_on) {
  EvalMetrics m;
  m.scenarios = scenarios;
  if (scenarios == 0) return m;

  Environment env(c, rc);
  const int k = env.required_closed();
  const int T = c.horizon;
  double total_load;
  double decision_ns = 0.0;
  int decisions = 0;

  for (int sidx = 0; sidx < scenarios; ++sidx) {
    Scenario sc = generate_scenario(c, scenario_seed(seed, (std::uint64_t)sidx));
    EnvState s = env.reset(sc);
    ScenarioMetrics sm;
    double discount = 1.0;

    for (int t = 0; t < T; ++t) {
      auto t0 = std::chrono::steady_clock::now();
      InputTensor input = env.build_input(s);
      SwitchConfig a = decode_action(forward(params, input), k);
      auto t1 = std::chrono::steady_clock::now();
      decision_ns += std::chrono::duration<double, std::nano>(t1 - t0).count();
      ++decisions;

      StepOutcome out = env.step(s, a, guard_on);
      sm.ret += discount * out.reward;
      discount *= rc.gamma;
      m.total_steps += 1;

      if (out.s_topo == 0) {
        sm.hard_violation_steps += 1;
        break; // guard off: game over
      }
      sm.feasible_steps += 1;

      // served load = demand minus island deficiencies
      total_load = 0.0;
      for (double p : s.inj.p_load) total_load += p;
      double unserved = 0.0;
      for (double d : out.info.f_pb) unserved += d;
      sm.load_served.push_back(std::max(0.0, total_load - unserved));

      if (out.pf) {
        bool volt = false, branch = false;
        for (const auto& isl : out.pf->islands) {
          if (!isl.converged) continue;
          for (double v : isl.v)
            if (v < 0.95 || v > 1.05) volt = true;
          for (size_t e = 0; e < isl.line_indices.size(); ++e)
            if (isl.s_from[e] > c.lines[isl.line_indices[e]].flow_limit) branch = true;
        }
        if (volt) sm.voltage_violation_steps += 1;
        if (branch) sm.branch_violation_steps += 1;
      }
      for (double o : out.next.op_counts)
        if (o > rc.s_upp) sm.switch_violation = true;

      s = out.next;
      if (out.done) break;
    }
    sm.full_length = sm.feasible_steps == T;
    m.per_scenario.push_back(std::move(sm));
  }

  int hard = 0, volt = 0, branch = 0, swi = 0, full = 0;
  double ret_sum = 0.0;
  for (const auto& sm : m.per_scenario) {
    hard += sm.hard_violation_steps;
    volt += sm.voltage_violation_steps;
    branch += sm.branch_violation_steps;
    swi += sm.switch_violation ? 1 : 0;
    full += sm.full_length ? 1 : 0;
    ret_sum += sm.ret;
  }
  m.hard_violation_rate = double(hard) / m.total_steps;
  m.voltage_violation_rate = double(volt) / m.total_steps;
  m.branch_violation_rate = double(branch) / m.total_steps;
  m.switch_violation_rate = double(swi) / scenarios;
  m.full_length_rate = double(full) / scenarios;
  m.mean_return = ret_sum / scenarios;
  m.mean_decision_ms = decisions ? decision_ns / decisions / 1e6 : 0.0;
  return m;
}

} // namespace gridform
