#include "gridform/mdp_env.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace gridform {

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// Box-Muller, one draw per call; keeps the stream layout explicit so scenario
// generation is reproducible per seed.
double normal_draw(std::mt19937_64& rng, double mean, double sigma) {
  if (sigma <= 0.0) return mean;
  std::uniform_real_distribution<double> uni(std::numeric_limits<double>::min(), 1.0);
  double u1 = uni(rng), u2 = uni(rng);
  double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  return mean + sigma * z;
}

double truncated_draw(std::mt19937_64& rng, double expected, double cap) {
  double sigma = 0.2 * expected / 3.0;
  double v = normal_draw(rng, expected, sigma);
  v = std::clamp(v, expected - 3.0 * sigma, expected + 3.0 * sigma);
  return std::clamp(v, 0.0, cap);
}

} // namespace

Scenario nominal_scenario(const NetworkCase& c) {
  Scenario sc;
  for (int t = 0; t < c.horizon; ++t) {
    InjectionSet inj;
    for (const auto& d : c.dgs) {
      inj.p_dg.push_back(d.p_expected[t]);
      inj.q_dg.push_back(d.q_expected[t]);
    }
    for (const auto& ld : c.loads) {
      inj.p_load.push_back(ld.p);
      inj.q_load.push_back(ld.q);
    }
    sc.steps.push_back(std::move(inj));
  }
  return sc;
}

Scenario generate_scenario(const NetworkCase& c, std::uint64_t seed, bool perturb_loads) {
  std::mt19937_64 rng(seed);
  Scenario sc;
  for (int t = 0; t < c.horizon; ++t) {
    InjectionSet inj;
    for (const auto& d : c.dgs) {
      inj.p_dg.push_back(truncated_draw(rng, d.p_expected[t], d.p_max));
      inj.q_dg.push_back(truncated_draw(rng, d.q_expected[t], d.q_max));
    }
    for (const auto& ld : c.loads) {
      if (perturb_loads) {
        inj.p_load.push_back(truncated_draw(rng, ld.p, std::numeric_limits<double>::infinity()));
        inj.q_load.push_back(truncated_draw(rng, ld.q, std::numeric_limits<double>::infinity()));
      } else {
        inj.p_load.push_back(ld.p);
        inj.q_load.push_back(ld.q);
      }
    }
    sc.steps.push_back(std::move(inj));
  }
  return sc;
}

Environment::Environment(const NetworkCase& c, const RewardConfig& rc)
    : case_(c), rcfg_(rc), tg_(transform(c)) {
  k_ = required_closed_count(tg_);
  n_step_ = rcfg_.n_step > 0.0 ? rcfg_.n_step : static_cast<double>(case_.horizon);

  if ((int)case_.lines.size() < (int)case_.buses.size())
    throw std::runtime_error("input encoding requires l >= n");

  // Frozen normalizer ranges: per-bus net injection span and branch parameter
  // maxima from the case nominal data.
  double pmin = 0.0, pmax = 0.0, qmin = 0.0, qmax = 0.0;
  for (const auto& b : case_.buses) {
    double load_p = 0.0, load_q = 0.0, gen_p = 0.0, gen_q = 0.0;
    for (const auto& ld : case_.loads)
      if (ld.bus == b.id) { load_p += ld.p; load_q += ld.q; }
    for (const auto& d : case_.dgs)
      if (d.bus == b.id) { gen_p += d.p_max; gen_q += d.q_max; }
    pmin = std::min(pmin, -load_p);
    pmax = std::max(pmax, gen_p - load_p);
    qmin = std::min(qmin, -load_q);
    qmax = std::max(qmax, gen_q - load_q);
  }
  norm_.p_min = pmin;
  norm_.p_max = pmax > pmin ? pmax : pmin + 1.0;
  norm_.q_min = qmin;
  norm_.q_max = qmax > qmin ? qmax : qmin + 1.0;
  norm_.r_max = 1e-12;
  norm_.x_max = 1e-12;
  for (const auto& l : case_.lines) {
    norm_.r_max = std::max(norm_.r_max, l.r);
    norm_.x_max = std::max(norm_.x_max, l.x);
  }
}

EnvState Environment::reset(const Scenario& scenario) {
  if ((int)scenario.steps.size() != case_.horizon)
    throw std::runtime_error("scenario length != horizon");
  SwitchConfig cfg0;
  for (int a : case_.initial_switches) cfg0.alpha.push_back((std::uint8_t)a);
  if (!is_feasible(tg_, cfg0))
    throw std::runtime_error("initial topology infeasible");
  scenario_ = scenario;
  EnvState s;
  s.t = 0;
  s.cfg = cfg0;
  s.inj = scenario_.steps[0];
  s.op_counts.assign(tg_.switch_count(), 0.0);
  return s;
}

InputTensor Environment::build_input(const EnvState& s) const {
  const int n = (int)case_.buses.size();
  const int l = (int)case_.lines.size();
  InputTensor in;
  in.width = l;
  for (auto& row : in.rows) row.assign(l, 0.0);

  // P, Q: per-node net injection (generation positive, load negative),
  // padded with l - n zeros.
  std::vector<double> p(n, 0.0), q(n, 0.0);
  for (size_t di = 0; di < case_.dgs.size(); ++di) {
    int bi = case_.bus_index(case_.dgs[di].bus);
    p[bi] += s.inj.p_dg[di];
    q[bi] += s.inj.q_dg[di];
  }
  for (size_t li = 0; li < case_.loads.size(); ++li) {
    int bi = case_.bus_index(case_.loads[li].bus);
    p[bi] -= s.inj.p_load[li];
    q[bi] -= s.inj.q_load[li];
  }
  for (int b = 0; b < n; ++b) {
    in.rows[0][b] = clamp01((p[b] - norm_.p_min) / (norm_.p_max - norm_.p_min));
    in.rows[1][b] = clamp01((q[b] - norm_.q_min) / (norm_.q_max - norm_.q_min));
  }

  // R, X: branch parameters, zero for open switch branches.
  std::vector<int> switch_of_line(l, -1);
  for (int sw = 0; sw < tg_.switch_count(); ++sw) switch_of_line[tg_.switch_line[sw]] = sw;
  for (int j = 0; j < l; ++j) {
    int sw = switch_of_line[j];
    bool open_switch = sw >= 0 && s.cfg.alpha[sw] == 0;
    if (!open_switch) {
      in.rows[2][j] = clamp01(case_.lines[j].r / norm_.r_max);
      in.rows[3][j] = clamp01(case_.lines[j].x / norm_.x_max);
    }
    // F: switching frequency at switch columns only.
    if (sw >= 0) in.rows[4][j] = clamp01(s.op_counts[sw] / n_step_);
  }
  return in;
}

Environment::RewardResult Environment::reward(const SwitchConfig& cfg_new, const EnvState& prev,
                                              const PFSolution* pf) const {
  RewardResult res;
  if (pf == nullptr) { // infeasible topology
    res.s_topo = 0;
    res.info.f_topo = -rcfg_.r_topo;
    res.r = -rcfg_.r_topo;
    return res;
  }
  res.s_topo = 1;
  res.info.f_topo = rcfg_.r_topo;

  IslandSet isl = islands(tg_, cfg_new);

  // f_swi: cumulative operation counts through the current action.
  std::vector<double> ops = prev.op_counts;
  for (size_t j = 0; j < ops.size(); ++j)
    ops[j] += std::abs((double)cfg_new.alpha[j] - (double)prev.cfg.alpha[j]);
  double f_swi = 0.0;
  for (double o : ops)
    if (o > rcfg_.s_upp) f_swi += o / n_step_;
  res.info.f_swi = f_swi;

  double total = rcfg_.r_topo - f_swi;
  for (size_t i = 0; i < pf->islands.size(); ++i) {
    const IslandSolution& sol = pf->islands[i];
    const Island& island = isl.islands[i];
    double f_ac, loss;
    if (sol.converged) {
      f_ac = sol.loss_p;
      loss = sol.loss_p;
      for (double v : sol.v)
        if (v < 0.95 || v > 1.05) f_ac += rcfg_.p_vol;
      for (size_t e = 0; e < sol.line_indices.size(); ++e) {
        double upp = case_.lines[sol.line_indices[e]].flow_limit;
        if (sol.s_from[e] > upp) f_ac += (sol.s_from[e] - upp) / rcfg_.b_base;
      }
    } else {
      f_ac = rcfg_.p_nc;
      loss = 0.0;
    }
    // f_pb: active-power deficiency of the island.
    double load_p = 0.0;
    {
      std::vector<char> member(case_.buses.size(), 0);
      for (int b : island.bus_indices) member[b] = 1;
      for (size_t li = 0; li < case_.loads.size(); ++li)
        if (member[case_.bus_index(case_.loads[li].bus)]) load_p += prev.inj.p_load[li];
    }
    double dg_p = prev.inj.p_dg[island.dg_index];
    double deficiency = std::max(0.0, load_p + loss - dg_p);
    res.info.f_ac.push_back(f_ac);
    res.info.f_pb.push_back(deficiency);
    total -= f_ac + deficiency;
  }
  res.r = total;
  return res;
}

StepOutcome Environment::step(const EnvState& s, const SwitchConfig& action, bool online_guard) {
  if (s.t >= case_.horizon) throw std::runtime_error("step on a finished episode");

  StepOutcome out;
  bool feasible = is_feasible(tg_, action);
  SwitchConfig cfg_eff = action;
  if (!feasible && online_guard) {
    // do-nothing guard: discard the proposal, keep the previous topology
    cfg_eff = s.cfg;
    out.action_applied = false;
    feasible = true;
  }

  int next_t = s.t + 1;
  if (feasible) {
    PFSolution pf = solve_all(tg_, cfg_eff, s.inj);
    auto rr = reward(cfg_eff, s, &pf);
    out.reward = rr.r;
    out.s_topo = rr.s_topo;
    out.info = rr.info;
    out.pf = std::move(pf);
    out.done = next_t == case_.horizon;
  } else {
    auto rr = reward(cfg_eff, s, nullptr);
    out.reward = rr.r;
    out.s_topo = 0;
    out.info = rr.info;
    out.done = true;
  }

  out.next.t = next_t;
  out.next.cfg = cfg_eff;
  out.next.op_counts = s.op_counts;
  for (size_t j = 0; j < out.next.op_counts.size(); ++j)
    out.next.op_counts[j] += std::abs((double)cfg_eff.alpha[j] - (double)s.cfg.alpha[j]);
  out.next.inj = scenario_.steps[std::min(next_t, case_.horizon - 1)];
  return out;
}

} // namespace gridform
