#include "gridform/bench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gridform {

namespace {

// Shedding order: ascending priority, then descending size, then load index.
std::vector<int> shed_order(const NetworkCase& c, const std::vector<int>& load_indices) {
  std::vector<int> order = load_indices;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (c.loads[a].priority != c.loads[b].priority)
      return c.loads[a].priority < c.loads[b].priority;
    if (c.loads[a].p != c.loads[b].p) return c.loads[a].p > c.loads[b].p;
    return a < b;
  });
  return order;
}

std::vector<int> island_loads(const NetworkCase& c, const Island& island) {
  std::vector<char> member(c.buses.size(), 0);
  for (int b : island.bus_indices) member[b] = 1;
  std::vector<int> out;
  for (size_t li = 0; li < c.loads.size(); ++li)
    if (member[c.bus_index(c.loads[li].bus)]) out.push_back((int)li);
  return out;
}

} // namespace

BaselinePlan static_baseline(Environment& env, const Scenario& scenario) {
  const NetworkCase& c = env.network_case();
  const TransformedGraph& tg = env.graph();
  const int T = c.horizon;

  EnumerationResult enumr = enumerate_feasible(tg);
  if (enumr.feasible.empty()) throw std::runtime_error("no feasible configuration");

  // Pick the configuration with the best step-0 reward.
  EnvState s0 = env.reset(scenario);
  BaselinePlan plan;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& cfg : enumr.feasible) {
    PFSolution pf = solve_all(tg, cfg, scenario.steps[0]);
    auto rr = env.reward(cfg, s0, &pf);
    if (rr.r > best) {
      best = rr.r;
      plan.cfg = cfg;
    }
  }

  IslandSet isl = islands(tg, plan.cfg);
  for (int t = 0; t < T; ++t) {
    const InjectionSet& inj = scenario.steps[t];
    std::vector<int> shed;
    double served = 0.0;
    for (const auto& island : isl.islands) {
      std::vector<int> members = island_loads(c, island);
      std::vector<char> kept(c.loads.size(), 1);
      std::vector<int> order = shed_order(c, members);
      size_t next_shed = 0;
      while (true) {
        InjectionSet trimmed = inj;
        double load_p = 0.0;
        for (int li : members) {
          if (!kept[li]) { trimmed.p_load[li] = 0.0; trimmed.q_load[li] = 0.0; }
          else load_p += inj.p_load[li];
        }
        IslandSolution sol = solve_island(c, island, trimmed);
        double loss = sol.converged ? sol.loss_p : 0.0;
        double deficiency = load_p + loss - inj.p_dg[island.dg_index];
        if ((deficiency <= 0.0 && sol.converged) || next_shed >= order.size()) {
          served += load_p - std::max(0.0, deficiency);
          break;
        }
        kept[order[next_shed]] = 0;
        shed.push_back(order[next_shed]);
        ++next_shed;
      }
    }
    std::sort(shed.begin(), shed.end());
    plan.shed_schedule.push_back(std::move(shed));
    plan.served.push_back(served);
  }
  return plan;
}

ComparisonReport compare(const QNetworkParams& params, const NetworkCase& c,
                         const Scenario& scenario, const RewardConfig& rc) {
  Environment env(c, rc);
  const int k = env.required_closed();
  const int T = c.horizon;

  BaselinePlan plan = static_baseline(env, scenario);

  ComparisonReport rep;
  EnvState s = env.reset(scenario);
  for (int t = 0; t < T; ++t) {
    InputTensor input = env.build_input(s);
    SwitchConfig a = decode_action(forward(params, input), k);
    StepOutcome out = env.step(s, a, true); // online guard on

    ComparisonRow row;
    row.step = t;
    for (double p : s.inj.p_dg) row.dg_total += p;
    for (double p : s.inj.p_load) row.load_total += p;
    double unserved = 0.0;
    for (double d : out.info.f_pb) unserved += d;
    row.served_dynamic = std::max(0.0, row.load_total - unserved);
    row.served_static = plan.served[t];
    for (size_t j = 0; j < a.alpha.size(); ++j)
      row.switch_ops += std::abs((int)out.next.cfg.alpha[j] - (int)s.cfg.alpha[j]);
    if (out.pf)
      for (const auto& isl : out.pf->islands) row.loss_dynamic += isl.loss_p;

    // topology id bookkeeping + worst-case (minimum) voltage per topology
    const SwitchConfig& used = out.next.cfg;
    int id = 0;
    for (size_t i = 0; i < rep.topologies.size(); ++i)
      if (rep.topologies[i] == used) id = (int)i + 1;
    if (id == 0) {
      rep.topologies.push_back(used);
      id = (int)rep.topologies.size();
      rep.worst_voltage[id] = std::vector<double>(c.buses.size(), 2.0);
    }
    row.topo_id = id;
    if (out.pf) {
      auto& wv = rep.worst_voltage[id];
      for (const auto& isl : out.pf->islands) {
        if (!isl.converged) continue;
        for (size_t b = 0; b < isl.bus_indices.size(); ++b)
          wv[isl.bus_indices[b]] = std::min(wv[isl.bus_indices[b]], isl.v[b]);
      }
    }

    rep.shed_energy_dynamic += row.load_total - row.served_dynamic;
    rep.shed_energy_static += row.load_total - row.served_static;
    rep.rows.push_back(row);
    s = out.next;
  }
  return rep;
}

std::string comparison_csv(const ComparisonReport& rep) {
  std::ostringstream os;
  os.precision(17);
  os << "step,dg_total,load_total,served_dynamic,served_static,topo_id,switch_ops,loss_dynamic\n";
  for (const auto& r : rep.rows)
    os << r.step << ',' << r.dg_total << ',' << r.load_total << ',' << r.served_dynamic << ','
       << r.served_static << ',' << r.topo_id << ',' << r.switch_ops << ',' << r.loss_dynamic << '\n';
  return os.str();
}

std::string voltage_profiles_json(const NetworkCase& c, const ComparisonReport& rep) {
  nlohmann::ordered_json j;
  j["topologies"] = nlohmann::ordered_json::array();
  for (size_t i = 0; i < rep.topologies.size(); ++i) {
    nlohmann::ordered_json jt;
    jt["id"] = (int)i + 1;
    std::vector<int> alpha(rep.topologies[i].alpha.begin(), rep.topologies[i].alpha.end());
    jt["alpha"] = alpha;
    nlohmann::ordered_json volts = nlohmann::ordered_json::array();
    const auto& wv = rep.worst_voltage.at((int)i + 1);
    for (size_t b = 0; b < c.buses.size(); ++b) {
      nlohmann::ordered_json jv;
      jv["bus"] = c.buses[b].id;
      if (wv[b] > 1.5) jv["v_min"] = nullptr; // bus never energized under this topology
      else jv["v_min"] = wv[b];
      volts.push_back(jv);
    }
    jt["worst_voltage"] = volts;
    j["topologies"].push_back(jt);
  }
  return j.dump(2);
}

std::string metrics_json(const EvalMetrics& m) {
  nlohmann::ordered_json j;
  j["scenarios"] = m.scenarios;
  j["total_steps"] = m.total_steps;
  j["hard_violation_rate"] = m.hard_violation_rate;
  j["voltage_violation_rate"] = m.voltage_violation_rate;
  j["switch_violation_rate"] = m.switch_violation_rate;
  j["branch_violation_rate"] = m.branch_violation_rate;
  j["full_length_rate"] = m.full_length_rate;
  j["mean_return"] = m.mean_return;
  return j.dump(2);
}

std::string timing_json(const EvalMetrics& m) {
  nlohmann::ordered_json j;
  j["mean_decision_ms"] = m.mean_decision_ms;
  return j.dump(2);
}

} // namespace gridform
