#ifndef GRIDFORM_BENCH_HPP
#define GRIDFORM_BENCH_HPP

#include <map>
#include <string>
#include <vector>

#include "gridform/training.hpp"

namespace gridform {

/// Static-formation plan: one configuration held over the horizon plus the
/// loads it was forced to shed per step.
struct BaselinePlan {
  SwitchConfig cfg;
  std::vector<std::vector<int>> shed_schedule; // per step, indices into case.loads
  std::vector<double> served;                  // per step, p.u.
};

/// Exhaustive stand-in for the mathematical-programming static scheme: pick
/// the feasible configuration with the best step-0 reward, hold it, and shed
/// whole loads (ascending priority, then descending size) whenever an island
/// has a deficiency or a non-converging flow.
BaselinePlan static_baseline(Environment& env, const Scenario& scenario);

struct ComparisonRow {
  int step = 0;
  double dg_total = 0.0;
  double load_total = 0.0;
  double served_dynamic = 0.0;
  double served_static = 0.0;
  int topo_id = 0;          // dynamic topology in use (1-based, order of first use)
  int switch_ops = 0;       // dynamic switch operations this step
  double loss_dynamic = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double shed_energy_dynamic = 0.0; // sum over steps of unserved power
  double shed_energy_static = 0.0;
  std::vector<SwitchConfig> topologies;        // distinct dynamic configs, by id
  std::map<int, std::vector<double>> worst_voltage; // topo id -> per-bus minimum voltage
};

/// Run the dynamic policy (guard on) and the static baseline on the same
/// scenario; differences are attributable only to the policy.
ComparisonReport compare(const QNetworkParams& params, const NetworkCase& c,
                         const Scenario& scenario, const RewardConfig& rc);

std::string comparison_csv(const ComparisonReport& rep);
std::string voltage_profiles_json(const NetworkCase& c, const ComparisonReport& rep);
std::string metrics_json(const EvalMetrics& m);
std::string timing_json(const EvalMetrics& m);

} // namespace gridform

#endif
