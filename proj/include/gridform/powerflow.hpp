#ifndef GRIDFORM_POWERFLOW_HPP
#define GRIDFORM_POWERFLOW_HPP

#include <complex>
#include <vector>

#include "gridform/topology.hpp"

namespace gridform {

/// DG outputs and load demands at one step, indexed by case dg/load order.
struct InjectionSet {
  std::vector<double> p_dg, q_dg;
  std::vector<double> p_load, q_load;
};

struct IslandSolution {
  bool converged = false;
  int iterations = 0;
  std::vector<int> bus_indices;  // same order as Island::bus_indices
  std::vector<double> v;         // voltage magnitude per member bus, p.u.
  std::vector<std::complex<double>> v_complex;
  double loss_p = 0.0;           // total active loss, p.u.
  double slack_p = 0.0;          // active power delivered by the DG/slack bus
  double slack_q = 0.0;
  std::vector<int> line_indices; // member lines
  std::vector<double> s_from;    // |S| at sending (DG-side) end per member line
  std::vector<double> s_to;      // |S| at receiving end
};

struct PFSolution {
  std::vector<IslandSolution> islands;
  bool all_converged() const;
};

/// Backward/forward sweep on one radial island, DG bus as slack at 1.0 p.u.
/// Loads are constant-power. Non-convergence is reported, not thrown.
/// warm_start, when given, seeds the voltage profile (Island member order).
IslandSolution solve_island(const NetworkCase& c, const Island& island, const InjectionSet& inj,
                            const std::vector<std::complex<double>>* warm_start = nullptr);

/// Solve every island of islands(tg, cfg); throws on infeasible cfg.
PFSolution solve_all(const TransformedGraph& tg, const SwitchConfig& cfg, const InjectionSet& inj);

} // namespace gridform

#endif
