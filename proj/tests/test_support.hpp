#ifndef GRIDFORM_TESTS_SUPPORT_HPP
#define GRIDFORM_TESTS_SUPPORT_HPP

#include <string>
#include <vector>

#include "gridform/grid_model.hpp"

#ifndef GRIDFORM_CASES_DIR
#define GRIDFORM_CASES_DIR "cases"
#endif

namespace support {

inline std::string case_path(const char* name) {
  return std::string(GRIDFORM_CASES_DIR) + "/" + name;
}

// Minimal feeder: DG bus feeding one load through a single line.
// All quantities already in p.u.
inline gridform::NetworkCase two_bus(bool switchable = false) {
  gridform::NetworkCase c;
  c.name = "two_bus";
  c.s_base = 100.0;
  c.horizon = 4;
  c.buses = {{1, gridform::BusKind::dg, 1.0}, {2, gridform::BusKind::plain, 1.0}};
  c.lines = {{1, 1, 2, 0.01, 0.02, 1.0, switchable}};
  gridform::DGUnit dg;
  dg.bus = 1;
  dg.p_max = 1.0;
  dg.q_max = 1.0;
  dg.p_expected.assign(c.horizon, 0.45);
  dg.q_expected.assign(c.horizon, 0.2);
  c.dgs = {dg};
  c.loads = {{2, 0.1, 0.05, 0}};
  if (switchable) c.initial_switches = {1};
  return c;
}

// Triangle: fixed line 1-2, switchable 2-3 and 1-3; exactly one of the two
// switches must be closed (k = 1), so there are two feasible configurations.
// l = n = 3, so it also works as an environment case.
inline gridform::NetworkCase triangle(double dg_p = 1.0, double load2_p = 0.2,
                                      double load3_p = 0.0) {
  gridform::NetworkCase c;
  c.name = "triangle";
  c.s_base = 100.0;
  c.horizon = 5;
  c.buses = {{1, gridform::BusKind::dg, 1.0},
             {2, gridform::BusKind::plain, 1.0},
             {3, gridform::BusKind::plain, 1.0}};
  c.lines = {{1, 1, 2, 0.01, 0.02, 1.0, false},
             {2, 2, 3, 0.01, 0.02, 1.0, true},
             {3, 1, 3, 0.01, 0.02, 1.0, true}};
  gridform::DGUnit dg;
  dg.bus = 1;
  dg.p_max = 2.0;
  dg.q_max = 1.0;
  dg.p_expected.assign(c.horizon, dg_p);
  dg.q_expected.assign(c.horizon, 0.3);
  c.dgs = {dg};
  c.loads = {{2, load2_p, load2_p * 0.3, 1}};
  if (load3_p > 0.0) c.loads.push_back({3, load3_p, load3_p * 0.3, 0});
  c.initial_switches = {1, 0};
  return c;
}

// Four-bus ring with a chord, one DG, everything switchable (k = 3). Closing
// {1-2, 2-3, 1-3} gives exactly k closed switches that form a cycle.
inline gridform::NetworkCase ring_with_chord() {
  gridform::NetworkCase c;
  c.name = "ring_chord";
  c.s_base = 100.0;
  c.horizon = 2;
  c.buses = {{1, gridform::BusKind::dg, 1.0},
             {2, gridform::BusKind::plain, 1.0},
             {3, gridform::BusKind::plain, 1.0},
             {4, gridform::BusKind::plain, 1.0}};
  c.lines = {{1, 1, 2, 0.01, 0.02, 1.0, true},
             {2, 2, 3, 0.01, 0.02, 1.0, true},
             {3, 3, 4, 0.01, 0.02, 1.0, true},
             {4, 4, 1, 0.01, 0.02, 1.0, true},
             {5, 1, 3, 0.01, 0.02, 1.0, true}};
  gridform::DGUnit dg;
  dg.bus = 1;
  dg.p_max = 1.0;
  dg.q_max = 0.5;
  dg.p_expected.assign(c.horizon, 0.5);
  dg.q_expected.assign(c.horizon, 0.1);
  c.dgs = {dg};
  c.loads = {{3, 0.1, 0.03, 0}};
  c.initial_switches = {1, 1, 1, 0, 0};
  return c;
}

} // namespace support

#endif
