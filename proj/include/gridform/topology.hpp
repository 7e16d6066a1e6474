#ifndef GRIDFORM_TOPOLOGY_HPP
#define GRIDFORM_TOPOLOGY_HPP

#include <cstdint>
#include <vector>

#include "gridform/grid_model.hpp"

namespace gridform {

/// The case graph plus one virtual node tied to every DG bus, so that a set
/// of radial DG-energized islands corresponds to one spanning tree of the
/// augmented graph. Node indices 0..n-1 are bus indices; node n is virtual.
struct TransformedGraph {
  struct Edge {
    int u = 0, v = 0;    // node indices
    int line_index = -1; // -1 for virtual edges
  };

  NetworkCase base;
  int node_count = 0;   // n + 1
  int virtual_node = 0; // == n
  std::vector<Edge> virtual_edges; // one per DG bus, always energized
  std::vector<Edge> fixed_edges;   // non-switchable lines, always energized
  std::vector<Edge> switch_edges;  // indexed by switch id 0..w-1
  std::vector<int> switch_line;    // line index per switch id

  int switch_count() const { return static_cast<int>(switch_edges.size()); }
};

struct SwitchConfig {
  std::vector<std::uint8_t> alpha; // 1 = closed, 0 = open

  bool operator==(const SwitchConfig&) const = default;
  int closed_count() const;
};

struct Island {
  int dg_index = -1;             // index into case.dgs
  int dg_bus = -1;               // node/bus index of the energizing DG
  std::vector<int> bus_indices;  // members, includes dg_bus
  std::vector<int> line_indices; // member closed lines
};

struct IslandSet {
  std::vector<Island> islands;
};

TransformedGraph transform(const NetworkCase& c);

/// Number of switches that must be closed for the energized graph to be a
/// spanning tree of the transformed graph. Throws when no such count exists.
int required_closed_count(const TransformedGraph& tg);

/// True iff exactly required_closed_count switches are closed and the
/// energized edges (fixed + virtual + closed switches) connect all nodes.
bool is_feasible(const TransformedGraph& tg, const SwitchConfig& cfg);

/// Connected components of the energized graph after deleting the virtual
/// node; requires is_feasible. One island per DG.
IslandSet islands(const TransformedGraph& tg, const SwitchConfig& cfg);

struct EnumerationResult {
  std::uint64_t tested = 0;
  std::vector<SwitchConfig> feasible;
};

/// Brute-force test of all 2^w configurations (guard: w <= 24).
EnumerationResult enumerate_feasible(const TransformedGraph& tg);

/// CSV export of a feasible list: header row of switch line ids, one 0/1 row
/// per configuration.
std::string feasible_csv(const TransformedGraph& tg, const std::vector<SwitchConfig>& cfgs);

} // namespace gridform

#endif
