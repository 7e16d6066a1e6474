#include "gridform/topology.hpp"

#include <cassert>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gridform {

namespace {

struct UnionFind {
  std::vector<int> parent;
  int components;
  explicit UnionFind(int n) : parent(n), components(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a); b = find(b);
    if (a == b) return false;
    parent[a] = b;
    --components;
    return true;
  }
};

} // namespace

int SwitchConfig::closed_count() const {
  int k = 0;
  for (auto a : alpha) k += a;
  return k;
}

TransformedGraph transform(const NetworkCase& c) {
  TransformedGraph tg;
  tg.base = c;
  int n = static_cast<int>(c.buses.size());
  tg.node_count = n + 1;
  tg.virtual_node = n;
  for (const auto& d : c.dgs) {
    int bi = c.bus_index(d.bus);
    tg.virtual_edges.push_back({tg.virtual_node, bi, -1});
  }
  for (size_t li = 0; li < c.lines.size(); ++li) {
    const auto& l = c.lines[li];
    TransformedGraph::Edge e{c.bus_index(l.from_bus), c.bus_index(l.to_bus), (int)li};
    if (l.switchable) {
      tg.switch_edges.push_back(e);
      tg.switch_line.push_back((int)li);
    } else {
      tg.fixed_edges.push_back(e);
    }
  }
  return tg;
}

int required_closed_count(const TransformedGraph& tg) {
  int k = (tg.node_count - 1) - static_cast<int>(tg.fixed_edges.size())
        - static_cast<int>(tg.virtual_edges.size());
  if (k < 0 || k > tg.switch_count())
    throw std::runtime_error("case cannot form a spanning tree with these switches");
  return k;
}

bool is_feasible(const TransformedGraph& tg, const SwitchConfig& cfg) {
  if ((int)cfg.alpha.size() != tg.switch_count()) return false;
  int k = required_closed_count(tg);
  if (cfg.closed_count() != k) return false;

  UnionFind uf(tg.node_count);
  for (const auto& e : tg.virtual_edges) uf.unite(e.u, e.v);
  for (const auto& e : tg.fixed_edges) uf.unite(e.u, e.v);
  for (int s = 0; s < tg.switch_count(); ++s)
    if (cfg.alpha[s]) uf.unite(tg.switch_edges[s].u, tg.switch_edges[s].v);
  bool connected = uf.components == 1;
#ifndef NDEBUG
  if (connected) {
    // n+1 nodes connected by exactly n energized edges: must be acyclic.
    int energized = (int)tg.virtual_edges.size() + (int)tg.fixed_edges.size() + k;
    assert(energized == tg.node_count - 1);
  }
#endif
  return connected;
}

IslandSet islands(const TransformedGraph& tg, const SwitchConfig& cfg) {
  if (!is_feasible(tg, cfg)) throw std::runtime_error("infeasible configuration");

  int n = tg.node_count - 1; // real buses only
  UnionFind uf(n);
  auto real_unite = [&](const TransformedGraph::Edge& e) {
    if (e.u < n && e.v < n) uf.unite(e.u, e.v);
  };
  for (const auto& e : tg.fixed_edges) real_unite(e);
  for (int s = 0; s < tg.switch_count(); ++s)
    if (cfg.alpha[s]) real_unite(tg.switch_edges[s]);

  // One island per DG, keyed by the DG bus's component root.
  IslandSet out;
  std::vector<int> island_of_root(n, -1);
  for (size_t di = 0; di < tg.base.dgs.size(); ++di) {
    int bi = tg.base.bus_index(tg.base.dgs[di].bus);
    Island isl;
    isl.dg_index = (int)di;
    isl.dg_bus = bi;
    island_of_root[uf.find(bi)] = (int)out.islands.size();
    out.islands.push_back(isl);
  }
  for (int b = 0; b < n; ++b) {
    int idx = island_of_root[uf.find(b)];
    assert(idx >= 0); // every bus reachable from exactly one DG
    out.islands[idx].bus_indices.push_back(b);
  }
  auto collect = [&](const TransformedGraph::Edge& e) {
    if (e.line_index < 0) return;
    int idx = island_of_root[uf.find(e.u)];
    out.islands[idx].line_indices.push_back(e.line_index);
  };
  for (const auto& e : tg.fixed_edges) collect(e);
  for (int s = 0; s < tg.switch_count(); ++s)
    if (cfg.alpha[s]) collect(tg.switch_edges[s]);
  return out;
}

EnumerationResult enumerate_feasible(const TransformedGraph& tg) {
  int w = tg.switch_count();
  if (w > 24)
    throw std::runtime_error("enumerate_feasible: w > 24, use sampling mode instead");
  EnumerationResult res;
  SwitchConfig cfg;
  cfg.alpha.resize(w);
  std::uint64_t total = std::uint64_t{1} << w;
  for (std::uint64_t m = 0; m < total; ++m) {
    for (int s = 0; s < w; ++s) cfg.alpha[s] = (m >> s) & 1u;
    ++res.tested;
    if (is_feasible(tg, cfg)) res.feasible.push_back(cfg);
  }
  return res;
}

std::string feasible_csv(const TransformedGraph& tg, const std::vector<SwitchConfig>& cfgs) {
  std::ostringstream os;
  for (int s = 0; s < tg.switch_count(); ++s) {
    if (s) os << ',';
    os << "sw_line_" << tg.base.lines[tg.switch_line[s]].id;
  }
  os << '\n';
  for (const auto& cfg : cfgs) {
    for (int s = 0; s < tg.switch_count(); ++s) {
      if (s) os << ',';
      os << int(cfg.alpha[s]);
    }
    os << '\n';
  }
  return os.str();
}

} // namespace gridform
