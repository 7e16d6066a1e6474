#include "gridform/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace gridform {

bool PFSolution::all_converged() const {
  for (const auto& isl : islands)
    if (!isl.converged) return false;
  return true;
}

IslandSolution solve_island(const NetworkCase& c, const Island& island, const InjectionSet& inj,
                            const std::vector<std::complex<double>>* warm_start) {
  using cplx = std::complex<double>;
  constexpr double kTol = 1e-6;
  constexpr int kMaxIter = 100;

  const int m = static_cast<int>(island.bus_indices.size());
  IslandSolution sol;
  sol.bus_indices = island.bus_indices;
  sol.line_indices = island.line_indices;

  // Local index within the island.
  std::vector<int> local(c.buses.size(), -1);
  for (int i = 0; i < m; ++i) local[island.bus_indices[i]] = i;

  // Constant-power demand per local bus.
  std::vector<cplx> s_load(m, 0.0);
  for (size_t li = 0; li < c.loads.size(); ++li) {
    int bi = c.bus_index(c.loads[li].bus);
    if (bi >= 0 && local[bi] >= 0)
      s_load[local[bi]] += cplx(inj.p_load[li], inj.q_load[li]);
  }

  // Ladder branches in parent-before-child order, rooted at the DG bus.
  struct Branch { int line; int parent; int child; cplx z; };
  std::vector<std::vector<int>> adj(m); // local bus -> member line positions
  for (size_t e = 0; e < island.line_indices.size(); ++e) {
    const Line& l = c.lines[island.line_indices[e]];
    adj[local[c.bus_index(l.from_bus)]].push_back((int)e);
    adj[local[c.bus_index(l.to_bus)]].push_back((int)e);
  }
  const int root = local[island.dg_bus];
  std::vector<Branch> order;
  {
    std::vector<char> seen(m, 0);
    seen[root] = 1;
    std::vector<int> bfs{root};
    size_t head = 0;
    while (head < bfs.size()) {
      int u = bfs[head++];
      for (int e : adj[u]) {
        const Line& l = c.lines[island.line_indices[e]];
        int a = local[c.bus_index(l.from_bus)], b = local[c.bus_index(l.to_bus)];
        int v = (a == u) ? b : a;
        if (seen[v]) continue;
        seen[v] = 1;
        order.push_back({island.line_indices[e], u, v, cplx(l.r, l.x)});
        bfs.push_back(v);
      }
    }
    if ((int)bfs.size() != m)
      throw std::runtime_error("solve_island: island is not a connected tree");
  }

  std::vector<cplx> V(m, cplx(1.0, 0.0));
  if (warm_start && (int)warm_start->size() == m) V = *warm_start;
  std::vector<cplx> I_branch(order.size(), 0.0);
  bool converged = false;
  int iter = 0;
  while (iter < kMaxIter) {
    ++iter;
    // Backward sweep: load currents, accumulated from the leaves.
    std::vector<cplx> acc(m);
    for (int b = 0; b < m; ++b)
      acc[b] = (std::abs(V[b]) > 1e-9) ? std::conj(s_load[b] / V[b]) : cplx(0.0, 0.0);
    for (int e = (int)order.size() - 1; e >= 0; --e) {
      I_branch[e] = acc[order[e].child];
      acc[order[e].parent] += I_branch[e];
    }
    // Forward sweep: voltages from the root.
    double max_dv = 0.0;
    bool finite = true;
    for (size_t e = 0; e < order.size(); ++e) {
      cplx v_new = V[order[e].parent] - order[e].z * I_branch[e];
      max_dv = std::max(max_dv, std::abs(v_new - V[order[e].child]));
      V[order[e].child] = v_new;
      if (!std::isfinite(v_new.real()) || !std::isfinite(v_new.imag())) finite = false;
    }
    if (!finite) break;
    if (max_dv < kTol) { converged = true; break; }
  }
  sol.iterations = iter;
  sol.converged = converged;
  sol.v.resize(m);
  for (int b = 0; b < m; ++b) sol.v[b] = std::abs(V[b]);
  sol.v_complex = V;
  if (!converged) return sol;

  // Losses, branch flows and slack output from the converged state.
  sol.s_from.assign(island.line_indices.size(), 0.0);
  sol.s_to.assign(island.line_indices.size(), 0.0);
  std::vector<int> branch_of_line(c.lines.size(), -1);
  for (size_t e = 0; e < order.size(); ++e) branch_of_line[order[e].line] = (int)e;
  for (size_t e = 0; e < order.size(); ++e) {
    cplx s_parent = V[order[e].parent] * std::conj(I_branch[e]);
    cplx s_child = V[order[e].child] * std::conj(I_branch[e]);
    sol.loss_p += (s_parent - s_child).real();
  }
  cplx slack = s_load[root];
  for (size_t e = 0; e < order.size(); ++e)
    if (order[e].parent == root) slack += V[root] * std::conj(I_branch[e]);
  sol.slack_p = slack.real();
  sol.slack_q = slack.imag();
  for (size_t li = 0; li < island.line_indices.size(); ++li) {
    int e = branch_of_line[island.line_indices[li]];
    if (e < 0) continue;
    sol.s_from[li] = std::abs(V[order[e].parent] * std::conj(I_branch[e]));
    sol.s_to[li] = std::abs(V[order[e].child] * std::conj(I_branch[e]));
  }
  return sol;
}

PFSolution solve_all(const TransformedGraph& tg, const SwitchConfig& cfg, const InjectionSet& inj) {
  IslandSet isl = islands(tg, cfg); // throws on infeasible cfg
  PFSolution out;
  for (const auto& island : isl.islands)
    out.islands.push_back(solve_island(tg.base, island, inj));
  return out;
}

} // namespace gridform
