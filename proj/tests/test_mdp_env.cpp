#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "gridform/mdp_env.hpp"
#include "test_support.hpp"

using namespace gridform;

namespace {

NetworkCase seven() { return load_case_file(support::case_path("7bus.json")); }

// A one-island synthetic flow result for reward tests: membership and line
// list must match islands() of the configuration under test.
PFSolution synthetic_pf(const Island& island, std::vector<double> v, double loss,
                        std::vector<int> lines = {}, std::vector<double> s_from = {}) {
  IslandSolution sol;
  sol.converged = true;
  sol.bus_indices = island.bus_indices;
  sol.v = std::move(v);
  sol.loss_p = loss;
  sol.line_indices = std::move(lines);
  sol.s_from = std::move(s_from);
  sol.s_to = sol.s_from;
  PFSolution pf;
  pf.islands.push_back(std::move(sol));
  return pf;
}

} // namespace

TEST_CASE("reset: initial state of both shipped cases") {
  RewardConfig rc;
  NetworkCase c7 = seven();
  Environment env(c7, rc);
  EnvState s = env.reset(nominal_scenario(c7));
  CHECK(s.t == 0);
  CHECK(s.op_counts.size() == 8);
  for (double o : s.op_counts) CHECK(o == 0.0);
  CHECK(s.cfg.alpha == std::vector<std::uint8_t>{1, 1, 1, 0, 1, 0, 1, 0});

  NetworkCase c123 = load_case_file(support::case_path("ieee123.json"));
  Environment env123(c123, rc);
  EnvState s123 = env123.reset(nominal_scenario(c123));
  CHECK(s123.op_counts.size() == 13);
}

TEST_CASE("reset rejects bad scenarios and infeasible initial topologies") {
  RewardConfig rc;
  NetworkCase c = seven();
  Environment env(c, rc);
  Scenario wrong = nominal_scenario(c);
  wrong.steps.pop_back();
  CHECK_THROWS_WITH_AS(env.reset(wrong), doctest::Contains("scenario length"),
                       std::runtime_error);

  NetworkCase bad = c;
  bad.initial_switches[0] = 0; // only 4 closed: infeasible
  Environment env_bad(bad, rc);
  CHECK_THROWS_WITH_AS(env_bad.reset(nominal_scenario(bad)),
                       doctest::Contains("initial topology infeasible"), std::runtime_error);
}

TEST_CASE("build_input: shape, range and padding") {
  RewardConfig rc;
  NetworkCase c = load_case_file(support::case_path("ieee123.json"));
  Environment env(c, rc);
  EnvState s = env.reset(nominal_scenario(c));
  InputTensor in = env.build_input(s);
  CHECK(in.width == 125);
  for (const auto& row : in.rows) {
    REQUIRE(row.size() == 125);
    for (double x : row) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
  // P and Q carry n = 124 node entries extended with l - n = 1 zero
  CHECK(in.rows[0][124] == 0.0);
  CHECK(in.rows[1][124] == 0.0);
}

TEST_CASE("build_input: R/X masking of open switches and F placement") {
  RewardConfig rc;
  NetworkCase c = seven();
  Environment env(c, rc);
  EnvState s = env.reset(nominal_scenario(c));

  InputTensor in = env.build_input(s);
  const auto& norm = env.normalizer();
  for (int j = 0; j < 8; ++j) {
    bool closed = c.initial_switches[j] == 1;
    if (closed) {
      CHECK(in.rows[2][j] == doctest::Approx(c.lines[j].r / norm.r_max));
      CHECK(in.rows[3][j] == doctest::Approx(c.lines[j].x / norm.x_max));
    } else {
      CHECK(in.rows[2][j] == 0.0);
      CHECK(in.rows[3][j] == 0.0);
    }
  }
  for (double f : in.rows[4]) CHECK(f == 0.0);

  // after operations, F reflects op_counts / N_step (N_step defaults to T)
  s.op_counts[3] = 2.0;
  InputTensor in2 = env.build_input(s);
  CHECK(in2.rows[4][3] == doctest::Approx(2.0 / c.horizon));

  // all-closed state: no masking anywhere
  EnvState all_closed = s;
  all_closed.cfg.alpha.assign(8, 1);
  InputTensor in3 = env.build_input(all_closed);
  for (int j = 0; j < 8; ++j) CHECK(in3.rows[2][j] > 0.0);
}

TEST_CASE("build_input is equivariant under line reordering") {
  RewardConfig rc;
  NetworkCase c = support::triangle(1.0, 0.2, 0.1);
  Environment env(c, rc);
  EnvState s = env.reset(nominal_scenario(c));
  s.op_counts = {1.0, 2.0};
  InputTensor in = env.build_input(s);

  // permute lines: [L2, L3, L1]; switch order becomes (L2, L3) -> same, but
  // columns move. Switch ids keep their relative order, so alpha/op_counts
  // are unchanged while columns permute as old->new {0->2, 1->0, 2->1}.
  NetworkCase p = c;
  p.lines = {c.lines[1], c.lines[2], c.lines[0]};
  Environment env_p(p, rc);
  EnvState sp = env_p.reset(nominal_scenario(p));
  sp.op_counts = s.op_counts;
  InputTensor in_p = env_p.build_input(sp);

  int col_map[3] = {2, 0, 1}; // old column -> new column
  for (int row = 2; row < 5; ++row)
    for (int j = 0; j < 3; ++j)
      CHECK(in.rows[row][j] == doctest::Approx(in_p.rows[row][col_map[j]]));
  // P, Q depend on buses only
  for (int row = 0; row < 2; ++row)
    for (int j = 0; j < 3; ++j) CHECK(in.rows[row][j] == doctest::Approx(in_p.rows[row][j]));
}

TEST_CASE("scenario generation: truncation, clipping, determinism") {
  NetworkCase c = seven();
  for (std::uint64_t seed : {1ULL, 7ULL, 99ULL}) {
    Scenario sc = generate_scenario(c, seed);
    REQUIRE((int)sc.steps.size() == c.horizon);
    for (int t = 0; t < c.horizon; ++t) {
      for (size_t d = 0; d < c.dgs.size(); ++d) {
        double e = c.dgs[d].p_expected[t];
        double v = sc.steps[t].p_dg[d];
        CHECK(v >= 0.8 * e - 1e-12);
        CHECK(v <= std::min(1.2 * e, c.dgs[d].p_max) + 1e-12);
      }
      // loads stay deterministic by default
      for (size_t li = 0; li < c.loads.size(); ++li)
        CHECK(sc.steps[t].p_load[li] == c.loads[li].p);
    }
  }
  Scenario a = generate_scenario(c, 42), b = generate_scenario(c, 42);
  CHECK(a.steps[0].p_dg == b.steps[0].p_dg);
  CHECK(a.steps[19].p_dg == b.steps[19].p_dg);
  Scenario other = generate_scenario(c, 43);
  CHECK(a.steps[0].p_dg != other.steps[0].p_dg);
}

TEST_CASE("zero expected output draws exactly zero") {
  NetworkCase c = support::triangle();
  c.dgs[0].p_expected.assign(c.horizon, 0.0);
  Scenario sc = generate_scenario(c, 5);
  for (const auto& step : sc.steps) CHECK(step.p_dg[0] == 0.0);
}

TEST_CASE("reward: feasibility branches") {
  RewardConfig rc;
  NetworkCase c = support::triangle(1.0, 0.2);
  Environment env(c, rc);
  EnvState s = env.reset(nominal_scenario(c));

  // infeasible: -r_topo, game over signal
  auto rr = env.reward(SwitchConfig{{1, 1}}, s, nullptr);
  CHECK(rr.r == -rc.r_topo);
  CHECK(rr.s_topo == 0);

  // clean feasible step: every penalty term is zero by its own definition
  IslandSet isl = islands(env.graph(), s.cfg);
  PFSolution pf = synthetic_pf(isl.islands[0], {1.0, 1.0, 1.0}, 0.0);
  auto rr2 = env.reward(s.cfg, s, &pf);
  CHECK(rr2.r == rc.r_topo);
  CHECK(rr2.s_topo == 1);
  CHECK(rr2.info.f_swi == 0.0);
  REQUIRE(rr2.info.f_pb.size() == 1);
  CHECK(rr2.info.f_pb[0] == 0.0);
}

TEST_CASE("reward: voltage band edges") {
  RewardConfig rc;
  NetworkCase c = support::triangle(1.0, 0.2);
  Environment env(c, rc);
  EnvState s = env.reset(nominal_scenario(c));
  IslandSet isl = islands(env.graph(), s.cfg);

  PFSolution at_band = synthetic_pf(isl.islands[0], {0.95, 1.05, 1.0}, 0.0);
  CHECK(env.reward(s.cfg, s, &at_band).r == rc.r_topo);

  PFSolution low = synthetic_pf(isl.islands[0], {0.949, 1.0, 1.0}, 0.0);
  CHECK(env.reward(s.cfg, s, &low).r == rc.r_topo - rc.p_vol);

  PFSolution high = synthetic_pf(isl.islands[0], {1.051, 1.0, 1.0}, 0.0);
  CHECK(env.reward(s.cfg, s, &high).r == rc.r_topo - rc.p_vol);

  PFSolution both = synthetic_pf(isl.islands[0], {0.949, 1.051, 1.0}, 0.0);
  CHECK(env.reward(s.cfg, s, &both).r == rc.r_topo - 2 * rc.p_vol);
}

TEST_CASE("reward: branch overflow is zero at the limit and linear past it") {
  RewardConfig rc;
  NetworkCase c = support::triangle(1.0, 0.2); // flow limits 1.0
  Environment env(c, rc);
  EnvState s = env.reset(nominal_scenario(c));
  IslandSet isl = islands(env.graph(), s.cfg);

  PFSolution at_limit = synthetic_pf(isl.islands[0], {1.0, 1.0, 1.0}, 0.0, {0}, {1.0});
  CHECK(env.reward(s.cfg, s, &at_limit).r == rc.r_topo);

  PFSolution over = synthetic_pf(isl.islands[0], {1.0, 1.0, 1.0}, 0.0, {0}, {1.25});
  CHECK(env.reward(s.cfg, s, &over).r == rc.r_topo - (1.25 - 1.0) / rc.b_base);
}

TEST_CASE("reward: switch penalty starts past S_upp") {
  RewardConfig rc; // s_upp = 4, N_step = T = 5 for the triangle
  NetworkCase c = support::triangle(1.0, 0.2);
  Environment env(c, rc);
  EnvState s = env.reset(nominal_scenario(c));
  IslandSet isl = islands(env.graph(), s.cfg);
  PFSolution pf = synthetic_pf(isl.islands[0], {1.0, 1.0, 1.0}, 0.0);

  // 4 prior operations, no new ones: still free
  s.op_counts = {4.0, 4.0};
  CHECK(env.reward(s.cfg, s, &pf).r == rc.r_topo);

  // the 5th operation of switch 1 (and of switch 2) starts the penalty
  SwitchConfig flipped{{0, 1}};
  IslandSet isl_f = islands(env.graph(), flipped);
  PFSolution pf_f = synthetic_pf(isl_f.islands[0], {1.0, 1.0, 1.0}, 0.0);
  auto rr = env.reward(flipped, s, &pf_f);
  CHECK(rr.info.f_swi == doctest::Approx((5.0 + 5.0) / 5.0));
  CHECK(rr.r == doctest::Approx(rc.r_topo - 2.0));

  // 3 prior operations: a toggle lands exactly at S_upp, still free
  s.op_counts = {3.0, 3.0};
  CHECK(env.reward(flipped, s, &pf_f).r == rc.r_topo);
}

TEST_CASE("reward: power deficiency example M = 0.06") {
  RewardConfig rc;
  NetworkCase c = support::triangle(0.45, 0.5); // load 0.5 at bus 2, DG 0.45
  Environment env(c, rc);
  EnvState s = env.reset(nominal_scenario(c));
  IslandSet isl = islands(env.graph(), s.cfg);
  PFSolution pf = synthetic_pf(isl.islands[0], {1.0, 1.0, 1.0}, 0.01);
  auto rr = env.reward(s.cfg, s, &pf);
  REQUIRE(rr.info.f_pb.size() == 1);
  CHECK(rr.info.f_pb[0] == 0.5 + 0.01 - 0.45); // = 0.06, same fp expression
  CHECK(rr.info.f_pb[0] == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(rr.r == doctest::Approx(rc.r_topo - rr.info.f_ac[0] - rr.info.f_pb[0]).epsilon(1e-15));
}

TEST_CASE("step: feasible action, reward decomposition and op accounting") {
  RewardConfig rc;
  NetworkCase c = seven();
  Environment env(c, rc);
  EnvState s = env.reset(nominal_scenario(c));

  SwitchConfig same = s.cfg;
  StepOutcome out = env.step(s, same, false);
  CHECK(out.s_topo == 1);
  CHECK_FALSE(out.done);
  CHECK(out.action_applied);
  double recomposed = out.info.f_topo - out.info.f_swi;
  for (double f : out.info.f_ac) recomposed -= f;
  for (double f : out.info.f_pb) recomposed -= f;
  CHECK(out.reward == doctest::Approx(recomposed).epsilon(1e-12));
  for (double o : out.next.op_counts) CHECK(o == 0.0);

  // a 4-toggle move to another feasible configuration
  SwitchConfig moved{{1, 1, 0, 1, 1, 1, 0, 0}};
  REQUIRE(is_feasible(env.graph(), moved));
  StepOutcome out2 = env.step(out.next, moved, false);
  CHECK(out2.s_topo == 1);
  double total_ops = 0.0;
  for (double o : out2.next.op_counts) total_ops += o;
  CHECK(total_ops == 4.0);
}

TEST_CASE("step: infeasible action with guard off ends the episode") {
  RewardConfig rc;
  NetworkCase c = seven();
  Environment env(c, rc);
  EnvState s = env.reset(nominal_scenario(c));
  SwitchConfig bad;
  bad.alpha.assign(8, 1);
  StepOutcome out = env.step(s, bad, false);
  CHECK(out.reward == -rc.r_topo);
  CHECK(out.s_topo == 0);
  CHECK(out.done);
}

TEST_CASE("step: infeasible action with guard on keeps the previous topology") {
  RewardConfig rc;
  NetworkCase c = seven();
  Environment env(c, rc);
  EnvState s = env.reset(nominal_scenario(c));
  SwitchConfig bad;
  bad.alpha.assign(8, 1);
  StepOutcome out = env.step(s, bad, true);
  CHECK_FALSE(out.action_applied);
  CHECK(out.next.cfg == s.cfg);
  CHECK(out.s_topo == 1);
  CHECK_FALSE(out.done);
  for (double o : out.next.op_counts) CHECK(o == 0.0); // no-op costs nothing
}

TEST_CASE("step: episode end and stepping past it") {
  RewardConfig rc;
  NetworkCase c = support::triangle(1.0, 0.2);
  Environment env(c, rc);
  EnvState s = env.reset(nominal_scenario(c));
  StepOutcome out;
  for (int t = 0; t < c.horizon; ++t) {
    out = env.step(s, s.cfg, false);
    s = out.next;
  }
  CHECK(out.done);
  CHECK(s.t == c.horizon);
  CHECK_THROWS_WITH_AS(env.step(s, s.cfg, false), doctest::Contains("finished"),
                       std::runtime_error);
}

TEST_CASE("op_counts equal the recomputed action-sequence total") {
  RewardConfig rc;
  NetworkCase c = seven();
  Environment env(c, rc);
  EnvState s = env.reset(generate_scenario(c, 11));

  std::vector<SwitchConfig> seq = {
      SwitchConfig{{1, 1, 1, 0, 1, 0, 1, 0}}, SwitchConfig{{1, 1, 0, 1, 1, 1, 0, 0}},
      SwitchConfig{{1, 1, 1, 0, 1, 0, 1, 0}}, SwitchConfig{{1, 1, 0, 1, 1, 1, 0, 0}}};
  std::vector<SwitchConfig> visited = {s.cfg};
  for (const auto& a : seq) {
    StepOutcome out = env.step(s, a, true);
    s = out.next;
    visited.push_back(s.cfg);
  }
  std::vector<double> expect(8, 0.0);
  for (size_t i = 1; i < visited.size(); ++i)
    for (int j = 0; j < 8; ++j)
      expect[j] += std::abs((double)visited[i].alpha[j] - (double)visited[i - 1].alpha[j]);
  CHECK(s.op_counts == expect);
}
