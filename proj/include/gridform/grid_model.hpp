#ifndef GRIDFORM_GRID_MODEL_HPP
#define GRIDFORM_GRID_MODEL_HPP

#include <string>
#include <vector>

namespace gridform {

enum class BusKind { plain, dg, substation };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::plain;
  double base_voltage = 1.0;  // p.u. reference

  bool operator==(const Bus&) const = default;
};

struct Line {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;          // p.u.
  double x = 0.0;          // p.u.
  double flow_limit = 1.0; // apparent-power upper bound, p.u.
  bool switchable = false;

  bool operator==(const Line&) const = default;
};

struct DGUnit {
  int bus = 0;
  double p_max = 0.0; // p.u.
  double q_max = 0.0; // p.u.
  std::vector<double> p_expected; // per-step, length T, p.u.
  std::vector<double> q_expected;

  bool operator==(const DGUnit&) const = default;
};

struct Load {
  int bus = 0;
  double p = 0.0; // p.u.
  double q = 0.0;
  int priority = 0; // lower sheds first

  bool operator==(const Load&) const = default;
};

/// The distribution-network case under study. All powers are stored in p.u.
/// on s_base; case files may declare values in MW, converted at load time.
/// Immutable after construction; safe to share across threads.
struct NetworkCase {
  std::string name;
  double s_base = 100.0; // MVA
  int horizon = 1;       // T
  int step_minutes = 10;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<DGUnit> dgs;
  std::vector<Load> loads;
  std::vector<int> initial_switches; // alpha^0, length w, switch order = switchable lines in file order

  bool operator==(const NetworkCase&) const = default;

  int bus_index(int bus_id) const; // -1 if absent
  int switch_count() const;
  int dg_count() const { return static_cast<int>(dgs.size()); }
  double total_load_p() const;
};

/// Parse and validate a "gridform-case-v1" JSON document.
/// Throws std::runtime_error naming the offending element on any violation.
NetworkCase load_case(const std::string& text);
NetworkCase load_case_file(const std::string& path);

/// Serialize back to the case schema (always in p.u. units so that
/// load_case(serialize(c)) == c exactly).
std::string serialize(const NetworkCase& c);

/// Returns one description per violated invariant; empty when the case is valid.
std::vector<std::string> validate(const NetworkCase& c);

} // namespace gridform

#endif
