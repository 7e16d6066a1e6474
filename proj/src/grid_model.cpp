#include "gridform/grid_model.hpp"

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gridform {

using nlohmann::ordered_json;

int NetworkCase::bus_index(int bus_id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == bus_id) return static_cast<int>(i);
  return -1;
}

int NetworkCase::switch_count() const {
  int w = 0;
  for (const auto& l : lines)
    if (l.switchable) ++w;
  return w;
}

double NetworkCase::total_load_p() const {
  double s = 0.0;
  for (const auto& ld : loads) s += ld.p;
  return s;
}

namespace {

BusKind parse_kind(const std::string& s) {
  if (s == "plain") return BusKind::plain;
  if (s == "dg") return BusKind::dg;
  if (s == "substation") return BusKind::substation;
  throw std::runtime_error("unknown bus kind '" + s + "'");
}

std::string kind_name(BusKind k) {
  switch (k) {
    case BusKind::plain: return "plain";
    case BusKind::dg: return "dg";
    case BusKind::substation: return "substation";
  }
  return "?";
}

// Connectivity of the all-lines-closed graph, union-find.
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a); b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

} // namespace

std::vector<std::string> validate(const NetworkCase& c) {
  std::vector<std::string> out;
  if (c.buses.empty()) {
    out.push_back("empty case");
    return out;
  }
  if (c.horizon < 1) out.push_back("horizon: must be >= 1");
  if (c.s_base <= 0) out.push_back("s_base: must be > 0");

  std::set<int> bus_ids;
  for (const auto& b : c.buses) {
    if (!bus_ids.insert(b.id).second)
      out.push_back("bus " + std::to_string(b.id) + ": duplicated id");
  }

  int n_dg_buses = 0;
  for (const auto& b : c.buses)
    if (b.kind == BusKind::dg) ++n_dg_buses;
  if (n_dg_buses == 0) out.push_back("case: no dg bus");

  std::set<int> line_ids;
  for (const auto& l : c.lines) {
    std::string tag = "line " + std::to_string(l.id);
    if (!line_ids.insert(l.id).second) out.push_back(tag + ": duplicated id");
    if (l.from_bus == l.to_bus) out.push_back(tag + ": self-loop");
    if (!bus_ids.count(l.from_bus)) out.push_back(tag + ": unknown from_bus " + std::to_string(l.from_bus));
    if (!bus_ids.count(l.to_bus)) out.push_back(tag + ": unknown to_bus " + std::to_string(l.to_bus));
    if (l.r < 0) out.push_back(tag + ": r < 0");
    if (l.x < 0) out.push_back(tag + ": x < 0");
    if (l.flow_limit <= 0) out.push_back(tag + ": flow_limit <= 0");
  }

  std::set<int> dg_buses_seen;
  for (const auto& d : c.dgs) {
    std::string tag = "dg at bus " + std::to_string(d.bus);
    int bi = c.bus_index(d.bus);
    if (bi < 0) {
      out.push_back(tag + ": unknown bus");
      continue;
    }
    if (c.buses[bi].kind != BusKind::dg) out.push_back(tag + ": bus not marked dg");
    if (!dg_buses_seen.insert(d.bus).second) out.push_back(tag + ": more than one unit");
    if (d.p_max <= 0) out.push_back(tag + ": p_max <= 0");
    if ((int)d.p_expected.size() != c.horizon) out.push_back(tag + ": p_expected length != horizon");
    if ((int)d.q_expected.size() != c.horizon) out.push_back(tag + ": q_expected length != horizon");
  }
  for (const auto& b : c.buses) {
    if (b.kind == BusKind::dg && !dg_buses_seen.count(b.id))
      out.push_back("bus " + std::to_string(b.id) + ": dg bus without DG unit");
  }

  std::set<int> load_buses;
  for (const auto& ld : c.loads) {
    std::string tag = "load at bus " + std::to_string(ld.bus);
    if (!bus_ids.count(ld.bus)) out.push_back(tag + ": unknown bus");
    if (!load_buses.insert(ld.bus).second) out.push_back(tag + ": more than one aggregate load");
    if (ld.p < 0) out.push_back(tag + ": p < 0");
  }

  if ((int)c.initial_switches.size() != c.switch_count())
    out.push_back("initial_switches: length != switch count");
  for (int a : c.initial_switches)
    if (a != 0 && a != 1) out.push_back("initial_switches: entries must be 0/1");

  // All-closed graph must be connected.
  if (bus_ids.size() == c.buses.size() && !c.buses.empty()) {
    UnionFind uf(static_cast<int>(c.buses.size()));
    for (const auto& l : c.lines) {
      int a = c.bus_index(l.from_bus), b = c.bus_index(l.to_bus);
      if (a >= 0 && b >= 0) uf.unite(a, b);
    }
    int root = uf.find(0);
    for (size_t i = 1; i < c.buses.size(); ++i) {
      if (uf.find((int)i) != root) {
        out.push_back("bus " + std::to_string(c.buses[i].id) + ": disconnected from base graph");
        break;
      }
    }
  }
  return out;
}

NetworkCase load_case(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("case parse error: ") + e.what());
  }

  if (!j.is_object() || j.value("schema", "") != "gridform-case-v1")
    throw std::runtime_error("case schema: expected \"gridform-case-v1\"");

  NetworkCase c;
  c.name = j.value("name", "");
  c.s_base = j.at("s_base_mva").get<double>();
  c.horizon = j.at("horizon_steps").get<int>();
  c.step_minutes = j.value("step_minutes", 10);

  // Power quantities may be given in MW/MVar ("MW", default) or already in
  // p.u. ("pu"); line r/x are p.u. in either mode.
  const std::string units = j.value("units", "MW");
  double scale;
  if (units == "MW") scale = 1.0 / c.s_base;
  else if (units == "pu") scale = 1.0;
  else throw std::runtime_error("case units: expected \"MW\" or \"pu\"");

  for (const auto& jb : j.at("buses")) {
    Bus b;
    b.id = jb.at("id").get<int>();
    b.kind = parse_kind(jb.value("kind", "plain"));
    b.base_voltage = jb.value("base_voltage", 1.0);
    c.buses.push_back(b);
  }
  for (const auto& jl : j.at("lines")) {
    Line l;
    l.id = jl.at("id").get<int>();
    l.from_bus = jl.at("from").get<int>();
    l.to_bus = jl.at("to").get<int>();
    l.r = jl.at("r").get<double>();
    l.x = jl.at("x").get<double>();
    l.flow_limit = jl.at("flow_limit").get<double>() * scale;
    l.switchable = jl.at("switchable").get<bool>();
    c.lines.push_back(l);
  }
  for (const auto& jd : j.at("dgs")) {
    DGUnit d;
    d.bus = jd.at("bus").get<int>();
    d.p_max = jd.at("p_max").get<double>() * scale;
    d.q_max = jd.at("q_max").get<double>() * scale;
    for (double v : jd.at("p_expected")) d.p_expected.push_back(v * scale);
    for (double v : jd.at("q_expected")) d.q_expected.push_back(v * scale);
    c.dgs.push_back(d);
  }
  for (const auto& jl : j.at("loads")) {
    Load ld;
    ld.bus = jl.at("bus").get<int>();
    ld.p = jl.at("p").get<double>() * scale;
    ld.q = jl.at("q").get<double>() * scale;
    ld.priority = jl.value("priority", 0);
    c.loads.push_back(ld);
  }
  if (j.contains("initial_switches"))
    for (int a : j.at("initial_switches")) c.initial_switches.push_back(a);

  auto violations = validate(c);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "invalid case:";
    for (const auto& v : violations) os << "\n  " << v;
    throw std::runtime_error(os.str());
  }
  return c;
}

NetworkCase load_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open case file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_case(ss.str());
}

std::string serialize(const NetworkCase& c) {
  ordered_json j;
  j["schema"] = "gridform-case-v1";
  j["name"] = c.name;
  j["units"] = "pu";
  j["s_base_mva"] = c.s_base;
  j["horizon_steps"] = c.horizon;
  j["step_minutes"] = c.step_minutes;
  j["buses"] = ordered_json::array();
  for (const auto& b : c.buses)
    j["buses"].push_back({{"id", b.id}, {"kind", kind_name(b.kind)}, {"base_voltage", b.base_voltage}});
  j["lines"] = ordered_json::array();
  for (const auto& l : c.lines)
    j["lines"].push_back({{"id", l.id}, {"from", l.from_bus}, {"to", l.to_bus},
                          {"r", l.r}, {"x", l.x}, {"flow_limit", l.flow_limit},
                          {"switchable", l.switchable}});
  j["dgs"] = ordered_json::array();
  for (const auto& d : c.dgs)
    j["dgs"].push_back({{"bus", d.bus}, {"p_max", d.p_max}, {"q_max", d.q_max},
                        {"p_expected", d.p_expected}, {"q_expected", d.q_expected}});
  j["loads"] = ordered_json::array();
  for (const auto& ld : c.loads)
    j["loads"].push_back({{"bus", ld.bus}, {"p", ld.p}, {"q", ld.q}, {"priority", ld.priority}});
  j["initial_switches"] = c.initial_switches;
  return j.dump(2);
}

} // namespace gridform
