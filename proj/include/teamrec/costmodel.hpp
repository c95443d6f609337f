#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "teamrec/error.hpp"
#include "teamrec/textio.hpp"

namespace teamrec {

enum class PlaceKind { Cpu, Gpu };

// Where a task runs. CPU placements canonically live on node 0; GPU
// placements carry an explicit node id.
struct Placement {
  PlaceKind kind = PlaceKind::Cpu;
  int node = 0;

  int effective_node() const { return kind == PlaceKind::Cpu ? 0 : node; }
  bool operator==(const Placement& o) const { return kind == o.kind && effective_node() == o.effective_node(); }
};

inline std::string placement_name(const Placement& p) {
  return p.kind == PlaceKind::Cpu ? "cpu" : "gpu" + std::to_string(p.node);
}

struct CostTask {
  std::string name;
  double pt_cpu = 0.0;
  double pt_gpu = 0.0;
  std::optional<Placement> pinned;  // fixed placement the optimizer must respect
};

struct CostEdge {
  std::string from, to;
  double ct_gpu_cpu = 0.0;    // paid when the endpoints sit on different kinds
  double ct_node_node = 0.0;  // paid when the endpoints sit on different nodes
};

struct CostModel {
  std::vector<CostTask> tasks;
  std::vector<CostEdge> edges;
  std::map<std::string, Placement> placement;
  int n_nodes = 2;  // GPU node ids enumerate [0, n_nodes)

  const CostTask* find_task(const std::string& name) const {
    for (const auto& t : tasks)
      if (t.name == name) return &t;
    return nullptr;
  }

  void validate() const {
    if (n_nodes < 1) throw ConfigError("cost model needs n_nodes >= 1");
    for (const auto& t : tasks) {
      if (t.name.empty()) throw ConfigError("cost model task without a name");
      if (t.pt_cpu < 0.0 || t.pt_gpu < 0.0) throw ConfigError("task '" + t.name + "' has a negative processing time");
      if (t.pinned && t.pinned->kind == PlaceKind::Gpu && (t.pinned->node < 0 || t.pinned->node >= n_nodes))
        throw ConfigError("task '" + t.name + "' pinned to nonexistent node");
    }
    for (std::size_t i = 0; i < tasks.size(); ++i)
      for (std::size_t j = i + 1; j < tasks.size(); ++j)
        if (tasks[i].name == tasks[j].name) throw ConfigError("duplicate task name '" + tasks[i].name + "'");
    for (const auto& e : edges) {
      if (!find_task(e.from)) throw ConfigError("edge endpoint '" + e.from + "' names no task");
      if (!find_task(e.to)) throw ConfigError("edge endpoint '" + e.to + "' names no task");
      if (e.ct_gpu_cpu < 0.0 || e.ct_node_node < 0.0)
        throw ConfigError("edge " + e.from + "->" + e.to + " has a negative cost");
    }
    for (const auto& [name, p] : placement) {
      if (!find_task(name)) throw ConfigError("placement names unknown task '" + name + "'");
      if (p.kind == PlaceKind::Gpu && (p.node < 0 || p.node >= n_nodes))
        throw ConfigError("task '" + name + "' placed on nonexistent node");
    }
  }
};

// Total-time estimate: processing cost of each task where it is placed, plus
// a kind-crossing cost for every CPU/GPU edge and a node-crossing cost for
// every edge whose endpoints live on different nodes. The two penalties are
// independent — one edge can pay both.
inline double estimate_total_time(const CostModel& m) {
  m.validate();
  double total = 0.0;
  for (const auto& t : m.tasks) {
    const auto it = m.placement.find(t.name);
    if (it == m.placement.end()) throw InvalidArgument("placement missing task '" + t.name + "'");
    total += it->second.kind == PlaceKind::Cpu ? t.pt_cpu : t.pt_gpu;
  }
  for (const auto& e : m.edges) {
    const Placement& pu = m.placement.at(e.from);
    const Placement& pv = m.placement.at(e.to);
    if (pu.kind != pv.kind) total += e.ct_gpu_cpu;
    if (pu.effective_node() != pv.effective_node()) total += e.ct_node_node;
  }
  return total;
}

struct PlacementResult {
  std::map<std::string, Placement> placement;
  double total = 0.0;
};

// Exhaustive placement search. Each unpinned task ranges over the options
// cpu < gpu0 < gpu1 < ... and candidates are enumerated in lexicographic
// order of that encoding (task 0 most significant); keeping only strict
// improvements makes the lexicographically smallest argmin win ties.
inline PlacementResult optimize_placement(const CostModel& m) {
  m.validate();
  if (m.tasks.empty()) throw InvalidArgument("optimize_placement: no tasks");
  if (m.tasks.size() > 20)
    throw InvalidArgument("optimize_placement handles at most 20 tasks (exhaustive search); heuristic mode is out of scope");

  const int options = 1 + m.n_nodes;  // 0 = cpu, 1 + k = gpu node k
  const std::size_t n = m.tasks.size();
  auto decode = [&](int opt) { return opt == 0 ? Placement{PlaceKind::Cpu, 0} : Placement{PlaceKind::Gpu, opt - 1}; };

  CostModel work = m;
  std::vector<int> digits(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (m.tasks[i].pinned) digits[i] = m.tasks[i].pinned->kind == PlaceKind::Cpu ? 0 : 1 + m.tasks[i].pinned->node;

  PlacementResult best;
  best.total = std::numeric_limits<double>::infinity();
  for (;;) {
    work.placement.clear();
    for (std::size_t i = 0; i < n; ++i) work.placement[m.tasks[i].name] = decode(digits[i]);
    const double t = estimate_total_time(work);
    if (t < best.total) {
      best.total = t;
      best.placement = work.placement;
    }
    // odometer increment over the unpinned digits, last task least significant
    int pos = static_cast<int>(n) - 1;
    while (pos >= 0) {
      if (m.tasks[static_cast<std::size_t>(pos)].pinned) {
        --pos;
        continue;
      }
      if (++digits[static_cast<std::size_t>(pos)] < options) break;
      digits[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;  // every combination visited
  }
  return best;
}

// ---------------------------------------------------------------------------
// Cost model file: `costmodel v1` header, then task/edge/place lines.
// ---------------------------------------------------------------------------

inline std::string format_cost_model(const CostModel& m) {
  using detail::fmt_g17;
  std::string out = "costmodel v1\n";
  out += "nodes " + std::to_string(m.n_nodes) + "\n";
  for (const auto& t : m.tasks) {
    out += "task " + t.name + " " + fmt_g17(t.pt_cpu) + " " + fmt_g17(t.pt_gpu);
    if (t.pinned) out += t.pinned->kind == PlaceKind::Cpu ? " pin cpu" : (" pin gpu " + std::to_string(t.pinned->node));
    out += "\n";
  }
  for (const auto& e : m.edges)
    out += "edge " + e.from + " " + e.to + " " + fmt_g17(e.ct_gpu_cpu) + " " + fmt_g17(e.ct_node_node) + "\n";
  for (const auto& [name, p] : m.placement)
    out += "place " + name + (p.kind == PlaceKind::Cpu ? std::string(" cpu") : " gpu " + std::to_string(p.node)) + "\n";
  return out;
}

inline CostModel parse_cost_model(const std::string& text, const std::string& source = "<memory>") {
  CostModel m;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    const std::string at = source + ":" + std::to_string(lineno);
    if (!saw_header) {
      std::string ver;
      if (kind != "costmodel" || !(ls >> ver) || ver != "v1") throw IoError("expected 'costmodel v1' header at " + at);
      saw_header = true;
      continue;
    }
    if (kind == "nodes") {
      if (!(ls >> m.n_nodes)) throw IoError("bad nodes line at " + at);
    } else if (kind == "task") {
      CostTask t;
      if (!(ls >> t.name >> t.pt_cpu >> t.pt_gpu)) throw IoError("bad task line at " + at);
      std::string pin;
      if (ls >> pin) {
        if (pin != "pin") throw IoError("unexpected token '" + pin + "' at " + at);
        std::string where;
        if (!(ls >> where)) throw IoError("bad pin at " + at);
        if (where == "cpu") {
          t.pinned = Placement{PlaceKind::Cpu, 0};
        } else if (where == "gpu") {
          int node = 0;
          if (!(ls >> node)) throw IoError("bad pin node at " + at);
          t.pinned = Placement{PlaceKind::Gpu, node};
        } else {
          throw IoError("unknown pin target '" + where + "' at " + at);
        }
      }
      m.tasks.push_back(std::move(t));
    } else if (kind == "edge") {
      CostEdge e;
      if (!(ls >> e.from >> e.to >> e.ct_gpu_cpu >> e.ct_node_node)) throw IoError("bad edge line at " + at);
      m.edges.push_back(std::move(e));
    } else if (kind == "place") {
      std::string name, where;
      if (!(ls >> name >> where)) throw IoError("bad place line at " + at);
      if (where == "cpu") {
        m.placement[name] = Placement{PlaceKind::Cpu, 0};
      } else if (where == "gpu") {
        int node = 0;
        if (!(ls >> node)) throw IoError("bad place node at " + at);
        m.placement[name] = Placement{PlaceKind::Gpu, node};
      } else {
        throw IoError("unknown placement '" + where + "' at " + at);
      }
    } else {
      throw IoError("unknown record '" + kind + "' at " + at);
    }
  }
  if (!saw_header) throw IoError("missing 'costmodel v1' header in " + source);
  m.validate();
  return m;
}

inline void save_cost_model(const CostModel& m, const std::filesystem::path& path) {
  detail::spit(path, format_cost_model(m));
}

inline CostModel load_cost_model(const std::filesystem::path& path) {
  return parse_cost_model(detail::slurp(path), path.string());
}

}  // namespace teamrec
