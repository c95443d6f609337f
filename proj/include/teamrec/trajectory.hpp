#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "teamrec/error.hpp"
#include "teamrec/rng.hpp"
#include "teamrec/textio.hpp"

namespace teamrec {

struct TrajectorySample {
  std::int64_t t = 0;
  double x = 0.0;
  double y = 0.0;
};

// Per-agent position samples at strictly increasing frame times.
struct AgentTrajectory {
  int agent_id = 0;
  std::vector<TrajectorySample> samples;

  void validate() const {
    if (samples.size() < 2) throw InvalidArgument("trajectory needs >= 2 samples (agent " + std::to_string(agent_id) + ")");
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (samples[i].t <= samples[i - 1].t)
        throw InvalidArgument("trajectory times must be strictly increasing (agent " + std::to_string(agent_id) + ")");
  }

  bool has_time(std::int64_t t) const {
    auto it = std::lower_bound(samples.begin(), samples.end(), t,
                               [](const TrajectorySample& s, std::int64_t v) { return s.t < v; });
    return it != samples.end() && it->t == t;
  }

  const TrajectorySample& at_time(std::int64_t t) const {
    auto it = std::lower_bound(samples.begin(), samples.end(), t,
                               [](const TrajectorySample& s, std::int64_t v) { return s.t < v; });
    if (it == samples.end() || it->t != t)
      throw InvalidArgument("agent " + std::to_string(agent_id) + " has no sample at t=" + std::to_string(t));
    return *it;
  }
};

// The Table 1 action vocabulary.
enum class Action {
  TravelingColumn,
  TravelingLine,
  TravelingBox,
  BoundingOverSearch,
  Wedge,
  TeamSplit,
  TeamMerge,
};

inline constexpr std::array<Action, 7> kAllActions = {
    Action::TravelingColumn, Action::TravelingLine,  Action::TravelingBox, Action::BoundingOverSearch,
    Action::Wedge,           Action::TeamSplit,      Action::TeamMerge,
};

inline std::string action_name(Action a) {
  switch (a) {
    case Action::TravelingColumn: return "traveling_column";
    case Action::TravelingLine: return "traveling_line";
    case Action::TravelingBox: return "traveling_box";
    case Action::BoundingOverSearch: return "bounding_over_search";
    case Action::Wedge: return "wedge";
    case Action::TeamSplit: return "team_split";
    case Action::TeamMerge: return "team_merge";
  }
  throw InvalidArgument("unknown action value");
}

inline Action parse_action(const std::string& name) {
  for (Action a : kAllActions)
    if (action_name(a) == name) return a;
  throw InvalidArgument("unknown action name '" + name + "'");
}

struct ScenarioSpec {
  Action action = Action::TravelingColumn;
  int agents = 4;
  int length = 60;       // frames
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (agents < 2) throw InvalidArgument("scenario must have >= 2 agents");
    if (length < 10) throw InvalidArgument("scenario length must be >= 10 frames");
    if (noise_sigma < 0.0) throw InvalidArgument("noise_sigma must be >= 0");
  }
};

// Formation-slot role vocabulary used by the generator's ground truth.
inline const std::vector<std::string>& role_names() {
  static const std::vector<std::string> names = {"lead", "left_flank", "right_flank", "rear"};
  return names;
}
inline constexpr int kRoleLead = 0;
inline constexpr int kRoleLeftFlank = 1;
inline constexpr int kRoleRightFlank = 2;
inline constexpr int kRoleRear = 3;

struct Scenario {
  std::vector<AgentTrajectory> trajectories;
  Action label = Action::TravelingColumn;
  // Ground-truth formation roles per frame per agent, rank-based along the
  // scenario's true heading.
  std::vector<std::vector<int>> roles;
};

namespace detail {

struct Vec2 {
  double x = 0.0, y = 0.0;
};
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::sqrt(dot(v, v)); }

// Rectangle-perimeter point at arc position s of a box with half extent h,
// walking clockwise from the front-right corner. n agents at s = i*8h/n put
// 4 agents exactly on the corners.
inline Vec2 box_perimeter_point(double h, double s) {
  const double side = 2.0 * h;
  s = std::fmod(s, 8.0 * h);
  if (s < side) return {h, h - s};
  if (s < 2 * side) return {h - (s - side), -h};
  if (s < 3 * side) return {-h, -h + (s - 2 * side)};
  return {-h + (s - 3 * side), h};
}

}  // namespace detail

// Mean pairwise inter-agent distance of a point set (the cohesion measure).
inline double mean_pairwise_distance(const std::vector<std::array<double, 2>>& pts) {
  if (pts.size() < 2) return 0.0;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double dx = pts[i][0] - pts[j][0];
      const double dy = pts[i][1] - pts[j][1];
      sum += std::sqrt(dx * dx + dy * dy);
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

inline std::vector<std::array<double, 2>> positions_at(const std::vector<AgentTrajectory>& trajs, std::int64_t t) {
  std::vector<std::array<double, 2>> pts;
  pts.reserve(trajs.size());
  for (const auto& tr : trajs) {
    const auto& s = tr.at_time(t);
    pts.push_back({s.x, s.y});
  }
  return pts;
}

// Synthesizes one teamwork scenario. A pure function of the spec: equal specs
// (including seed) give bitwise-identical trajectories.
//
// Formation templates are rigid offsets in the (heading, lateral) frame:
// column stacks agents along the heading, line puts them abreast, box places
// them on a rectangle perimeter, wedge forms a V behind a lead agent, and
// bounding over-search alternates which half of the team advances. Split and
// merge transition between a tight formation and two diverging groups; merge
// is the time reversal of a split-shaped construction so the distance
// contract holds by construction.
inline Scenario synth_team_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const int n = spec.agents;
  const int len = spec.length;
  Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(spec.action)));

  const double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  const detail::Vec2 u{std::cos(theta), std::sin(theta)};       // heading
  const detail::Vec2 lat{-std::sin(theta), std::cos(theta)};    // lateral
  const double speed = 1.0;
  const double spacing = 3.0;

  // positions[t][agent]
  std::vector<std::vector<detail::Vec2>> pos(static_cast<std::size_t>(len),
                                             std::vector<detail::Vec2>(static_cast<std::size_t>(n)));

  auto centered = [&](std::vector<detail::Vec2> offs) {
    detail::Vec2 mean{};
    for (const auto& o : offs) mean = mean + o;
    mean = (1.0 / n) * mean;
    for (auto& o : offs) o = o - mean;
    return offs;
  };

  auto rigid_offsets = [&](Action a) {
    std::vector<detail::Vec2> offs(static_cast<std::size_t>(n));
    switch (a) {
      case Action::TravelingColumn:
        for (int i = 0; i < n; ++i) offs[i] = (((n - 1) / 2.0 - i) * spacing) * u;
        break;
      case Action::TravelingLine:
        for (int i = 0; i < n; ++i) offs[i] = ((i - (n - 1) / 2.0) * spacing) * lat;
        break;
      case Action::TravelingBox: {
        const double h = 0.5 * spacing * std::max(1.0, n / 4.0);
        const double step = 8.0 * h / n;
        for (int i = 0; i < n; ++i) {
          const auto p = detail::box_perimeter_point(h, i * step);
          offs[i] = p.x * u + p.y * lat;
        }
        offs = centered(std::move(offs));
        break;
      }
      case Action::Wedge:
        for (int i = 0; i < n; ++i) {
          const int row = (i + 1) / 2;
          const double side = (i % 2 == 1) ? 1.0 : -1.0;
          offs[i] = (-2.0 * row) * u + (i == 0 ? 0.0 : side * 1.5 * row) * lat;
        }
        offs = centered(std::move(offs));
        break;
      default:
        throw InvalidArgument("rigid_offsets is only defined for traveling formations");
    }
    return offs;
  };

  const bool reversed = spec.action == Action::TeamMerge;
  const Action shape = reversed ? Action::TeamSplit : spec.action;

  switch (shape) {
    case Action::TravelingColumn:
    case Action::TravelingLine:
    case Action::TravelingBox:
    case Action::Wedge: {
      const auto offs = rigid_offsets(shape);
      for (int t = 0; t < len; ++t) {
        const detail::Vec2 c = (speed * t) * u;
        for (int i = 0; i < n; ++i) pos[t][i] = c + offs[i];
      }
      break;
    }
    case Action::BoundingOverSearch: {
      // Even agents form element A, odd agents element B. Elements take turns
      // advancing at double speed while the other overwatches, so the
      // along-heading gap oscillates.
      const int phase_len = std::max(4, len / 8);
      double along_a = 2.0, along_b = -2.0;
      std::vector<double> lat_off(static_cast<std::size_t>(n));
      {
        const int na = (n + 1) / 2, nb = n / 2;
        int ia = 0, ib = 0;
        for (int i = 0; i < n; ++i) {
          if (i % 2 == 0) lat_off[i] = (ia++ - (na - 1) / 2.0) * spacing;
          else lat_off[i] = (ib++ - (nb - 1) / 2.0) * spacing + spacing / 2.0;
        }
      }
      for (int t = 0; t < len; ++t) {
        for (int i = 0; i < n; ++i) {
          const double along = (i % 2 == 0) ? along_a : along_b;
          pos[t][i] = along * u + lat_off[i] * lat;
        }
        const bool a_moves = (t / phase_len) % 2 == 0;
        if (a_moves) along_a += 2.0 * speed;
        else along_b += 2.0 * speed;
      }
      break;
    }
    case Action::TeamSplit: {
      // Tight line abreast for the first third, then the two halves diverge
      // at +/- 60 degrees from the heading.
      const int split_at = len / 3;
      const double psi = 1.0471975511965976;  // 60 deg
      const detail::Vec2 u_left{std::cos(theta + psi), std::sin(theta + psi)};
      const detail::Vec2 u_right{std::cos(theta - psi), std::sin(theta - psi)};
      std::vector<detail::Vec2> offs(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) offs[i] = ((i - (n - 1) / 2.0) * spacing * 0.5) * lat;
      std::vector<detail::Vec2> cur(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) cur[i] = offs[i];
      for (int t = 0; t < len; ++t) {
        for (int i = 0; i < n; ++i) pos[t][i] = cur[i];
        for (int i = 0; i < n; ++i) {
          const bool left = i < n / 2;
          const detail::Vec2 dir = t < split_at ? u : (left ? u_left : u_right);
          cur[i] = cur[i] + speed * dir;
        }
      }
      break;
    }
    default:
      throw InvalidArgument("unhandled action shape");
  }

  if (reversed) {
    std::reverse(pos.begin(), pos.end());
  }

  Scenario out;
  out.label = spec.action;
  out.trajectories.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.trajectories[i].agent_id = i;
    out.trajectories[i].samples.reserve(static_cast<std::size_t>(len));
  }
  for (int t = 0; t < len; ++t) {
    for (int i = 0; i < n; ++i) {
      double x = pos[t][i].x;
      double y = pos[t][i].y;
      if (spec.noise_sigma > 0.0) {
        x += rng.gaussian(0.0, spec.noise_sigma);
        y += rng.gaussian(0.0, spec.noise_sigma);
      }
      out.trajectories[i].samples.push_back({t, x, y});
    }
  }

  // Rank-based ground-truth roles along the true heading: front-most agent
  // leads, back-most brings up the rear, everyone else flanks by side.
  const detail::Vec2 role_u = reversed ? detail::Vec2{-u.x, -u.y} : u;
  const detail::Vec2 role_lat{-role_u.y, role_u.x};
  out.roles.assign(static_cast<std::size_t>(len), std::vector<int>(static_cast<std::size_t>(n), kRoleLeftFlank));
  for (int t = 0; t < len; ++t) {
    std::vector<std::pair<double, int>> ranked;
    detail::Vec2 c{};
    for (int i = 0; i < n; ++i) {
      const auto& s = out.trajectories[i].samples[static_cast<std::size_t>(t)];
      c = c + detail::Vec2{s.x, s.y};
    }
    c = (1.0 / n) * c;
    for (int i = 0; i < n; ++i) {
      const auto& s = out.trajectories[i].samples[static_cast<std::size_t>(t)];
      ranked.emplace_back(dot(detail::Vec2{s.x, s.y} - c, role_u), i);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;  // front first
      return a.second < b.second;
    });
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      const int agent = ranked[r].second;
      if (r == 0) {
        out.roles[t][agent] = kRoleLead;
      } else if (r + 1 == ranked.size()) {
        out.roles[t][agent] = kRoleRear;
      } else {
        const auto& s = out.trajectories[agent].samples[static_cast<std::size_t>(t)];
        const double side = dot(detail::Vec2{s.x, s.y} - c, role_lat);
        out.roles[t][agent] = side < 0.0 ? kRoleLeftFlank : kRoleRightFlank;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory interchange: UTF-8 text, one `t agent_id x y` record per line,
// '#' comments. The companion label file holds the action name.
// ---------------------------------------------------------------------------

inline std::string format_trajectories(const std::vector<AgentTrajectory>& trajs) {
  std::string out = "# t agent_id x y\n";
  // Time-major so the file reads like the video would play.
  std::vector<std::size_t> idx(trajs.size(), 0);
  bool more = true;
  while (more) {
    more = false;
    std::int64_t t_min = 0;
    bool found = false;
    for (std::size_t a = 0; a < trajs.size(); ++a) {
      if (idx[a] < trajs[a].samples.size()) {
        const std::int64_t t = trajs[a].samples[idx[a]].t;
        if (!found || t < t_min) t_min = t, found = true;
      }
    }
    if (!found) break;
    for (std::size_t a = 0; a < trajs.size(); ++a) {
      if (idx[a] < trajs[a].samples.size() && trajs[a].samples[idx[a]].t == t_min) {
        const auto& s = trajs[a].samples[idx[a]++];
        out += std::to_string(s.t) + " " + std::to_string(trajs[a].agent_id) + " " + detail::fmt_g17(s.x) + " " +
               detail::fmt_g17(s.y) + "\n";
      }
    }
    more = true;
  }
  return out;
}

inline std::vector<AgentTrajectory> parse_trajectories(const std::string& text, const std::string& source_name = "<memory>") {
  std::map<int, AgentTrajectory> by_agent;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::int64_t t = 0;
    int agent = 0;
    double x = 0, y = 0;
    if (!(ls >> t >> agent >> x >> y))
      throw IoError("bad trajectory record at " + source_name + ":" + std::to_string(lineno));
    auto& tr = by_agent[agent];
    tr.agent_id = agent;
    tr.samples.push_back({t, x, y});
  }
  std::vector<AgentTrajectory> out;
  out.reserve(by_agent.size());
  for (auto& [id, tr] : by_agent) {
    std::sort(tr.samples.begin(), tr.samples.end(), [](const TrajectorySample& a, const TrajectorySample& b) { return a.t < b.t; });
    tr.validate();
    out.push_back(std::move(tr));
  }
  return out;
}

inline void save_trajectories(const std::vector<AgentTrajectory>& trajs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_trajectories(trajs);
}

inline std::vector<AgentTrajectory> load_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trajectories(ss.str(), path.string());
}

inline void save_label(Action a, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << action_name(a) << "\n";
}

inline Action load_label(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string name;
  in >> name;
  return parse_action(name);
}

// Role log: text lines `frame agent_id role`.
inline void save_roles(const std::vector<std::vector<int>>& roles, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# frame agent_id role\n";
  for (std::size_t t = 0; t < roles.size(); ++t)
    for (std::size_t a = 0; a < roles[t].size(); ++a)
      out << t << " " << a << " " << role_names()[static_cast<std::size_t>(roles[t][a])] << "\n";
}

inline std::vector<std::vector<int>> load_roles(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::int64_t, std::map<int, int>> grid;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::int64_t t = 0;
    int agent = 0;
    std::string role;
    if (!(ls >> t >> agent >> role)) throw IoError("bad role record at " + path.string() + ":" + std::to_string(lineno));
    const auto& names = role_names();
    const auto it = std::find(names.begin(), names.end(), role);
    if (it == names.end()) throw IoError("unknown role '" + role + "' at " + path.string() + ":" + std::to_string(lineno));
    grid[t][agent] = static_cast<int>(it - names.begin());
  }
  std::vector<std::vector<int>> out;
  for (auto& [t, row] : grid) {
    std::vector<int> r;
    for (auto& [a, role] : row) r.push_back(role);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace teamrec
