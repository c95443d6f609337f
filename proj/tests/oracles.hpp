#pragma once

// Independent reference implementations used only by tests. Everything here
// is written the dumb, obviously-correct way (flood fill, exhaustive
// enumeration, direct formulas) so library results can be checked against
// code that shares no logic with the implementation under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "teamrec/costmodel.hpp"
#include "teamrec/frame.hpp"
#include "teamrec/hmm.hpp"
#include "teamrec/rng.hpp"
#include "teamrec/segmentation.hpp"
#include "teamrec/svm.hpp"

namespace oracle {

using Partition = std::vector<std::vector<std::int64_t>>;

// Canonical form: each component sorted ascending, components ordered by
// their smallest offset.
inline Partition canonicalize(Partition p) {
  for (auto& c : p) std::sort(c.begin(), c.end());
  std::sort(p.begin(), p.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return p;
}

// BFS flood fill over the foreground of a mask.
inline Partition flood_fill_partition(const teamrec::BinaryMask& mask, teamrec::Connectivity conn) {
  const int w = mask.width, h = mask.height;
  std::vector<char> seen(static_cast<std::size_t>(w) * h, 0);
  Partition parts;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const std::size_t sp = static_cast<std::size_t>(sy) * w + sx;
      if (!mask.bits[sp] || seen[sp]) continue;
      std::vector<std::int64_t> comp;
      std::queue<std::pair<int, int>> q;
      q.push({sx, sy});
      seen[sp] = 1;
      while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop();
        comp.push_back(static_cast<std::int64_t>(y) * w + x);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (conn == teamrec::Connectivity::Four && dx != 0 && dy != 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t np = static_cast<std::size_t>(ny) * w + nx;
            if (!mask.bits[np] || seen[np]) continue;
            seen[np] = 1;
            q.push({nx, ny});
          }
        }
      }
      parts.push_back(std::move(comp));
    }
  }
  return canonicalize(std::move(parts));
}

inline Partition labeling_partition(const teamrec::Labeling& lab) {
  std::map<int, std::vector<std::int64_t>> by_label;
  for (std::size_t p = 0; p < lab.labels.size(); ++p)
    if (lab.labels[p] > 0) by_label[lab.labels[p]].push_back(static_cast<std::int64_t>(p));
  Partition parts;
  for (auto& [l, pix] : by_label) parts.push_back(std::move(pix));
  return canonicalize(std::move(parts));
}

inline Partition filter_min_area(Partition p, int min_area) {
  Partition out;
  for (auto& c : p)
    if (static_cast<int>(c.size()) >= min_area) out.push_back(std::move(c));
  return canonicalize(std::move(out));
}

inline teamrec::BinaryMask random_mask(int w, int h, double density, teamrec::Rng& rng) {
  auto m = teamrec::BinaryMask::make(w, h);
  for (auto& b : m.bits) b = rng.uniform() < density ? 1 : 0;
  return m;
}

// ---------------------------------------------------------------------------
// HMM: exhaustive path enumeration. Feasible for n_states^T up to a few
// thousand; tests keep n <= 4 and T <= 6.
// ---------------------------------------------------------------------------

// P(obs) as a plain sum over all state paths.
inline double pathsum_likelihood(const teamrec::HmmModel& m, const std::vector<int>& obs) {
  const int n = m.n_states;
  const std::size_t T = obs.size();
  std::vector<int> q(T, 0);
  double total = 0.0;
  for (;;) {
    double p = m.pi[static_cast<std::size_t>(q[0])] * m.b[static_cast<std::size_t>(q[0])][static_cast<std::size_t>(obs[0])];
    for (std::size_t t = 1; t < T; ++t)
      p *= m.a[static_cast<std::size_t>(q[t - 1])][static_cast<std::size_t>(q[t])] *
           m.b[static_cast<std::size_t>(q[t])][static_cast<std::size_t>(obs[t])];
    total += p;
    std::size_t d = T;
    while (d > 0 && ++q[d - 1] == n) q[--d] = 0;
    if (d == 0) break;
  }
  return total;
}

struct BestPath {
  std::vector<int> path;
  double log_prob = 0.0;
};

// Max over all paths of the log-probability accumulated left to right (the
// exact summation order the DP uses, so equal values compare bitwise).
// Tie-break: among maximizing paths, the one whose state tuple is smallest
// when compared from the LAST time step backwards — that is what "lowest
// final state, then lowest maximizing predecessor" backtracking selects.
inline BestPath exhaustive_viterbi(const teamrec::HmmModel& m, const std::vector<int>& obs) {
  const int n = m.n_states;
  const std::size_t T = obs.size();
  const double ninf = -std::numeric_limits<double>::infinity();
  auto lg = [&](double v) { return v > 0.0 ? std::log(v) : ninf; };

  auto reverse_less = [&](const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t t = T; t > 0; --t)
      if (a[t - 1] != b[t - 1]) return a[t - 1] < b[t - 1];
    return false;
  };

  BestPath best;
  best.log_prob = ninf;
  std::vector<int> q(T, 0);
  bool first = true;
  for (;;) {
    double lp = lg(m.pi[static_cast<std::size_t>(q[0])]) + lg(m.b[static_cast<std::size_t>(q[0])][static_cast<std::size_t>(obs[0])]);
    for (std::size_t t = 1; t < T; ++t) {
      lp = lp + lg(m.a[static_cast<std::size_t>(q[t - 1])][static_cast<std::size_t>(q[t])]);
      lp = lp + lg(m.b[static_cast<std::size_t>(q[t])][static_cast<std::size_t>(obs[t])]);
    }
    if (first || lp > best.log_prob || (lp == best.log_prob && reverse_less(q, best.path))) {
      best.log_prob = lp;
      best.path = q;
      first = false;
    }
    std::size_t d = T;
    while (d > 0 && ++q[d - 1] == n) q[--d] = 0;
    if (d == 0) break;
  }
  return best;
}

// Row-stochastic model with strictly positive entries, drawn independently
// of the library's blessed initializer.
inline teamrec::HmmModel random_hmm(teamrec::Rng& rng, int n, int m) {
  teamrec::HmmModel h;
  h.n_states = n;
  h.m_symbols = m;
  auto row = [&](int len) {
    std::vector<double> r(static_cast<std::size_t>(len));
    double s = 0.0;
    for (auto& v : r) s += (v = rng.uniform(0.02, 1.0));
    for (auto& v : r) v /= s;
    return r;
  };
  h.pi = row(n);
  for (int i = 0; i < n; ++i) {
    h.a.push_back(row(n));
    h.b.push_back(row(m));
  }
  return h;
}

// ---------------------------------------------------------------------------
// SVM: the soft-margin dual solved by exhaustive pairwise coordinate ascent.
// The QP is concave over a box with one equality constraint, so sweeping all
// index pairs with the analytic two-variable update converges to the global
// maximum; no working-set heuristics shared with the trainer.
// ---------------------------------------------------------------------------

struct QpSolution {
  std::vector<double> alpha;
  double objective = 0.0;
};

inline double qp_dual_objective(const std::vector<std::vector<double>>& k, const std::vector<int>& y,
                                const std::vector<double>& alpha) {
  const std::size_t n = alpha.size();
  double obj = 0.0;
  for (std::size_t i = 0; i < n; ++i) obj += alpha[i];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
  return obj;
}

// y entries must be +/-1.
inline QpSolution solve_svm_dual(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                 const teamrec::SvmConfig& cfg) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> k(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) k[i][j] = teamrec::detail::kernel_eval(cfg, x[i], x[j]);

  std::vector<double> alpha(n, 0.0);
  std::vector<double> f(n, 0.0);  // f_i = sum_k alpha_k y_k K_ik
  const double c = cfg.c;
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double ei = f[i] - y[i];
        const double ej = f[j] - y[j];
        double lo, hi;
        if (y[i] != y[j]) {
          lo = std::max(0.0, alpha[j] - alpha[i]);
          hi = std::min(c, c + alpha[j] - alpha[i]);
        } else {
          lo = std::max(0.0, alpha[i] + alpha[j] - c);
          hi = std::min(c, alpha[i] + alpha[j]);
        }
        if (hi - lo < 1e-15) continue;
        const double eta = k[i][i] + k[j][j] - 2.0 * k[i][j];
        double aj;
        if (eta > 1e-12) {
          aj = std::min(hi, std::max(lo, alpha[j] + y[j] * (ei - ej) / eta));
        } else {
          // Flat direction: the objective is linear along the pair; test both ends.
          auto try_end = [&](double cand) {
            std::vector<double> trial = alpha;
            trial[j] = cand;
            trial[i] = alpha[i] + y[i] * y[j] * (alpha[j] - cand);
            return qp_dual_objective(k, y, trial);
          };
          aj = try_end(lo) >= try_end(hi) ? lo : hi;
        }
        const double dj = aj - alpha[j];
        if (std::abs(dj) < 1e-14) continue;
        const double ai = alpha[i] + y[i] * y[j] * (alpha[j] - aj);
        const double di = ai - alpha[i];
        for (std::size_t p = 0; p < n; ++p) f[p] += di * y[i] * k[i][p] + dj * y[j] * k[j][p];
        alpha[i] = ai;
        alpha[j] = aj;
        moved += std::abs(di) + std::abs(dj);
      }
    }
    if (moved < 1e-12) break;
  }
  return {alpha, qp_dual_objective(k, y, alpha)};
}

// ---------------------------------------------------------------------------
// ID3: brute-force information gain.
// ---------------------------------------------------------------------------

inline double direct_entropy(const std::vector<double>& counts) {
  double total = 0.0;
  for (double v : counts) total += v;
  double h = 0.0;
  for (double v : counts) {
    if (v <= 0.0) continue;
    const double p = v / total;
    h -= p * std::log2(p);
  }
  return h;
}

inline double brute_force_gain(const std::vector<std::vector<int>>& x, const std::vector<int>& y, int feature,
                               int radix, int n_classes) {
  std::vector<double> parent(static_cast<std::size_t>(n_classes), 0.0);
  for (int label : y) parent[static_cast<std::size_t>(label)] += 1.0;
  std::vector<std::vector<double>> child(static_cast<std::size_t>(radix),
                                         std::vector<double>(static_cast<std::size_t>(n_classes), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i)
    child[static_cast<std::size_t>(x[i][static_cast<std::size_t>(feature)])][static_cast<std::size_t>(y[i])] += 1.0;
  double weighted = 0.0;
  for (const auto& c : child) {
    double sz = 0.0;
    for (double v : c) sz += v;
    if (sz > 0.0) weighted += sz / static_cast<double>(x.size()) * direct_entropy(c);
  }
  return direct_entropy(parent) - weighted;
}

inline int best_gain_feature(const std::vector<std::vector<int>>& x, const std::vector<int>& y,
                             const std::vector<int>& radices, int n_classes) {
  int best = 0;
  double best_gain = -1.0;
  for (std::size_t f = 0; f < radices.size(); ++f) {
    const double g = brute_force_gain(x, y, static_cast<int>(f), radices[f], n_classes);
    if (g > best_gain + 1e-12) {
      best_gain = g;
      best = static_cast<int>(f);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Sliding-window majority with tie-keeps-previous, per the role contract.
// ---------------------------------------------------------------------------

inline std::vector<int> window_majority(const std::vector<int>& raw, int w, int n_classes) {
  std::vector<int> out(raw.size());
  int prev = -1;
  for (std::size_t t = 0; t < raw.size(); ++t) {
    std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
    const std::size_t lo = t + 1 >= static_cast<std::size_t>(w) ? t + 1 - static_cast<std::size_t>(w) : 0;
    for (std::size_t u = lo; u <= t; ++u) votes[static_cast<std::size_t>(raw[u])] += 1;
    const int top = *std::max_element(votes.begin(), votes.end());
    std::vector<int> winners;
    for (int c = 0; c < n_classes; ++c)
      if (votes[static_cast<std::size_t>(c)] == top) winners.push_back(c);
    int pick = winners.front();
    if (winners.size() > 1 && prev >= 0) pick = prev;
    out[t] = pick;
    prev = pick;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cost model: term-by-term summation and recursive brute-force placement.
// ---------------------------------------------------------------------------

inline double sum_cost_terms(const teamrec::CostModel& m) {
  double pt_cpu = 0.0, pt_gpu = 0.0, ct_gc = 0.0, ct_nn = 0.0;
  for (const auto& t : m.tasks) {
    const teamrec::Placement& p = m.placement.at(t.name);
    if (p.kind == teamrec::PlaceKind::Cpu) pt_cpu += t.pt_cpu;
    else pt_gpu += t.pt_gpu;
  }
  for (const auto& e : m.edges) {
    const teamrec::Placement& pu = m.placement.at(e.from);
    const teamrec::Placement& pv = m.placement.at(e.to);
    if (pu.kind != pv.kind) ct_gc += e.ct_gpu_cpu;
    if (pu.effective_node() != pv.effective_node()) ct_nn += e.ct_node_node;
  }
  return pt_cpu + pt_gpu + ct_gc + ct_nn;
}

// Depth-first enumeration in the encoding order cpu < gpu0 < gpu1 < ...,
// task 0 most significant; strict improvement keeps the first (lexicographic
// smallest) argmin.
inline teamrec::PlacementResult brute_force_placement(const teamrec::CostModel& m) {
  teamrec::PlacementResult best;
  best.total = std::numeric_limits<double>::infinity();
  teamrec::CostModel work = m;
  work.placement.clear();

  std::vector<teamrec::Placement> options;
  options.push_back({teamrec::PlaceKind::Cpu, 0});
  for (int g = 0; g < m.n_nodes; ++g) options.push_back({teamrec::PlaceKind::Gpu, g});

  std::vector<teamrec::Placement> chosen(m.tasks.size());
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == m.tasks.size()) {
      work.placement.clear();
      for (std::size_t t = 0; t < m.tasks.size(); ++t) work.placement[m.tasks[t].name] = chosen[t];
      const double total = sum_cost_terms(work);
      if (total < best.total) {
        best.total = total;
        best.placement = work.placement;
      }
      return;
    }
    if (m.tasks[i].pinned) {
      chosen[i] = *m.tasks[i].pinned;
      self(self, i + 1);
      return;
    }
    for (const auto& opt : options) {
      chosen[i] = opt;
      self(self, i + 1);
    }
  };
  rec(rec, 0);
  return best;
}

}  // namespace oracle
