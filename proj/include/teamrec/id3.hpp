#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "teamrec/error.hpp"
#include "teamrec/parallel.hpp"
#include "teamrec/rng.hpp"
#include "teamrec/textio.hpp"

namespace teamrec {

enum class Id3Mode { TreeLeaf, ForestLeaves };

inline std::string id3_mode_name(Id3Mode m) { return m == Id3Mode::TreeLeaf ? "tree_leaf" : "forest_leaves"; }

inline Id3Mode parse_id3_mode(const std::string& s) {
  if (s == "tree_leaf") return Id3Mode::TreeLeaf;
  if (s == "forest_leaves") return Id3Mode::ForestLeaves;
  throw InvalidArgument("unknown id3 mode '" + s + "' (expected tree_leaf|forest_leaves)");
}

struct Id3Config {
  Id3Mode mode = Id3Mode::TreeLeaf;
  int n_trees = 1;
  int n_classes = 2;
  int max_depth = 16;
  int min_samples = 2;
  double feature_bagging_fraction = 0.7;  // ForestLeaves only
  std::uint64_t seed = 0;
  int role_window = 5;  // majority-vote stabilization length

  void validate() const {
    if (n_trees < 1) throw ConfigError("id3 n_trees must be >= 1");
    if (mode == Id3Mode::TreeLeaf && n_trees != 1) throw ConfigError("tree_leaf mode requires n_trees = 1");
    if (n_classes < 2) throw ConfigError("id3 n_classes must be >= 2");
    if (max_depth < 1) throw ConfigError("id3 max_depth must be >= 1");
    if (min_samples < 1) throw ConfigError("id3 min_samples must be >= 1");
    if (!(feature_bagging_fraction > 0.0) || feature_bagging_fraction > 1.0)
      throw ConfigError("id3 feature_bagging_fraction must be in (0,1]");
    if (role_window < 1) throw ConfigError("id3 role_window must be >= 1");
  }
};

// Flat, pointer-free tree: internal nodes hold a feature index and one child
// per symbol of that feature; leaves hold a class-count histogram.
struct DecisionTree {
  struct Node {
    int feature = -1;             // -1 marks a leaf
    std::vector<int> children;    // internal: child index per feature symbol
    std::vector<double> histogram;  // leaf: class counts
    bool is_leaf() const { return feature < 0; }
  };
  std::vector<Node> nodes;  // root at 0, preorder
};

struct Id3Model {
  Id3Config cfg;
  std::vector<int> radices;  // per-feature symbol counts
  std::vector<DecisionTree> trees;
};

// Shannon entropy in bits over nonnegative class counts, 0*log0 = 0.
inline double entropy(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) {
    if (c < 0.0) throw InvalidArgument("entropy: negative count");
    total += c;
  }
  if (total <= 0.0) throw InvalidArgument("entropy: all counts are zero");
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    h -= p * std::log2(p);
  }
  return h;
}

// Information gain of splitting `idx` on feature f: parent entropy minus the
// count-weighted entropy of the children. Exposed so tests can brute-force
// the argmax independently.
inline double information_gain(const std::vector<std::vector<int>>& x, const std::vector<int>& y,
                               const std::vector<std::size_t>& idx, int f, int radix, int n_classes) {
  std::vector<double> parent(static_cast<std::size_t>(n_classes), 0.0);
  std::vector<std::vector<double>> child(static_cast<std::size_t>(radix),
                                         std::vector<double>(static_cast<std::size_t>(n_classes), 0.0));
  for (std::size_t i : idx) {
    parent[static_cast<std::size_t>(y[i])] += 1.0;
    child[static_cast<std::size_t>(x[i][static_cast<std::size_t>(f)])][static_cast<std::size_t>(y[i])] += 1.0;
  }
  double g = entropy(parent);
  const double n = static_cast<double>(idx.size());
  for (int s = 0; s < radix; ++s) {
    double cn = 0.0;
    for (double c : child[static_cast<std::size_t>(s)]) cn += c;
    if (cn > 0.0) g -= (cn / n) * entropy(child[static_cast<std::size_t>(s)]);
  }
  return g;
}

namespace detail {

struct Id3Builder {
  const std::vector<std::vector<int>>& x;
  const std::vector<int>& y;
  const std::vector<int>& radices;
  const Id3Config& cfg;
  const std::vector<bool>& feature_allowed;  // bagging mask
  DecisionTree tree;

  std::vector<double> histogram_of(const std::vector<std::size_t>& idx) const {
    std::vector<double> h(static_cast<std::size_t>(cfg.n_classes), 0.0);
    for (std::size_t i : idx) h[static_cast<std::size_t>(y[i])] += 1.0;
    return h;
  }

  int make_leaf(std::vector<double> hist) {
    DecisionTree::Node node;
    node.histogram = std::move(hist);
    tree.nodes.push_back(std::move(node));
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  // Preorder build. `used` tracks features already split on this path: a
  // discrete feature can contribute at most once per branch.
  int build(const std::vector<std::size_t>& idx, std::vector<bool>& used, int depth) {
    auto hist = histogram_of(idx);
    const bool pure = std::count_if(hist.begin(), hist.end(), [](double c) { return c > 0.0; }) <= 1;
    bool any_feature = false;
    for (std::size_t f = 0; f < radices.size(); ++f)
      if (!used[f] && feature_allowed[f]) any_feature = true;
    if (pure || depth >= cfg.max_depth || static_cast<int>(idx.size()) < cfg.min_samples || !any_feature)
      return make_leaf(std::move(hist));

    int best_f = -1;
    double best_gain = -1.0;
    for (std::size_t f = 0; f < radices.size(); ++f) {
      if (used[f] || !feature_allowed[f]) continue;
      const double g = information_gain(x, y, idx, static_cast<int>(f), radices[f], cfg.n_classes);
      if (g > best_gain) best_gain = g, best_f = static_cast<int>(f);
    }

    const int self = static_cast<int>(tree.nodes.size());
    {
      DecisionTree::Node node;
      node.feature = best_f;
      node.children.assign(static_cast<std::size_t>(radices[static_cast<std::size_t>(best_f)]), -1);
      tree.nodes.push_back(std::move(node));
    }
    std::vector<std::vector<std::size_t>> parts(static_cast<std::size_t>(radices[static_cast<std::size_t>(best_f)]));
    for (std::size_t i : idx) parts[static_cast<std::size_t>(x[i][static_cast<std::size_t>(best_f)])].push_back(i);
    used[static_cast<std::size_t>(best_f)] = true;
    for (std::size_t s = 0; s < parts.size(); ++s) {
      int child;
      if (parts[s].empty()) child = make_leaf(histogram_of(idx));  // fall back to the parent's distribution
      else child = build(parts[s], used, depth + 1);
      tree.nodes[static_cast<std::size_t>(self)].children[s] = child;
    }
    used[static_cast<std::size_t>(best_f)] = false;
    return self;
  }
};

}  // namespace detail

inline Id3Model id3_train(const std::vector<std::vector<int>>& x, const std::vector<int>& y,
                          const std::vector<int>& radices, const Id3Config& cfg,
                          const Backend& backend = Backend::sequential()) {
  cfg.validate();
  if (x.empty()) throw InvalidArgument("id3_train needs >= 1 example");
  if (x.size() != y.size()) throw InvalidArgument("id3_train: |x| != |y|");
  if (radices.empty()) throw InvalidArgument("id3_train needs >= 1 feature");
  for (int r : radices)
    if (r < 2) throw InvalidArgument("id3_train: every feature needs >= 2 symbols");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != radices.size()) throw InvalidArgument("id3_train: example " + std::to_string(i) + " has wrong arity");
    for (std::size_t f = 0; f < radices.size(); ++f)
      if (x[i][f] < 0 || x[i][f] >= radices[f])
        throw InvalidArgument("id3_train: example " + std::to_string(i) + " feature " + std::to_string(f) +
                              " symbol out of range");
    if (y[i] < 0 || y[i] >= cfg.n_classes) throw InvalidArgument("id3_train: label out of range at example " + std::to_string(i));
  }

  Id3Model model;
  model.cfg = cfg;
  model.radices = radices;

  std::vector<int> tree_ids(static_cast<std::size_t>(cfg.n_trees));
  std::iota(tree_ids.begin(), tree_ids.end(), 0);
  model.trees = parallel_map(
      tree_ids,
      [&](int ti) {
        std::vector<std::size_t> idx;
        std::vector<bool> allowed(radices.size(), true);
        if (cfg.mode == Id3Mode::ForestLeaves) {
          Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(ti)));
          // bootstrap resample
          idx.resize(x.size());
          for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(x.size()) - 1));
          // per-tree feature bag: partial Fisher-Yates, keep k features
          const int k = std::max(1, static_cast<int>(std::lround(cfg.feature_bagging_fraction *
                                                                 static_cast<double>(radices.size()))));
          std::vector<std::size_t> order(radices.size());
          std::iota(order.begin(), order.end(), 0);
          for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                                    static_cast<std::int64_t>(order.size()) - 1));
            std::swap(order[i], order[j]);
          }
          std::fill(allowed.begin(), allowed.end(), false);
          for (int i = 0; i < k; ++i) allowed[order[static_cast<std::size_t>(i)]] = true;
        } else {
          idx.resize(x.size());
          std::iota(idx.begin(), idx.end(), 0);
        }
        detail::Id3Builder builder{x, y, radices, cfg, allowed, {}};
        std::vector<bool> used(radices.size(), false);
        builder.build(idx, used, 0);
        return std::move(builder.tree);
      },
      backend);
  return model;
}

struct Id3Prediction {
  int label = 0;
  std::vector<double> distribution;  // summed leaf histograms
};

inline Id3Prediction classify(const Id3Model& model, const std::vector<int>& x) {
  if (x.size() != model.radices.size()) throw InvalidArgument("classify: feature arity mismatch");
  for (std::size_t f = 0; f < x.size(); ++f)
    if (x[f] < 0 || x[f] >= model.radices[f])
      throw InvalidArgument("classify: symbol " + std::to_string(x[f]) + " out of range for feature " + std::to_string(f));
  Id3Prediction out;
  out.distribution.assign(static_cast<std::size_t>(model.cfg.n_classes), 0.0);
  for (const DecisionTree& tree : model.trees) {
    int node = 0;
    while (!tree.nodes[static_cast<std::size_t>(node)].is_leaf())
      node = tree.nodes[static_cast<std::size_t>(node)]
                 .children[static_cast<std::size_t>(x[static_cast<std::size_t>(tree.nodes[static_cast<std::size_t>(node)].feature)])];
    const auto& hist = tree.nodes[static_cast<std::size_t>(node)].histogram;
    for (std::size_t c = 0; c < hist.size(); ++c) out.distribution[c] += hist[c];
  }
  out.label = 0;
  for (std::size_t c = 1; c < out.distribution.size(); ++c)
    if (out.distribution[c] > out.distribution[static_cast<std::size_t>(out.label)]) out.label = static_cast<int>(c);
  return out;
}

inline std::vector<int> classify_batch(const Id3Model& model, const std::vector<std::vector<int>>& xs,
                                       const Backend& backend = Backend::sequential()) {
  return parallel_map(
      xs, [&](const std::vector<int>& x) { return classify(model, x).label; }, backend);
}

// Per-agent role streams with majority-vote smoothing: the role at frame t is
// the majority of the raw classifications over the last `role_window` frames;
// a tied vote keeps the previous smoothed role.
// frames_features[t][agent] is one discrete feature vector.
inline std::vector<std::vector<int>> assign_roles(const std::vector<std::vector<std::vector<int>>>& frames_features,
                                                  const Id3Model& model,
                                                  const Backend& backend = Backend::sequential()) {
  const int w = model.cfg.role_window;
  std::vector<std::vector<int>> raw(frames_features.size());
  for (std::size_t t = 0; t < frames_features.size(); ++t) raw[t] = classify_batch(model, frames_features[t], backend);

  std::vector<std::vector<int>> out(raw.size());
  if (raw.empty()) return out;
  const std::size_t agents = raw[0].size();
  for (std::size_t t = 0; t < raw.size(); ++t) {
    if (raw[t].size() != agents) throw InvalidArgument("assign_roles: agent count varies across frames");
    out[t].resize(agents);
  }
  for (std::size_t a = 0; a < agents; ++a) {
    int prev = -1;
    for (std::size_t t = 0; t < raw.size(); ++t) {
      std::vector<int> votes(static_cast<std::size_t>(model.cfg.n_classes), 0);
      const std::size_t lo = t + 1 >= static_cast<std::size_t>(w) ? t + 1 - static_cast<std::size_t>(w) : 0;
      for (std::size_t u = lo; u <= t; ++u) votes[static_cast<std::size_t>(raw[u][a])] += 1;
      int best = 0;
      bool tie = false;
      for (int c = 1; c < model.cfg.n_classes; ++c) {
        if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c, tie = false;
        else if (votes[static_cast<std::size_t>(c)] == votes[static_cast<std::size_t>(best)]) tie = true;
      }
      if (tie && prev >= 0) best = prev;
      out[t][a] = best;
      prev = best;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: versioned text, preorder node listing per tree.
// ---------------------------------------------------------------------------

inline std::string format_id3(const Id3Model& model) {
  using detail::fmt_g17;
  std::string out = "id3 v1\n";
  out += "mode " + id3_mode_name(model.cfg.mode) + "\n";
  out += "n_trees " + std::to_string(model.trees.size()) + "\n";
  out += "n_classes " + std::to_string(model.cfg.n_classes) + "\n";
  out += "features " + std::to_string(model.radices.size());
  for (int r : model.radices) out += " " + std::to_string(r);
  out += "\n";
  for (std::size_t ti = 0; ti < model.trees.size(); ++ti) {
    const auto& tree = model.trees[ti];
    out += "tree " + std::to_string(ti) + " nodes " + std::to_string(tree.nodes.size()) + "\n";
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) {
        out += "leaf";
        for (double c : node.histogram) out += " " + fmt_g17(c);
      } else {
        out += "internal " + std::to_string(node.feature);
        for (int c : node.children) out += " " + std::to_string(c);
      }
      out += "\n";
    }
  }
  return out;
}

inline Id3Model parse_id3(const std::string& text, const std::string& source = "<memory>") {
  using detail::expect_token;
  using detail::read_value;
  std::istringstream in(text);
  expect_token(in, "id3", source);
  expect_token(in, "v1", source);
  Id3Model model;
  expect_token(in, "mode", source);
  model.cfg.mode = parse_id3_mode(read_value<std::string>(in, "mode", source));
  expect_token(in, "n_trees", source);
  const int n_trees = read_value<int>(in, "n_trees", source);
  model.cfg.n_trees = n_trees;
  expect_token(in, "n_classes", source);
  model.cfg.n_classes = read_value<int>(in, "n_classes", source);
  expect_token(in, "features", source);
  const int nf = read_value<int>(in, "feature count", source);
  model.radices.resize(static_cast<std::size_t>(nf));
  for (auto& r : model.radices) r = read_value<int>(in, "radix", source);
  model.cfg.validate();
  for (int ti = 0; ti < n_trees; ++ti) {
    expect_token(in, "tree", source);
    const int idx = read_value<int>(in, "tree index", source);
    if (idx != ti) throw IoError("tree " + std::to_string(ti) + " out of order in " + source);
    expect_token(in, "nodes", source);
    const int nn = read_value<int>(in, "node count", source);
    DecisionTree tree;
    tree.nodes.resize(static_cast<std::size_t>(nn));
    for (int ni = 0; ni < nn; ++ni) {
      const auto kind = read_value<std::string>(in, "node kind", source);
      auto& node = tree.nodes[static_cast<std::size_t>(ni)];
      if (kind == "leaf") {
        node.feature = -1;
        node.histogram.resize(static_cast<std::size_t>(model.cfg.n_classes));
        for (auto& c : node.histogram) c = read_value<double>(in, "leaf count", source);
      } else if (kind == "internal") {
        node.feature = read_value<int>(in, "feature index", source);
        if (node.feature < 0 || node.feature >= nf) throw IoError("feature index out of range in " + source);
        node.children.resize(static_cast<std::size_t>(model.radices[static_cast<std::size_t>(node.feature)]));
        for (auto& c : node.children) {
          c = read_value<int>(in, "child index", source);
          if (c < 0 || c >= nn) throw IoError("child index out of range in " + source);
        }
      } else {
        throw IoError("unknown node kind '" + kind + "' in " + source);
      }
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

inline void save_id3(const Id3Model& model, const std::filesystem::path& path) { detail::spit(path, format_id3(model)); }

inline Id3Model load_id3(const std::filesystem::path& path) { return parse_id3(detail::slurp(path), path.string()); }

}  // namespace teamrec
