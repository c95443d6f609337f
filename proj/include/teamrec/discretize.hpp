#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "teamrec/error.hpp"
#include "teamrec/svm.hpp"
#include "teamrec/textio.hpp"
#include "teamrec/trajectory.hpp"

namespace teamrec {

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> schema;  // ordered feature names

  void validate() const {
    if (values.size() != schema.size()) throw InvalidArgument("feature vector: |values| != |schema|");
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!std::isfinite(values[i])) throw InvalidArgument("feature '" + schema[i] + "' is not finite");
  }
};

enum class RuleKind { Threshold, Svm };

struct FeatureRule {
  std::string feature;
  RuleKind kind = RuleKind::Threshold;
  // Threshold: strictly increasing cuts, |symbols| = |cuts| + 1.
  std::vector<double> cuts;
  std::vector<std::string> symbols;
  // Svm: 1-D model whose classes are the symbols.
  SvmModel svm;
  std::string svm_path;  // serialized reference

  int n_symbols() const { return kind == RuleKind::Threshold ? static_cast<int>(symbols.size()) : svm.cfg.n_classes; }

  void validate() const {
    if (feature.empty()) throw ConfigError("discretizer rule needs a feature name");
    if (kind == RuleKind::Threshold) {
      if (symbols.size() < 2) throw ConfigError("feature '" + feature + "' needs >= 2 symbols");
      if (cuts.size() + 1 != symbols.size())
        throw ConfigError("feature '" + feature + "': symbol count must be cut count + 1");
      for (std::size_t i = 1; i < cuts.size(); ++i)
        if (!(cuts[i] > cuts[i - 1])) throw ConfigError("feature '" + feature + "': cut points must be strictly increasing");
    } else {
      if (svm.cfg.feature_len != 1) throw ConfigError("feature '" + feature + "': svm rule needs a 1-D model");
      if (svm.cfg.n_classes < 2) throw ConfigError("feature '" + feature + "' needs >= 2 symbols");
    }
  }
};

struct DiscretizerSpec {
  std::vector<FeatureRule> rules;  // schema order

  void validate() const {
    if (rules.empty()) throw ConfigError("discretizer needs >= 1 feature rule");
    for (const auto& r : rules) r.validate();
  }

  // Joint alphabet size: product of per-feature symbol counts.
  int alphabet_size() const {
    std::int64_t m = 1;
    for (const auto& r : rules) {
      m *= r.n_symbols();
      if (m > (1 << 30)) throw ConfigError("discretizer alphabet overflows");
    }
    return static_cast<int>(m);
  }
};

// Per-feature symbol. Thresholds use the fixed boundary rule: a value below a
// cut takes the lower symbol, a value equal to a cut takes the upper one —
// i.e. symbol = number of cuts <= value. Monotone by construction.
inline int discretize_value(const FeatureRule& rule, double v) {
  if (rule.kind == RuleKind::Threshold) {
    int s = 0;
    for (double c : rule.cuts)
      if (c <= v) ++s;
    return s;
  }
  return svm_predict(rule.svm, {v}).label;
}

inline std::vector<int> discretize(const FeatureVector& f, const DiscretizerSpec& spec) {
  f.validate();
  spec.validate();
  if (f.schema.size() != spec.rules.size())
    throw InvalidArgument("feature vector has " + std::to_string(f.schema.size()) + " features, discretizer expects " +
                          std::to_string(spec.rules.size()));
  std::vector<int> symbols(spec.rules.size());
  for (std::size_t i = 0; i < spec.rules.size(); ++i) {
    if (f.schema[i] != spec.rules[i].feature)
      throw InvalidArgument("schema mismatch at position " + std::to_string(i) + ": '" + f.schema[i] + "' vs rule '" +
                            spec.rules[i].feature + "'");
    symbols[i] = discretize_value(spec.rules[i], f.values[i]);
  }
  return symbols;
}

// Mixed-radix joint encoding, feature 0 most significant. Bijective onto
// [0, alphabet_size).
inline int encode_joint(const std::vector<int>& symbols, const DiscretizerSpec& spec) {
  if (symbols.size() != spec.rules.size()) throw InvalidArgument("encode_joint: symbol count mismatch");
  std::int64_t code = 0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const int radix = spec.rules[i].n_symbols();
    if (symbols[i] < 0 || symbols[i] >= radix)
      throw InvalidArgument("encode_joint: symbol " + std::to_string(symbols[i]) + " out of range for feature '" +
                            spec.rules[i].feature + "'");
    code = code * radix + symbols[i];
  }
  return static_cast<int>(code);
}

inline std::vector<int> decode_joint(int code, const DiscretizerSpec& spec) {
  if (code < 0 || code >= spec.alphabet_size()) throw InvalidArgument("decode_joint: code out of range");
  std::vector<int> symbols(spec.rules.size());
  for (std::size_t i = spec.rules.size(); i-- > 0;) {
    const int radix = spec.rules[i].n_symbols();
    symbols[i] = code % radix;
    code /= radix;
  }
  return symbols;
}

struct ObservationSequence {
  std::vector<int> symbols;
  int m = 0;  // alphabet size
  std::string source;

  void validate() const {
    if (symbols.empty()) throw InvalidArgument("observation sequence must be non-empty");
    for (int s : symbols)
      if (s < 0 || s >= m) throw InvalidArgument("observation symbol " + std::to_string(s) + " outside [0," + std::to_string(m) + ")");
  }
};

// ---------------------------------------------------------------------------
// Team features: the six-component reconstruction of the team state at one
// frame, all measured from trajectories at t and t-1.
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& team_feature_schema() {
  static const std::vector<std::string> schema = {"speed",        "heading_change", "cohesion",
                                                  "spread_along", "spread_lateral", "formation_error"};
  return schema;
}

inline FeatureVector team_features(const std::vector<AgentTrajectory>& trajs, std::int64_t t) {
  if (trajs.empty()) throw InvalidArgument("team_features needs >= 1 trajectory");
  for (const auto& tr : trajs) {
    if (!tr.has_time(t) || !tr.has_time(t - 1))
      throw InvalidArgument("team_features: agent " + std::to_string(tr.agent_id) + " lacks samples at t=" +
                            std::to_string(t) + " and t-1");
  }
  const int n = static_cast<int>(trajs.size());
  double cx = 0, cy = 0, px = 0, py = 0;
  for (const auto& tr : trajs) {
    const auto& s1 = tr.at_time(t);
    const auto& s0 = tr.at_time(t - 1);
    cx += s1.x;
    cy += s1.y;
    px += s0.x;
    py += s0.y;
  }
  cx /= n, cy /= n, px /= n, py /= n;
  const double dx = cx - px, dy = cy - py;
  const double speed = std::hypot(dx, dy);
  double ux = 1.0, uy = 0.0;  // heading; x-axis fallback when the team is still
  if (speed > 1e-12) ux = dx / speed, uy = dy / speed;

  double heading_change = 0.0;
  for (const auto& tr : trajs) {
    const auto& s1 = tr.at_time(t);
    const auto& s0 = tr.at_time(t - 1);
    const double ax = s1.x - s0.x, ay = s1.y - s0.y;
    const double norm = std::hypot(ax, ay);
    if (norm <= 1e-12) continue;  // stationary agent deviates by definitionally nothing
    heading_change += std::abs(std::atan2(ax * uy - ay * ux, ax * ux + ay * uy));
  }
  heading_change /= n;

  std::vector<std::array<double, 2>> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (const auto& tr : trajs) {
    const auto& s1 = tr.at_time(t);
    pts.push_back({s1.x, s1.y});
  }
  const double cohesion = mean_pairwise_distance(pts);

  double va = 0.0, vl = 0.0;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : pts) {
    const double rx = p[0] - cx, ry = p[1] - cy;
    const double a = rx * ux + ry * uy;
    const double l = -rx * uy + ry * ux;
    va += a * a;
    vl += l * l;
    sxx += rx * rx;
    sxy += rx * ry;
    syy += ry * ry;
  }
  const double spread_along = std::sqrt(va / n);
  const double spread_lateral = std::sqrt(vl / n);
  sxx /= n, sxy /= n, syy /= n;
  const double tr_half = (sxx + syy) / 2.0;
  const double disc = std::sqrt(std::max(0.0, (sxx - syy) * (sxx - syy) / 4.0 + sxy * sxy));
  const double min_eig = std::max(0.0, tr_half - disc);
  const double formation_error = std::sqrt(min_eig);

  FeatureVector f;
  f.schema = team_feature_schema();
  f.values = {speed, heading_change, cohesion, spread_along, spread_lateral, formation_error};
  return f;
}

// Full scenario -> HMM alphabet: one joint symbol per frame from t=1 on.
inline ObservationSequence discretize_trajectories(const std::vector<AgentTrajectory>& trajs,
                                                   const DiscretizerSpec& spec, const std::string& source = "") {
  if (trajs.empty()) throw InvalidArgument("discretize_trajectories needs >= 1 trajectory");
  std::int64_t t0 = trajs[0].samples.front().t;
  std::int64_t t1 = trajs[0].samples.back().t;
  for (const auto& tr : trajs) {
    t0 = std::max(t0, tr.samples.front().t);
    t1 = std::min(t1, tr.samples.back().t);
  }
  if (t1 <= t0) throw InvalidArgument("trajectories share fewer than 2 common frames");
  ObservationSequence obs;
  obs.m = spec.alphabet_size();
  obs.source = source;
  obs.symbols.reserve(static_cast<std::size_t>(t1 - t0));
  for (std::int64_t t = t0 + 1; t <= t1; ++t)
    obs.symbols.push_back(encode_joint(discretize(team_features(trajs, t), spec), spec));
  obs.validate();
  return obs;
}

// ---------------------------------------------------------------------------
// Discretizer file: versioned text, one rule per line.
//   threshold <feature> cuts <n> <c...> symbols <n> <name...>
//   svm <feature> model <path>
// ---------------------------------------------------------------------------

inline std::string format_discretizer(const DiscretizerSpec& spec) {
  using detail::fmt_g17;
  std::string out = "discretizer v1\n";
  out += "features " + std::to_string(spec.rules.size()) + "\n";
  for (const auto& r : spec.rules) {
    if (r.kind == RuleKind::Threshold) {
      out += "threshold " + r.feature + " cuts " + std::to_string(r.cuts.size());
      for (double c : r.cuts) out += " " + fmt_g17(c);
      out += " symbols " + std::to_string(r.symbols.size());
      for (const auto& s : r.symbols) out += " " + s;
      out += "\n";
    } else {
      out += "svm " + r.feature + " model " + r.svm_path + "\n";
    }
  }
  return out;
}

inline DiscretizerSpec parse_discretizer(const std::string& text, const std::string& source,
                                         const std::filesystem::path& base_dir) {
  using detail::expect_token;
  using detail::read_value;
  std::istringstream in(text);
  expect_token(in, "discretizer", source);
  expect_token(in, "v1", source);
  expect_token(in, "features", source);
  const int n = read_value<int>(in, "feature count", source);
  if (n < 1) throw IoError("discretizer needs >= 1 feature in " + source);
  DiscretizerSpec spec;
  for (int i = 0; i < n; ++i) {
    const auto kind = read_value<std::string>(in, "rule kind", source);
    FeatureRule rule;
    rule.feature = read_value<std::string>(in, "feature name", source);
    if (kind == "threshold") {
      rule.kind = RuleKind::Threshold;
      expect_token(in, "cuts", source);
      const int nc = read_value<int>(in, "cut count", source);
      rule.cuts.resize(static_cast<std::size_t>(nc));
      for (auto& c : rule.cuts) c = read_value<double>(in, "cut point", source);
      expect_token(in, "symbols", source);
      const int ns = read_value<int>(in, "symbol count", source);
      rule.symbols.resize(static_cast<std::size_t>(ns));
      for (auto& s : rule.symbols) s = read_value<std::string>(in, "symbol name", source);
    } else if (kind == "svm") {
      rule.kind = RuleKind::Svm;
      expect_token(in, "model", source);
      rule.svm_path = read_value<std::string>(in, "model path", source);
      rule.svm = load_svm(base_dir / rule.svm_path);
    } else {
      throw IoError("unknown rule kind '" + kind + "' in " + source);
    }
    spec.rules.push_back(std::move(rule));
  }
  spec.validate();
  return spec;
}

inline void save_discretizer(const DiscretizerSpec& spec, const std::filesystem::path& path) {
  detail::spit(path, format_discretizer(spec));
}

inline DiscretizerSpec load_discretizer(const std::filesystem::path& path) {
  return parse_discretizer(detail::slurp(path), path.string(), path.parent_path());
}

}  // namespace teamrec
