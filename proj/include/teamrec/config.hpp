#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#include "teamrec/error.hpp"
#include "teamrec/hmm.hpp"
#include "teamrec/id3.hpp"
#include "teamrec/motion.hpp"
#include "teamrec/parallel.hpp"
#include "teamrec/segmentation.hpp"
#include "teamrec/svm.hpp"
#include "teamrec/textio.hpp"
#include "teamrec/tracking.hpp"

namespace teamrec {

// Dataset-generation knobs for the synthetic scenario corpus.
struct GenerateConfig {
  int agents = 4;
  int length = 60;
  double noise_sigma = 0.3;  // the calibrated "moderate" level
  int train_per_action = 30;
  int test_per_action = 15;

  void validate() const {
    if (agents < 2) throw ConfigError("generate.agents must be >= 2");
    if (length < 10) throw ConfigError("generate.length must be >= 10");
    if (noise_sigma < 0.0) throw ConfigError("generate.noise_sigma must be >= 0");
    if (train_per_action < 1 || test_per_action < 1)
      throw ConfigError("generate: per-action scenario counts must be >= 1");
  }
};

struct FrameworkConfig {
  bool motion_enabled = true;
  bool segmentation_enabled = true;
  bool tracking_enabled = true;
  bool svm_enabled = false;  // posture classifier slot; off in the trajectory path

  MotionConfig motion;            // window (91), bins, method, threshold
  SegmentationConfig segmentation;
  SvmConfig svm;
  TrackerConfig tracker;
  Id3Config id3;
  HmmConfig hmm;
  int hmm_feature_len = 6;  // discretizer width feeding the HMM
  int n_actions = 7;

  GenerateConfig generate;

  Backend backend = Backend::sequential();
  bool pipelined = false;
  std::size_t queue_capacity = 4;

  std::string data_dir = "data";
  std::string model_dir = "models";
  std::string out_dir = "out";

  std::uint64_t seed = 0;

  void validate() const {
    if (motion.window < 2) throw ConfigError("motion.window_w must be >= 2");
    motion.validate();
    segmentation.validate();
    svm.validate();
    tracker.validate();
    id3.validate();
    hmm.validate();
    generate.validate();
    if (hmm_feature_len < 1) throw ConfigError("hmm.feature_len must be >= 1");
    if (n_actions < 1) throw ConfigError("hmm.n_actions must be >= 1");
    if (queue_capacity < 1) throw ConfigError("backend.queue_capacity must be >= 1");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

struct ConfigValue {
  std::string raw;
  std::string at;  // "source:line" for error messages

  int as_int() const {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError("expected integer at " + at + " (got '" + raw + "')");
    }
  }
  double as_double() const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError("expected number at " + at + " (got '" + raw + "')");
    }
  }
  bool as_bool() const {
    if (raw == "true" || raw == "1" || raw == "on") return true;
    if (raw == "false" || raw == "0" || raw == "off") return false;
    throw ConfigError("expected boolean at " + at + " (got '" + raw + "')");
  }
  std::uint64_t as_u64() const {
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument("");
      return static_cast<std::uint64_t>(v);
    } catch (...) {
      throw ConfigError("expected unsigned integer at " + at + " (got '" + raw + "')");
    }
  }
};

}  // namespace detail

// Flat `section.key = value` text, '#' comments, strict: an unknown key is an
// error, so a typo cannot silently fall back to a default.
inline FrameworkConfig parse_config_text(const std::string& text, const std::string& source = "<memory>") {
  FrameworkConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, detail::ConfigValue> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string at = source + ":" + std::to_string(lineno);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value at " + at);
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("expected key = value at " + at);
    if (seen.count(key)) throw ConfigError("duplicate key '" + key + "' at " + at);
    seen[key] = {value, at};
  }

  auto take = [&](const std::string& key) -> const detail::ConfigValue* {
    const auto it = seen.find(key);
    if (it == seen.end()) return nullptr;
    return &it->second;
  };
  std::map<std::string, bool> handled;
  auto with = [&](const std::string& key, auto apply) {
    handled[key] = true;
    if (const auto* v = take(key)) apply(*v);
  };

  with("motion.enabled", [&](const auto& v) { cfg.motion_enabled = v.as_bool(); });
  with("motion.window_w", [&](const auto& v) { cfg.motion.window = v.as_int(); });
  with("motion.histogram_bins", [&](const auto& v) { cfg.motion.bins = v.as_int(); });
  with("motion.method", [&](const auto& v) { cfg.motion.method = parse_background_method(v.raw); });
  with("motion.threshold", [&](const auto& v) { cfg.motion.threshold = v.as_int(); });
  with("motion.warp", [&](const auto& v) { cfg.motion.warp = parse_warp_mode(v.raw); });

  with("segmentation.enabled", [&](const auto& v) { cfg.segmentation_enabled = v.as_bool(); });
  with("segmentation.n_blocks", [&](const auto& v) { cfg.segmentation.n_blocks = v.as_int(); });
  with("segmentation.connectivity", [&](const auto& v) { cfg.segmentation.connectivity = parse_connectivity(v.raw); });
  with("segmentation.min_area", [&](const auto& v) { cfg.segmentation.min_area = v.as_int(); });

  with("svm.enabled", [&](const auto& v) { cfg.svm_enabled = v.as_bool(); });
  with("svm.feature_len", [&](const auto& v) { cfg.svm.feature_len = v.as_int(); });
  with("svm.n_classes", [&](const auto& v) { cfg.svm.n_classes = v.as_int(); });
  with("svm.kernel", [&](const auto& v) {
    if (v.raw == "linear") cfg.svm.kernel = Kernel::Linear;
    else if (v.raw == "rbf") cfg.svm.kernel = Kernel::Rbf;
    else throw ConfigError("unknown kernel '" + v.raw + "' at " + v.at);
  });
  with("svm.gamma", [&](const auto& v) { cfg.svm.gamma = v.as_double(); });
  with("svm.c", [&](const auto& v) { cfg.svm.c = v.as_double(); });
  with("svm.tol", [&](const auto& v) { cfg.svm.tol = v.as_double(); });
  with("svm.max_passes", [&](const auto& v) { cfg.svm.max_passes = v.as_int(); });

  with("tracker.enabled", [&](const auto& v) { cfg.tracking_enabled = v.as_bool(); });
  with("tracker.k_clusters", [&](const auto& v) { cfg.tracker.k_clusters = v.as_int(); });
  with("tracker.max_iters", [&](const auto& v) { cfg.tracker.max_iters = v.as_int(); });
  with("tracker.eps", [&](const auto& v) { cfg.tracker.eps = v.as_double(); });
  with("tracker.kmeans_iters", [&](const auto& v) { cfg.tracker.kmeans_iters = v.as_int(); });

  with("id3.mode", [&](const auto& v) { cfg.id3.mode = parse_id3_mode(v.raw); });
  with("id3.n_trees", [&](const auto& v) { cfg.id3.n_trees = v.as_int(); });
  with("id3.n_classes", [&](const auto& v) { cfg.id3.n_classes = v.as_int(); });
  with("id3.max_depth", [&](const auto& v) { cfg.id3.max_depth = v.as_int(); });
  with("id3.min_samples", [&](const auto& v) { cfg.id3.min_samples = v.as_int(); });
  with("id3.feature_bagging_fraction", [&](const auto& v) { cfg.id3.feature_bagging_fraction = v.as_double(); });
  with("id3.role_window", [&](const auto& v) { cfg.id3.role_window = v.as_int(); });

  with("hmm.n_states", [&](const auto& v) { cfg.hmm.n_states = v.as_int(); });
  with("hmm.feature_len", [&](const auto& v) { cfg.hmm_feature_len = v.as_int(); });
  with("hmm.block_size", [&](const auto& v) { cfg.hmm.block_size = v.as_int(); });
  with("hmm.n_actions", [&](const auto& v) { cfg.n_actions = v.as_int(); });
  with("hmm.max_iters", [&](const auto& v) { cfg.hmm.max_iters = v.as_int(); });
  with("hmm.ll_tol", [&](const auto& v) { cfg.hmm.ll_tol = v.as_double(); });
  with("hmm.floor", [&](const auto& v) { cfg.hmm.floor = v.as_double(); });

  with("generate.agents", [&](const auto& v) { cfg.generate.agents = v.as_int(); });
  with("generate.length", [&](const auto& v) { cfg.generate.length = v.as_int(); });
  with("generate.noise_sigma", [&](const auto& v) { cfg.generate.noise_sigma = v.as_double(); });
  with("generate.train_per_action", [&](const auto& v) { cfg.generate.train_per_action = v.as_int(); });
  with("generate.test_per_action", [&](const auto& v) { cfg.generate.test_per_action = v.as_int(); });

  with("backend.mode", [&](const auto& v) { cfg.backend = parse_backend(v.raw); });
  with("backend.pipelined", [&](const auto& v) { cfg.pipelined = v.as_bool(); });
  with("backend.queue_capacity", [&](const auto& v) { cfg.queue_capacity = static_cast<std::size_t>(v.as_int()); });

  with("paths.data_dir", [&](const auto& v) { cfg.data_dir = v.raw; });
  with("paths.model_dir", [&](const auto& v) { cfg.model_dir = v.raw; });
  with("paths.out_dir", [&](const auto& v) { cfg.out_dir = v.raw; });

  with("seed", [&](const auto& v) { cfg.seed = v.as_u64(); });

  for (const auto& [key, v] : seen)
    if (!handled.count(key)) throw ConfigError("unknown config key '" + key + "' at " + v.at);

  cfg.validate();
  return cfg;
}

inline FrameworkConfig parse_config(const std::filesystem::path& path) {
  return parse_config_text(detail::slurp(path), path.string());
}

}  // namespace teamrec
