#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "teamrec/config.hpp"
#include "teamrec/discretize.hpp"
#include "teamrec/evaluation.hpp"
#include "teamrec/hmm.hpp"
#include "teamrec/id3.hpp"
#include "teamrec/motion.hpp"
#include "teamrec/pipeline.hpp"
#include "teamrec/segmentation.hpp"
#include "teamrec/synth.hpp"
#include "teamrec/tracking.hpp"
#include "teamrec/trajectory.hpp"

namespace teamrec {

// ---------------------------------------------------------------------------
// Default discretizer: cut points picked against the synthetic generator so
// that each action occupies a distinct region of the joint alphabet. All six
// team features participate; the joint alphabet is the radix product.
// ---------------------------------------------------------------------------

inline DiscretizerSpec default_team_discretizer() {
  auto rule = [](const std::string& name, std::vector<double> cuts, std::vector<std::string> symbols) {
    FeatureRule r;
    r.kind = RuleKind::Threshold;
    r.feature = name;
    r.cuts = std::move(cuts);
    r.symbols = std::move(symbols);
    return r;
  };
  DiscretizerSpec spec;
  spec.rules.push_back(rule("speed", {0.75}, {"slow", "fast"}));
  spec.rules.push_back(rule("heading_change", {0.6}, {"straight", "turning"}));
  spec.rules.push_back(rule("cohesion", {3.0, 12.0}, {"merged", "grouped", "separated"}));
  spec.rules.push_back(rule("spread_along", {0.5, 2.5}, {"low", "mid", "high"}));
  spec.rules.push_back(rule("spread_lateral", {0.5, 2.5}, {"low", "mid", "high"}));
  spec.rules.push_back(rule("formation_error", {1.2}, {"low", "high"}));
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Per-agent role features: rank along the estimated heading plus which side
// of the axis the agent sits on. Both already discrete, so the role model
// consumes them directly.
// ---------------------------------------------------------------------------

inline std::vector<int> role_feature_radices(int n_agents) { return {n_agents, 3}; }

struct RoleFrames {
  std::vector<std::int64_t> times;                  // frame time per row
  std::vector<std::vector<std::vector<int>>> features;  // [frame][agent] -> {rank, side}
};

inline RoleFrames role_feature_frames(const std::vector<AgentTrajectory>& trajs) {
  if (trajs.empty()) throw InvalidArgument("role features need >= 1 trajectory");
  std::int64_t t0 = trajs[0].samples.front().t;
  std::int64_t t1 = trajs[0].samples.back().t;
  for (const auto& tr : trajs) {
    t0 = std::max(t0, tr.samples.front().t);
    t1 = std::min(t1, tr.samples.back().t);
  }
  if (t1 <= t0) throw InvalidArgument("trajectories share fewer than 2 common frames");

  const std::size_t n = trajs.size();

  // Formation axis: the whole-scenario centroid displacement. A per-frame
  // velocity estimate wobbles under position noise; the displacement over the
  // full clip is orders of magnitude larger than the noise.
  double fx = 0, fy = 0, lx = 0, ly = 0;
  for (const auto& tr : trajs) {
    const auto& sf = tr.at_time(t0);
    const auto& sl = tr.at_time(t1);
    fx += sf.x, fy += sf.y;
    lx += sl.x, ly += sl.y;
  }
  double ux = (lx - fx) / static_cast<double>(n), uy = (ly - fy) / static_cast<double>(n);
  const double norm = std::hypot(ux, uy);
  if (norm > 1e-12) {
    ux /= norm, uy /= norm;
  } else {
    ux = 1.0, uy = 0.0;
  }

  RoleFrames out;
  for (std::int64_t t = t0 + 1; t <= t1; ++t) {
    double cx = 0, cy = 0;
    for (const auto& tr : trajs) {
      const auto& s1 = tr.at_time(t);
      cx += s1.x, cy += s1.y;
    }
    cx /= static_cast<double>(n), cy /= static_cast<double>(n);

    std::vector<std::pair<double, std::size_t>> along(n);
    std::vector<double> side(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = trajs[i].at_time(t);
      const double rx = s.x - cx, ry = s.y - cy;
      along[i] = {rx * ux + ry * uy, i};
      side[i] = -rx * uy + ry * ux;
    }
    std::sort(along.begin(), along.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;  // front-most first
      return a.second < b.second;
    });
    std::vector<std::vector<int>> frame(n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t agent = along[r].second;
      int s3 = 1;
      if (side[agent] < -0.75) s3 = 0;
      else if (side[agent] >= 0.75) s3 = 2;
      frame[agent] = {static_cast<int>(r), s3};
    }
    out.times.push_back(t);
    out.features.push_back(std::move(frame));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset tree: <root>/{train,test}/<action>_<idx>/{trajectories.txt,
// scenario.label, roles.txt}. Byte-for-byte reproducible for a fixed config.
// ---------------------------------------------------------------------------

inline std::vector<Action> configured_actions(int n_actions) {
  if (n_actions < 1 || n_actions > static_cast<int>(kAllActions.size()))
    throw ConfigError("hmm.n_actions must be in [1," + std::to_string(kAllActions.size()) + "]");
  return {kAllActions.begin(), kAllActions.begin() + n_actions};
}

struct ScenarioRecord {
  std::string name;  // e.g. "wedge_004"
  Scenario scenario;
  bool has_label = true;  // false when loaded from a dataset without scenario.label
};

namespace detail {

inline std::string scenario_dir_name(Action a, int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "_%03d", index);
  return action_name(a) + buf;
}

}  // namespace detail

inline std::vector<ScenarioRecord> generate_split(const FrameworkConfig& cfg, const std::string& split,
                                                  int per_action) {
  std::vector<ScenarioRecord> out;
  for (const Action a : configured_actions(cfg.n_actions)) {
    for (int k = 0; k < per_action; ++k) {
      const std::string name = detail::scenario_dir_name(a, k);
      ScenarioSpec spec;
      spec.action = a;
      spec.agents = cfg.generate.agents;
      spec.length = cfg.generate.length;
      spec.noise_sigma = cfg.generate.noise_sigma;
      spec.seed = mix_seed(cfg.seed, stable_hash(split + "/" + name));
      out.push_back({name, synth_team_scenario(spec)});
    }
  }
  return out;
}

inline void save_scenario(const Scenario& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_trajectories(s.trajectories, dir / "trajectories.txt");
  save_label(s.label, dir / "scenario.label");
  save_roles(s.roles, dir / "roles.txt");
}

inline void generate_dataset(const FrameworkConfig& cfg, const std::filesystem::path& root) {
  for (const auto& [split, per_action] :
       {std::pair<std::string, int>{"train", cfg.generate.train_per_action},
        std::pair<std::string, int>{"test", cfg.generate.test_per_action}}) {
    for (const auto& rec : generate_split(cfg, split, per_action)) save_scenario(rec.scenario, root / split / rec.name);
  }
}

inline ScenarioRecord load_scenario(const std::filesystem::path& dir, bool need_truth) {
  ScenarioRecord rec;
  rec.name = dir.filename().string();
  const auto traj = dir / "trajectories.txt";
  if (!std::filesystem::exists(traj)) throw IoError("missing dataset file: " + traj.string());
  rec.scenario.trajectories = load_trajectories(traj);
  if (std::filesystem::exists(dir / "scenario.label")) {
    rec.scenario.label = load_label(dir / "scenario.label");
  } else if (need_truth) {
    throw IoError("missing dataset file: " + (dir / "scenario.label").string());
  } else {
    rec.has_label = false;
  }
  if (std::filesystem::exists(dir / "roles.txt")) rec.scenario.roles = load_roles(dir / "roles.txt");
  return rec;
}

// Scenario subdirectories in sorted name order (directory iteration order is
// platform-defined, and reproducibility is a contract here).
inline std::vector<ScenarioRecord> load_dataset_split(const std::filesystem::path& split_dir, bool need_truth) {
  if (!std::filesystem::is_directory(split_dir)) throw IoError("missing dataset directory: " + split_dir.string());
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(split_dir))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw IoError("dataset directory has no scenarios: " + split_dir.string());
  std::vector<ScenarioRecord> out;
  out.reserve(dirs.size());
  for (const auto& d : dirs) out.push_back(load_scenario(d, need_truth));
  return out;
}

// ---------------------------------------------------------------------------
// Training: one HMM per action over discretized team features, plus the ID3
// role model over per-agent rank/side features.
// ---------------------------------------------------------------------------

struct TrainedModels {
  DiscretizerSpec discretizer;
  ActionBank bank;
  Id3Model roles;
};

struct TrainReport {
  TrainedModels models;
  std::string log;
};

inline TrainReport train_models(const FrameworkConfig& cfg, const std::vector<ScenarioRecord>& records,
                                const Backend& backend = Backend::sequential()) {
  if (records.empty()) throw InvalidArgument("training needs >= 1 scenario");
  TrainReport rep;
  rep.models.discretizer = default_team_discretizer();
  const DiscretizerSpec& disc = rep.models.discretizer;

  std::map<std::string, std::vector<std::vector<int>>> by_action;
  for (const auto& rec : records)
    by_action[action_name(rec.scenario.label)].push_back(discretize_trajectories(rec.scenario.trajectories, disc, rec.name).symbols);

  std::ostringstream log;
  HmmConfig hc = cfg.hmm;
  hc.m_symbols = disc.alphabet_size();
  for (const auto& [action, seqs] : by_action) {
    hc.seed = mix_seed(cfg.seed, stable_hash("hmm/" + action));
    const HmmModel init = init_random_hmm(hc, action);
    const BaumWelchResult bw = baum_welch(init, seqs, hc, backend);
    rep.models.bank.models.push_back(bw.model);
    char line[256];
    std::snprintf(line, sizeof(line), "hmm %s sequences %zu iterations %d ll %.6f -> %.6f\n", action.c_str(),
                  seqs.size(), bw.iterations, bw.ll_trace.front(), bw.ll_trace.back());
    log << line;
  }
  rep.models.bank.validate();

  // Role model: every (frame, agent) of every training scenario is one example.
  std::vector<std::vector<int>> xs;
  std::vector<int> ys;
  const int n_agents = cfg.generate.agents;
  for (const auto& rec : records) {
    if (static_cast<int>(rec.scenario.trajectories.size()) != n_agents)
      throw InvalidArgument("scenario '" + rec.name + "' has " + std::to_string(rec.scenario.trajectories.size()) +
                            " agents; config says " + std::to_string(n_agents));
    if (rec.scenario.roles.empty()) throw InvalidArgument("scenario '" + rec.name + "' lacks role ground truth");
    const RoleFrames rf = role_feature_frames(rec.scenario.trajectories);
    for (std::size_t f = 0; f < rf.times.size(); ++f) {
      const auto t = static_cast<std::size_t>(rf.times[f]);
      if (t >= rec.scenario.roles.size()) continue;
      for (std::size_t a = 0; a < rf.features[f].size(); ++a) {
        xs.push_back(rf.features[f][a]);
        ys.push_back(rec.scenario.roles[t][a]);
      }
    }
  }
  Id3Config ic = cfg.id3;
  ic.n_classes = static_cast<int>(role_names().size());
  ic.seed = mix_seed(cfg.seed, stable_hash("roles"));
  rep.models.roles = id3_train(xs, ys, role_feature_radices(n_agents), ic, backend);

  int correct = 0;
  const auto pred = classify_batch(rep.models.roles, xs, backend);
  for (std::size_t i = 0; i < ys.size(); ++i) correct += pred[i] == ys[i] ? 1 : 0;
  char line[128];
  std::snprintf(line, sizeof(line), "roles examples %zu training_accuracy %.4f\n", ys.size(),
                static_cast<double>(correct) / static_cast<double>(ys.size()));
  log << line;
  rep.log = log.str();
  return rep;
}

inline void save_models(const TrainedModels& m, const std::filesystem::path& model_dir) {
  std::filesystem::create_directories(model_dir / "bank");
  save_discretizer(m.discretizer, model_dir / "discretizer.spec");
  save_id3(m.roles, model_dir / "roles.id3");
  save_bank(m.bank, model_dir / "bank");
}

inline TrainedModels load_models(const std::filesystem::path& model_dir) {
  TrainedModels m;
  const auto disc = model_dir / "discretizer.spec";
  if (!std::filesystem::exists(disc)) throw IoError("missing model file: " + disc.string());
  m.discretizer = load_discretizer(disc);
  const auto roles = model_dir / "roles.id3";
  if (!std::filesystem::exists(roles)) throw IoError("missing model file: " + roles.string());
  m.roles = load_id3(roles);
  const auto bank = model_dir / "bank";
  if (!std::filesystem::is_directory(bank)) throw IoError("missing model directory: " + bank.string());
  m.bank = load_bank(bank);
  return m;
}

// ---------------------------------------------------------------------------
// Recognition over a scenario set: predicted action per scenario, roles per
// frame, confusion matrix when ground truth is present.
// ---------------------------------------------------------------------------

struct RecognitionRow {
  std::string name;
  std::string predicted;
  std::string actual;  // empty without ground truth
};

struct RecognizeReport {
  std::vector<RecognitionRow> rows;
  std::vector<std::vector<std::vector<int>>> roles;  // per scenario: [frame][agent]
  std::optional<ConfusionMatrix> confusion;
};

inline std::vector<std::string> bank_labels(const ActionBank& bank) {
  std::vector<std::string> out;
  for (const auto& m : bank.models) out.push_back(m.action_name);
  return out;
}

inline RecognizeReport recognize_records(const TrainedModels& models, const std::vector<ScenarioRecord>& records,
                                         const Backend& backend = Backend::sequential(), bool with_truth = true) {
  RecognizeReport rep;
  bool all_truth = with_truth;
  for (const auto& rec : records) {
    const ObservationSequence obs = discretize_trajectories(rec.scenario.trajectories, models.discretizer, rec.name);
    const Recognition r = recognize(models.bank, obs, backend);
    RecognitionRow row{rec.name, r.action, ""};
    if (with_truth && rec.has_label) row.actual = action_name(rec.scenario.label);
    if (row.actual.empty()) all_truth = false;
    rep.rows.push_back(std::move(row));
    rep.roles.push_back(assign_roles(role_feature_frames(rec.scenario.trajectories).features, models.roles, backend));
  }
  if (all_truth && !rep.rows.empty()) {
    ConfusionMatrix cm(bank_labels(models.bank));
    for (const auto& row : rep.rows) cm.add(row.predicted, row.actual);
    rep.confusion = std::move(cm);
  }
  return rep;
}

inline std::string format_predictions(const std::vector<RecognitionRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.name + " " + r.predicted;
    if (!r.actual.empty()) out += " " + r.actual;
    out += "\n";
  }
  return out;
}

inline std::vector<RecognitionRow> parse_predictions(const std::string& text, const std::string& source = "<memory>") {
  std::vector<RecognitionRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    RecognitionRow r;
    if (!(ls >> r.name >> r.predicted)) throw IoError("bad prediction line at " + source + ":" + std::to_string(lineno));
    ls >> r.actual;  // optional
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Vision pipeline: frames -> motion mask -> blobs -> tracks, assembled from
// the enabled stages. Used by the bench workload and the transparency check.
// ---------------------------------------------------------------------------

struct VisionItem {
  Frame frame;                       // original (possibly color) frame
  std::optional<BinaryMask> mask;    // absent until the background window fills
  std::optional<Labeling> labeling;  // absent when mask is absent
};

struct VisionOutputs {
  std::vector<VisionItem> items;
  std::vector<TrackLogEntry> track_log;
  StageTiming timing;
};

inline VisionOutputs run_vision(const FrameworkConfig& cfg, const std::vector<Frame>& frames, const Backend& backend,
                                PipelineMode mode) {
  auto detector = std::make_shared<MotionDetector>(cfg.motion, frames.empty() ? 1 : frames[0].width,
                                                   frames.empty() ? 1 : frames[0].height);
  auto tracker = std::make_shared<Tracker>(cfg.tracker);

  std::vector<StageSpec> stages;
  stages.push_back(make_stage<Frame, VisionItem>(
      "motion",
      [detector](Frame f) {
        VisionItem item;
        item.mask = detector->push(f.channels == 1 ? f : grayscale(f));
        item.frame = std::move(f);
        return item;
      },
      Backend::sequential(), cfg.queue_capacity));
  stages.push_back(make_stage<VisionItem, VisionItem>(
      "segmentation",
      [cfg, backend](VisionItem item) {
        if (item.mask) item.labeling = label_blocked(*item.mask, cfg.segmentation, backend);
        return item;
      },
      backend, cfg.queue_capacity));
  stages.push_back(make_stage<VisionItem, VisionItem>(
      "tracking",
      [tracker, backend](VisionItem item) {
        if (item.labeling) tracker->process(item.frame, item.labeling->blobs, backend);
        return item;
      },
      backend, cfg.queue_capacity));

  const Pipeline p = Pipeline::assemble(std::move(stages));
  auto [items, timing] = run_pipeline<Frame, VisionItem>(p, frames, mode);
  VisionOutputs out;
  out.items = std::move(items);
  out.track_log = tracker->log();
  out.timing = std::move(timing);
  return out;
}

// Canonical byte string of everything the vision pipeline produced; two runs
// agree iff their digests are equal.
inline std::string vision_digest(const VisionOutputs& v) {
  std::string out;
  for (std::size_t i = 0; i < v.items.size(); ++i) {
    const auto& item = v.items[i];
    out += "frame " + std::to_string(i) + "\n";
    if (item.mask) {
      out += "mask ";
      for (std::uint8_t b : item.mask->bits) out += b ? '1' : '0';
      out += "\n";
    }
    if (item.labeling) {
      out += "labels";
      for (int l : item.labeling->labels) out += " " + std::to_string(l);
      out += "\n";
    }
  }
  out += format_track_log(v.track_log);
  return out;
}

// ---------------------------------------------------------------------------
// Recognition pipeline over scenario batches: discretize then score, with the
// per-stage backend applied across the scenarios of each batch.
// ---------------------------------------------------------------------------

struct RecoBatchItem {
  std::vector<ScenarioRecord> records;
  std::vector<ObservationSequence> obs;
  std::vector<std::string> predicted;
};

struct RecoRunOutputs {
  std::vector<std::string> predicted;  // scenario order
  StageTiming timing;
  double wall_s = 0.0;
};

inline RecoRunOutputs run_recognition(const TrainedModels& models, const std::vector<ScenarioRecord>& records,
                                      const Backend& backend, PipelineMode mode, std::size_t batch_size = 16,
                                      std::size_t queue_capacity = 4) {
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  std::vector<RecoBatchItem> batches;
  for (std::size_t i = 0; i < records.size(); i += batch_size) {
    RecoBatchItem b;
    b.records.assign(records.begin() + static_cast<std::ptrdiff_t>(i),
                     records.begin() + static_cast<std::ptrdiff_t>(std::min(records.size(), i + batch_size)));
    batches.push_back(std::move(b));
  }

  std::vector<StageSpec> stages;
  stages.push_back(make_stage<RecoBatchItem, RecoBatchItem>(
      "discretize",
      [&models, backend](RecoBatchItem b) {
        b.obs = parallel_map(
            b.records,
            [&](const ScenarioRecord& r) { return discretize_trajectories(r.scenario.trajectories, models.discretizer, r.name); },
            backend, 1);
        return b;
      },
      backend, queue_capacity));
  stages.push_back(make_stage<RecoBatchItem, RecoBatchItem>(
      "recognize",
      [&models, backend](RecoBatchItem b) {
        b.predicted = parallel_map(
            b.obs, [&](const ObservationSequence& o) { return recognize(models.bank, o).action; }, backend, 1);
        return b;
      },
      backend, queue_capacity));

  const Pipeline p = Pipeline::assemble(std::move(stages));
  const auto t0 = std::chrono::steady_clock::now();
  auto [items, timing] = run_pipeline<RecoBatchItem, RecoBatchItem>(p, batches, mode);
  const auto t1 = std::chrono::steady_clock::now();

  RecoRunOutputs out;
  out.timing = std::move(timing);
  out.wall_s = std::chrono::duration<double>(t1 - t0).count();
  for (const auto& b : items)
    for (const auto& pr : b.predicted) out.predicted.push_back(pr);
  return out;
}

// ---------------------------------------------------------------------------
// Bench: a self-contained workload measuring (a) pipelined+parallel vs
// sequential equality on the vision pipeline and (b) wall-clock speedup on
// the recognition workload.
// ---------------------------------------------------------------------------

struct BenchReport {
  bool vision_identical = false;
  bool predictions_identical = false;
  StageTiming vision_seq, vision_par;
  StageTiming reco_seq, reco_par;
  double t_sequential_s = 0.0;
  double t_parallel_s = 0.0;
  double speedup = 0.0;
  std::string text;
};

namespace detail {

inline std::vector<ScenarioRecord> bench_scenarios(const FrameworkConfig& cfg, const std::string& tag, int per_action,
                                                   int length) {
  FrameworkConfig c = cfg;
  c.generate.length = length;
  c.generate.agents = std::max(4, cfg.generate.agents);
  return generate_split(c, "bench/" + tag, per_action);
}

}  // namespace detail

inline BenchReport bench_run(const FrameworkConfig& cfg, const Backend& backend) {
  BenchReport rep;

  // Vision transparency: moderate clip, colored shapes so quantized
  // histograms carry information.
  if (cfg.motion_enabled && cfg.segmentation_enabled && cfg.tracking_enabled) {
    ClipSpec clip;
    clip.width = 96;
    clip.height = 72;
    clip.channels = 3;
    const int n_frames = cfg.motion.window + 60;
    // Endpoint-derived velocities keep both shapes inside the frame for any
    // background-window length.
    const double span = n_frames - 1;
    clip.shapes.push_back({9, 9, {220, 60, 40}, 4.0, 8.0, (83.0 - 4.0) / span, (53.0 - 8.0) / span, 0.0});
    clip.shapes.push_back({8, 8, {40, 80, 230}, 84.0, 56.0, (6.0 - 84.0) / span, (10.0 - 56.0) / span, 0.0});
    const SynthClip sc = synth_frames(clip, n_frames, mix_seed(cfg.seed, stable_hash("bench/clip")));

    VisionOutputs seq = run_vision(cfg, sc.frames, Backend::sequential(), PipelineMode::Sequential);
    VisionOutputs par = run_vision(cfg, sc.frames, backend, PipelineMode::Pipelined);
    rep.vision_identical = vision_digest(seq) == vision_digest(par);
    rep.vision_seq = std::move(seq.timing);
    rep.vision_par = std::move(par.timing);
  } else {
    rep.vision_identical = true;  // nothing to compare when stages are disabled
  }

  // Recognition workload: train a small bank once (untimed), then time
  // sequential vs pipelined+parallel recognition over long scenarios.
  FrameworkConfig train_cfg = cfg;
  train_cfg.hmm.max_iters = std::min(cfg.hmm.max_iters, 10);
  const auto train_records = detail::bench_scenarios(train_cfg, "train", 6, 120);
  const TrainedModels models = train_models(train_cfg, train_records, backend).models;

  const auto work = detail::bench_scenarios(cfg, "work", 32, 800);
  RecoRunOutputs seq = run_recognition(models, work, Backend::sequential(), PipelineMode::Sequential);
  RecoRunOutputs par = run_recognition(models, work, backend, PipelineMode::Pipelined);
  rep.predictions_identical = seq.predicted == par.predicted;
  rep.reco_seq = std::move(seq.timing);
  rep.reco_par = std::move(par.timing);
  rep.t_sequential_s = seq.wall_s;
  rep.t_parallel_s = par.wall_s;
  rep.speedup = speedup_report(seq.wall_s, par.wall_s);

  std::ostringstream out;
  if (cfg.motion_enabled && cfg.segmentation_enabled && cfg.tracking_enabled) {
    out << "vision pipeline (sequential)\n" << format_timing_report(rep.vision_seq);
    out << "vision pipeline (pipelined, " << backend.to_string() << ")\n" << format_timing_report(rep.vision_par);
    out << "vision outputs identical: " << (rep.vision_identical ? "yes" : "no") << "\n";
  }
  out << "recognition pipeline (sequential)\n" << format_timing_report(rep.reco_seq);
  out << "recognition pipeline (pipelined, " << backend.to_string() << ")\n" << format_timing_report(rep.reco_par);
  out << "predictions identical: " << (rep.predictions_identical ? "yes" : "no") << "\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "t_sequential_s %.6f\nt_parallel_s %.6f\nspeedup %.2f\n", rep.t_sequential_s,
                rep.t_parallel_s, rep.speedup);
  out << buf;
  rep.text = out.str();
  return rep;
}

// ---------------------------------------------------------------------------
// Command bodies shared by the CLI and the test harness. All artifacts land
// under the configured paths; every command is deterministic per (config,
// seed) apart from wall-clock timings.
// ---------------------------------------------------------------------------

inline void cmd_generate(const FrameworkConfig& cfg) { generate_dataset(cfg, cfg.data_dir); }

inline TrainReport cmd_train(const FrameworkConfig& cfg, const Backend& backend) {
  const auto records = load_dataset_split(std::filesystem::path(cfg.data_dir) / "train", true);
  TrainReport rep = train_models(cfg, records, backend);
  save_models(rep.models, cfg.model_dir);
  detail::spit(std::filesystem::path(cfg.model_dir) / "training.log", rep.log);
  return rep;
}

inline RecognizeReport cmd_recognize(const FrameworkConfig& cfg, const Backend& backend,
                                     const std::filesystem::path& dataset_dir) {
  const TrainedModels models = load_models(cfg.model_dir);
  const auto records = load_dataset_split(dataset_dir, false);
  RecognizeReport rep = recognize_records(models, records, backend, true);

  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out / "roles");
  detail::spit(out / "predictions.txt", format_predictions(rep.rows));
  for (std::size_t i = 0; i < rep.rows.size(); ++i)
    save_roles(rep.roles[i], out / "roles" / (rep.rows[i].name + ".txt"));
  if (rep.confusion) save_confusion(*rep.confusion, out / "confusion.txt", out / "confusion.csv");
  return rep;
}

inline BenchReport cmd_bench(const FrameworkConfig& cfg, const Backend& backend) {
  BenchReport rep = bench_run(cfg, backend);
  std::filesystem::create_directories(cfg.out_dir);
  detail::spit(std::filesystem::path(cfg.out_dir) / "bench.txt", rep.text);
  return rep;
}

inline ConfusionMatrix cmd_eval(const FrameworkConfig& cfg, const std::filesystem::path& predictions_path) {
  if (!std::filesystem::exists(predictions_path)) throw IoError("missing predictions file: " + predictions_path.string());
  const auto rows = parse_predictions(detail::slurp(predictions_path), predictions_path.string());
  std::vector<std::string> labels;
  for (const Action a : configured_actions(cfg.n_actions)) labels.push_back(action_name(a));
  ConfusionMatrix cm(labels);
  for (const auto& r : rows) {
    if (r.actual.empty()) throw InvalidArgument("prediction row '" + r.name + "' lacks a ground-truth label");
    cm.add(r.predicted, r.actual);
  }
  std::filesystem::create_directories(cfg.out_dir);
  save_confusion(cm, std::filesystem::path(cfg.out_dir) / "confusion.txt",
                 std::filesystem::path(cfg.out_dir) / "confusion.csv");
  return cm;
}

}  // namespace teamrec
