#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "teamrec/error.hpp"
#include "teamrec/frame.hpp"
#include "teamrec/parallel.hpp"
#include "teamrec/quantize.hpp"
#include "teamrec/segmentation.hpp"
#include "teamrec/textio.hpp"

namespace teamrec {

struct TrackerConfig {
  int k_clusters = 16;
  int max_iters = 20;     // mean-shift iterations per frame
  double eps = 0.5;       // convergence shift in pixels
  int kmeans_iters = 20;  // Lloyd iterations
  std::uint64_t seed = 0;

  void validate() const {
    if (k_clusters < 2) throw ConfigError("tracker k_clusters must be >= 2");
    if (!(eps > 0.0)) throw ConfigError("tracker eps must be > 0");
    if (max_iters < 1) throw ConfigError("tracker max_iters must be >= 1");
    if (kmeans_iters < 1) throw ConfigError("tracker kmeans_iters must be >= 1");
  }
};

enum class TrackStatus { Active, Lost };

inline std::string track_status_name(TrackStatus s) { return s == TrackStatus::Active ? "active" : "lost"; }

struct Track {
  int track_id = 0;
  double cx = 0.0, cy = 0.0;
  int w = 3, h = 3;
  std::vector<double> target_hist;  // K bins, sums to 1
  ColorQuantizer quantizer;         // per-track color partition
  TrackStatus status = TrackStatus::Active;
  int lost_frames = 0;

  double window_diagonal() const { return std::sqrt(static_cast<double>(w) * w + static_cast<double>(h) * h); }
};

enum class HistKernel { Epanechnikov, Uniform };

namespace detail {

struct WindowRect {
  int x0, y0, x1, y1;  // half-open
  bool empty() const { return x0 >= x1 || y0 >= y1; }
};

inline WindowRect clip_window(const Frame& f, double cx, double cy, int w, int h) {
  const int x0 = static_cast<int>(std::lround(cx)) - w / 2;
  const int y0 = static_cast<int>(std::lround(cy)) - h / 2;
  WindowRect r{std::max(0, x0), std::max(0, y0), std::min(f.width, x0 + w), std::min(f.height, y0 + h)};
  return r;
}

inline std::array<double, 3> rgb_at(const Frame& f, int x, int y) {
  if (f.channels == 1) {
    const double v = f.data[static_cast<std::size_t>(y) * f.width + x];
    return {v, v, v};
  }
  const std::size_t p = (static_cast<std::size_t>(y) * f.width + x) * 3;
  return {static_cast<double>(f.data[p]), static_cast<double>(f.data[p + 1]), static_cast<double>(f.data[p + 2])};
}

// Kernel-weighted histogram over the clipped window. Returns nullopt when the
// window misses the frame or all spatial weights vanish.
inline std::optional<std::vector<double>> histogram_opt(const Frame& frame, double cx, double cy, int w, int h,
                                                        const ColorQuantizer& q, HistKernel kernel) {
  const WindowRect r = clip_window(frame, cx, cy, w, h);
  if (r.empty()) return std::nullopt;
  std::vector<double> hist(static_cast<std::size_t>(q.k()), 0.0);
  const double hx = w / 2.0, hy = h / 2.0;
  double total = 0.0;
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) {
      double wgt = 1.0;
      if (kernel == HistKernel::Epanechnikov) {
        const double ux = (x - cx) / hx, uy = (y - cy) / hy;
        wgt = std::max(0.0, 1.0 - (ux * ux + uy * uy));
      }
      if (wgt <= 0.0) continue;
      const auto rgb = rgb_at(frame, x, y);
      hist[static_cast<std::size_t>(q.assign(rgb[0], rgb[1], rgb[2]))] += wgt;
      total += wgt;
    }
  }
  if (total <= 0.0) return std::nullopt;
  for (double& v : hist) v /= total;
  return hist;
}

}  // namespace detail

inline std::vector<double> histogram(const Frame& frame, double cx, double cy, int w, int h, const ColorQuantizer& q,
                                     HistKernel kernel = HistKernel::Epanechnikov) {
  if (w < 3 || h < 3) throw InvalidArgument("histogram window must be >= 3x3");
  auto hist = detail::histogram_opt(frame, cx, cy, w, h, q, kernel);
  if (!hist) throw InvalidArgument("histogram window does not intersect the frame");
  return *hist;
}

inline double bhattacharyya(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw InvalidArgument("bhattacharyya: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::sqrt(p[i] * q[i]);
  return s;
}

// One frame of mean-shift for a single track: iterate the Bhattacharyya-
// weighted centroid until the shift drops below eps or max_iters is hit.
// Marks the track Lost when its model no longer overlaps what the window
// sees. Pure per-track arithmetic — safe to run tracks on parallel workers.
inline void meanshift_step(const Frame& frame, Track& track, const TrackerConfig& cfg) {
  if (track.status != TrackStatus::Active) return;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const auto p = detail::histogram_opt(frame, track.cx, track.cy, track.w, track.h, track.quantizer,
                                         HistKernel::Epanechnikov);
    if (!p || bhattacharyya(*p, track.target_hist) <= 0.0) {
      track.status = TrackStatus::Lost;
      return;
    }
    const detail::WindowRect r = detail::clip_window(frame, track.cx, track.cy, track.w, track.h);
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        const auto rgb = detail::rgb_at(frame, x, y);
        const auto b = static_cast<std::size_t>(track.quantizer.assign(rgb[0], rgb[1], rgb[2]));
        if ((*p)[b] <= 0.0) continue;
        const double wgt = std::sqrt(track.target_hist[b] / (*p)[b]);
        sw += wgt;
        sx += wgt * x;
        sy += wgt * y;
      }
    }
    if (sw <= 0.0) {
      track.status = TrackStatus::Lost;
      return;
    }
    const double nx = sx / sw, ny = sy / sw;
    const double shift = std::hypot(nx - track.cx, ny - track.cy);
    track.cx = nx;
    track.cy = ny;
    if (shift < cfg.eps) break;
  }
}

struct TrackLogEntry {
  int frame = 0;
  int track_id = 0;
  double x = 0.0, y = 0.0;
  int w = 0, h = 0;
  TrackStatus status = TrackStatus::Active;
};

// Multi-object tracker: advances every Active track by mean-shift (tracks are
// independent, so they fan out across workers), then a single-threaded
// post-pass spawns tracks for unmatched blobs and retires stale Lost tracks.
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const TrackerConfig& config() const { return cfg_; }
  const std::vector<Track>& tracks() const { return tracks_; }
  const std::vector<TrackLogEntry>& log() const { return log_; }
  int frames_processed() const { return frame_no_; }

  void process(const Frame& frame, const std::vector<Blob>& new_blobs, const Backend& backend = Backend::sequential()) {
    parallel_for(
        tracks_.size(), [&](std::size_t i) { meanshift_step(frame, tracks_[i], cfg_); }, backend, 1);

    // Spawn gating: a blob belongs to an existing track if its centroid lies
    // within 1.5x that track's window diagonal.
    for (const Blob& blob : new_blobs) {
      bool matched = false;
      for (const Track& t : tracks_) {
        const double d = std::hypot(blob.cx - t.cx, blob.cy - t.cy);
        if (d <= 1.5 * t.window_diagonal()) {
          matched = true;
          break;
        }
      }
      if (!matched) spawn_track(frame, blob);
    }

    for (Track& t : tracks_)
      if (t.status == TrackStatus::Lost) t.lost_frames += 1;
    tracks_.erase(std::remove_if(tracks_.begin(), tracks_.end(),
                                 [](const Track& t) { return t.status == TrackStatus::Lost && t.lost_frames >= 5; }),
                  tracks_.end());

    for (const Track& t : tracks_) log_.push_back({frame_no_, t.track_id, t.cx, t.cy, t.w, t.h, t.status});
    ++frame_no_;
  }

 private:
  void spawn_track(const Frame& frame, const Blob& blob) {
    Track t;
    t.track_id = next_id_++;
    t.cx = blob.cx;
    t.cy = blob.cy;
    t.w = std::max(3, blob.x_max - blob.x_min + 1);
    t.h = std::max(3, blob.y_max - blob.y_min + 1);
    // The quantizer trains on the window's pixels; grow the window until it
    // holds at least k of them.
    while (t.w * t.h < cfg_.k_clusters) {
      if (t.w <= t.h) ++t.w;
      else ++t.h;
    }
    const detail::WindowRect r = detail::clip_window(frame, t.cx, t.cy, t.w, t.h);
    if (r.empty()) return;  // blob centroid outside the frame: nothing to model
    std::vector<std::array<double, 3>> pixels;
    pixels.reserve(static_cast<std::size_t>((r.x1 - r.x0) * (r.y1 - r.y0)));
    for (int y = r.y0; y < r.y1; ++y)
      for (int x = r.x0; x < r.x1; ++x) pixels.push_back(detail::rgb_at(frame, x, y));
    if (pixels.size() < static_cast<std::size_t>(cfg_.k_clusters)) return;  // clipped too hard to model
    t.quantizer =
        quantize_colors(pixels, cfg_.k_clusters, cfg_.kmeans_iters, mix_seed(cfg_.seed, static_cast<std::uint64_t>(t.track_id)));
    const auto hist = detail::histogram_opt(frame, t.cx, t.cy, t.w, t.h, t.quantizer, HistKernel::Epanechnikov);
    if (!hist) return;
    t.target_hist = *hist;
    tracks_.push_back(std::move(t));
  }

  TrackerConfig cfg_;
  std::vector<Track> tracks_;
  std::vector<TrackLogEntry> log_;
  int next_id_ = 1;
  int frame_no_ = 0;
};

// ---------------------------------------------------------------------------
// Track log interchange: text lines `frame track_id x y w h status`.
// ---------------------------------------------------------------------------

inline std::string format_track_log(const std::vector<TrackLogEntry>& log) {
  std::string out = "# frame track_id x y w h status\n";
  for (const auto& e : log) {
    out += std::to_string(e.frame) + " " + std::to_string(e.track_id) + " " + detail::fmt_g17(e.x) + " " +
           detail::fmt_g17(e.y) + " " + std::to_string(e.w) + " " + std::to_string(e.h) + " " +
           track_status_name(e.status) + "\n";
  }
  return out;
}

inline std::vector<TrackLogEntry> parse_track_log(const std::string& text, const std::string& source = "<memory>") {
  std::vector<TrackLogEntry> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    TrackLogEntry e;
    std::string status;
    if (!(ls >> e.frame >> e.track_id >> e.x >> e.y >> e.w >> e.h >> status))
      throw IoError("bad track log record at " + source + ":" + std::to_string(lineno));
    if (status == "active") e.status = TrackStatus::Active;
    else if (status == "lost") e.status = TrackStatus::Lost;
    else throw IoError("unknown track status '" + status + "' at " + source + ":" + std::to_string(lineno));
    out.push_back(e);
  }
  return out;
}

inline void save_track_log(const std::vector<TrackLogEntry>& log, const std::filesystem::path& path) {
  detail::spit(path, format_track_log(log));
}

inline std::vector<TrackLogEntry> load_track_log(const std::filesystem::path& path) {
  return parse_track_log(detail::slurp(path), path.string());
}

}  // namespace teamrec
