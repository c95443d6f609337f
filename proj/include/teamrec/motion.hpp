#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "teamrec/error.hpp"
#include "teamrec/frame.hpp"

namespace teamrec {

enum class BackgroundMethod { Mean, Mode };

inline std::string background_method_name(BackgroundMethod m) {
  return m == BackgroundMethod::Mean ? "mean" : "mode";
}

inline BackgroundMethod parse_background_method(const std::string& s) {
  if (s == "mean") return BackgroundMethod::Mean;
  if (s == "mode") return BackgroundMethod::Mode;
  throw InvalidArgument("unknown background method '" + s + "' (expected mean|mode)");
}

// Identity: fixed camera. PerFrameHomography: each frame is registered into
// the reference plane (annotations supplied externally) before modeling.
enum class WarpMode { Identity, PerFrameHomography };

inline std::string warp_mode_name(WarpMode m) {
  return m == WarpMode::Identity ? "identity" : "homography";
}

inline WarpMode parse_warp_mode(const std::string& s) {
  if (s == "identity") return WarpMode::Identity;
  if (s == "homography") return WarpMode::PerFrameHomography;
  throw InvalidArgument("unknown warp mode '" + s + "' (expected identity|homography)");
}

struct MotionConfig {
  BackgroundMethod method = BackgroundMethod::Mean;
  int window = 91;
  int threshold = 25;
  int bins = 32;  // histogram resolution for the mode estimator
  WarpMode warp = WarpMode::Identity;

  void validate() const {
    if (window < 2) throw ConfigError("motion window_w must be >= 2");
    if (threshold <= 0 || threshold >= 255) throw ConfigError("motion threshold must be in (0,255)");
    if (bins < 2 || bins > 256) throw ConfigError("motion histogram_bins must be in [2,256]");
  }
};

// Plane-to-plane warp, stored as the forward source->output mapping; frames
// are resampled by inverse mapping, so the matrix must be invertible.
struct Homography {
  std::array<std::array<double, 3>, 3> h = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

  static Homography identity() { return Homography{}; }

  static Homography translation(double dx, double dy) {
    Homography t;
    t.h[0][2] = dx;
    t.h[1][2] = dy;
    return t;
  }

  void validate() const {
    for (const auto& row : h)
      for (double v : row)
        if (!std::isfinite(v)) throw InvalidArgument("homography has a non-finite entry");
    if (h[2][2] == 0.0) throw InvalidArgument("homography is not normalizable (h[2][2] = 0)");
  }
};

// Inverse-mapped bilinear resampling; samples off the source plane read 0.
inline Frame warp_frame(const Frame& f, const Homography& hom) {
  hom.validate();
  const auto& h = hom.h;
  const double det = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) -
                     h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0]) +
                     h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
  if (std::abs(det) < 1e-12) throw InvalidArgument("homography is not invertible");
  const double inv[3][3] = {
      {(h[1][1] * h[2][2] - h[1][2] * h[2][1]) / det, (h[0][2] * h[2][1] - h[0][1] * h[2][2]) / det,
       (h[0][1] * h[1][2] - h[0][2] * h[1][1]) / det},
      {(h[1][2] * h[2][0] - h[1][0] * h[2][2]) / det, (h[0][0] * h[2][2] - h[0][2] * h[2][0]) / det,
       (h[0][2] * h[1][0] - h[0][0] * h[1][2]) / det},
      {(h[1][0] * h[2][1] - h[1][1] * h[2][0]) / det, (h[0][1] * h[2][0] - h[0][0] * h[2][1]) / det,
       (h[0][0] * h[1][1] - h[0][1] * h[1][0]) / det}};

  Frame out = Frame::make(f.width, f.height, f.channels, 0, f.index);
  auto tap = [&](int x, int y, int c) -> double {
    if (x < 0 || y < 0 || x >= f.width || y >= f.height) return 0.0;
    return f.data[(static_cast<std::size_t>(y) * f.width + x) * f.channels + static_cast<std::size_t>(c)];
  };
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const double w = inv[2][0] * x + inv[2][1] * y + inv[2][2];
      if (std::abs(w) < 1e-12) continue;  // projects to infinity; stays 0
      const double sx = (inv[0][0] * x + inv[0][1] * y + inv[0][2]) / w;
      const double sy = (inv[1][0] * x + inv[1][1] * y + inv[1][2]) / w;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double dx = sx - x0, dy = sy - y0;
      for (int c = 0; c < f.channels; ++c) {
        const double v = (1 - dx) * (1 - dy) * tap(x0, y0, c) + dx * (1 - dy) * tap(x0 + 1, y0, c) +
                         (1 - dx) * dy * tap(x0, y0 + 1, c) + dx * dy * tap(x0 + 1, y0 + 1, c);
        out.data[(static_cast<std::size_t>(y) * f.width + x) * f.channels + static_cast<std::size_t>(c)] =
            static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
      }
    }
  }
  return out;
}

// Background estimate over one pixel's window of samples.
//
// Mean rounds half up. Mode buckets samples into equal-width bins, picks the
// most populated bin (ties toward the lower bin), and returns the rounded
// mean of that bin's samples — so a constant window reproduces its value
// exactly regardless of bin width.
inline std::uint8_t window_background(const std::uint8_t* vals, int n, BackgroundMethod method, int bins) {
  if (n < 1) throw InvalidArgument("window_background needs at least one sample");
  if (method == BackgroundMethod::Mean) {
    std::uint64_t sum = 0;
    for (int i = 0; i < n; ++i) sum += vals[i];
    return static_cast<std::uint8_t>((2 * sum + n) / (2 * static_cast<std::uint64_t>(n)));
  }
  int count[256] = {0};
  for (int i = 0; i < n; ++i) count[(vals[i] * bins) / 256] += 1;
  int best = 0;
  for (int b = 1; b < bins; ++b)
    if (count[b] > count[best]) best = b;
  std::uint64_t sum = 0;
  std::uint64_t cnt = 0;
  for (int i = 0; i < n; ++i)
    if ((vals[i] * bins) / 256 == best) sum += vals[i], ++cnt;
  return static_cast<std::uint8_t>((2 * sum + cnt) / (2 * cnt));
}

// Streaming detector: feed grayscale frames oldest-first; once `window`
// frames have arrived every push yields the foreground mask of the newest
// frame against the background of the current window (newest included).
class MotionDetector {
 public:
  MotionDetector(MotionConfig cfg, int width, int height) : cfg_(cfg), width_(width), height_(height) {
    cfg_.validate();
    if (width < 1 || height < 1) throw InvalidArgument("motion detector needs positive frame dimensions");
    const std::size_t px = static_cast<std::size_t>(width) * height;
    ring_.assign(px * static_cast<std::size_t>(cfg_.window), 0);
    sums_.assign(px, 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int frames_seen() const { return frames_seen_; }
  const MotionConfig& config() const { return cfg_; }

  std::optional<BinaryMask> push(const Frame& gray) {
    if (gray.channels != 1) throw InvalidArgument("motion detector expects grayscale frames");
    if (gray.width != width_ || gray.height != height_)
      throw InvalidArgument("frame " + std::to_string(gray.index) + " dimensions do not match detector");
    const std::size_t px = static_cast<std::size_t>(width_) * height_;
    const int W = cfg_.window;
    const std::size_t slot = static_cast<std::size_t>(frames_seen_ % W);
    const bool full_before = frames_seen_ >= W;
    for (std::size_t p = 0; p < px; ++p) {
      std::uint8_t& cell = ring_[p * W + slot];
      if (full_before) sums_[p] -= cell;
      cell = gray.data[p];
      sums_[p] += cell;
    }
    ++frames_seen_;
    if (frames_seen_ < W) return std::nullopt;

    BinaryMask mask = BinaryMask::make(width_, height_);
    for (std::size_t p = 0; p < px; ++p) {
      std::uint8_t bg;
      if (cfg_.method == BackgroundMethod::Mean) {
        bg = static_cast<std::uint8_t>((2 * sums_[p] + W) / (2 * static_cast<std::uint64_t>(W)));
      } else {
        bg = window_background(&ring_[p * W], W, BackgroundMethod::Mode, cfg_.bins);
      }
      const int diff = static_cast<int>(gray.data[p]) - static_cast<int>(bg);
      mask.bits[p] = (diff > cfg_.threshold || -diff > cfg_.threshold) ? 1 : 0;
    }
    return mask;
  }

  // Background of the current (full) window, mostly for inspection and tests.
  Frame background() const {
    if (frames_seen_ < cfg_.window) throw InvalidArgument("background not available before the window fills");
    Frame bg = Frame::make(width_, height_, 1);
    const std::size_t px = static_cast<std::size_t>(width_) * height_;
    for (std::size_t p = 0; p < px; ++p)
      bg.data[p] = window_background(&ring_[p * cfg_.window], cfg_.window, cfg_.method, cfg_.bins);
    return bg;
  }

 private:
  MotionConfig cfg_;
  int width_;
  int height_;
  int frames_seen_ = 0;
  std::vector<std::uint8_t> ring_;   // per pixel: window samples, slot-indexed
  std::vector<std::uint64_t> sums_;  // per pixel: running window sum
};

// Background over an explicit window of frames (the window size is however
// many frames are passed); color input is converted to luma first.
inline Frame background_model(const std::vector<Frame>& window, const MotionConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(window.size()) != cfg.window)
    throw InvalidArgument("background_model expects " + std::to_string(cfg.window) + " frames, got " +
                          std::to_string(window.size()));
  const int w = window[0].width, h = window[0].height;
  std::vector<Frame> gray;
  gray.reserve(window.size());
  for (const Frame& f : window) {
    if (f.width != w || f.height != h)
      throw InvalidArgument("frame " + std::to_string(f.index) + " dimensions do not match the window");
    gray.push_back(f.channels == 1 ? f : grayscale(f));
  }
  const std::size_t px = static_cast<std::size_t>(w) * h;
  const int n = static_cast<int>(gray.size());
  Frame bg = Frame::make(w, h, 1);
  std::vector<std::uint8_t> samples(gray.size());
  for (std::size_t p = 0; p < px; ++p) {
    for (int i = 0; i < n; ++i) samples[static_cast<std::size_t>(i)] = gray[static_cast<std::size_t>(i)].data[p];
    bg.data[p] = window_background(samples.data(), n, cfg.method, cfg.bins);
  }
  return bg;
}

// Foreground of one frame against a background image: |frame - bg| > threshold.
inline BinaryMask detect_motion(const Frame& frame, const Frame& background, const MotionConfig& cfg) {
  cfg.validate();
  const Frame gray = frame.channels == 1 ? frame : grayscale(frame);
  const Frame bg = background.channels == 1 ? background : grayscale(background);
  if (gray.width != bg.width || gray.height != bg.height)
    throw InvalidArgument("frame and background dimensions do not match");
  const std::size_t px = static_cast<std::size_t>(gray.width) * gray.height;
  BinaryMask mask = BinaryMask::make(gray.width, gray.height);
  for (std::size_t p = 0; p < px; ++p) {
    const int diff = static_cast<int>(gray.data[p]) - static_cast<int>(bg.data[p]);
    mask.bits[p] = (diff > cfg.threshold || -diff > cfg.threshold) ? 1 : 0;
  }
  return mask;
}

// Streaming run over a frame sequence. When homographies are given (one per
// frame, forward camera motion) each frame is warped into the reference plane
// before entering the window. Returns one mask per frame from index window-1
// onward (count = frames - window + 1).
inline std::vector<BinaryMask> stream_detect(const std::vector<Frame>& frames,
                                             const std::vector<Homography>* homographies,
                                             const MotionConfig& cfg) {
  cfg.validate();
  if (frames.empty()) throw InvalidArgument("stream_detect needs at least one frame");
  if (static_cast<int>(frames.size()) < cfg.window)
    throw InvalidArgument("need at least " + std::to_string(cfg.window) + " frames for window, got " +
                          std::to_string(frames.size()));
  if (homographies && homographies->size() != frames.size())
    throw InvalidArgument("homography count " + std::to_string(homographies->size()) +
                          " does not match frame count " + std::to_string(frames.size()));
  if (cfg.warp == WarpMode::PerFrameHomography && !homographies)
    throw InvalidArgument("warp mode homography requires per-frame homographies");
  MotionDetector det(cfg, frames[0].width, frames[0].height);
  std::vector<BinaryMask> masks;
  masks.reserve(frames.size() - cfg.window + 1);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    Frame f = homographies ? warp_frame(frames[i], (*homographies)[i]) : frames[i];
    const Frame gray = f.channels == 1 ? std::move(f) : grayscale(f);
    if (auto m = det.push(gray)) masks.push_back(std::move(*m));
  }
  return masks;
}

// Batch helper for the fixed-camera case.
inline std::vector<BinaryMask> detect_motion(const std::vector<Frame>& frames, const MotionConfig& cfg) {
  return stream_detect(frames, nullptr, cfg);
}

// Per-frame homography annotations: one line per frame, nine reals row-major.
inline std::vector<Homography> load_homographies(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open homography file " + path);
  std::vector<Homography> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (vals.empty()) continue;  // blank line
    if (vals.size() != 9)
      throw IoError("expected 9 values on line " + std::to_string(line_no) + " of " + path + ", got " +
                       std::to_string(vals.size()));
    Homography hom;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) hom.h[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = vals[static_cast<std::size_t>(r) * 3 + c];
    try {
      hom.validate();
    } catch (const std::exception& e) {
      throw IoError(std::string(e.what()) + " on line " + std::to_string(line_no) + " of " + path);
    }
    out.push_back(hom);
  }
  return out;
}

}  // namespace teamrec
