#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "teamrec/error.hpp"
#include "teamrec/frame.hpp"
#include "teamrec/rng.hpp"

namespace teamrec {

// One rigid rectangle moving at constant velocity, optionally jittered.
struct ShapeSpec {
  int width = 5;
  int height = 5;
  std::array<std::uint8_t, 3> color = {255, 255, 255};  // color[0] is used for gray clips
  double x0 = 0.0;  // top-left at frame 0
  double y0 = 0.0;
  double vx = 0.0;  // pixels per frame
  double vy = 0.0;
  double jitter_sigma = 0.0;  // gaussian position jitter, seeded
};

struct ClipSpec {
  int width = 32;
  int height = 32;
  int channels = 1;
  std::uint8_t background = 0;
  std::vector<ShapeSpec> shapes;
};

// Frames plus the ground truth the generator knows: per-frame shape centers
// (center of the drawn rectangle) and the union foreground mask.
struct SynthClip {
  std::vector<Frame> frames;
  std::vector<std::vector<std::array<double, 2>>> centers;  // [frame][shape] -> (x, y)
  std::vector<BinaryMask> masks;
};

// Deterministic for a fixed (spec, frames, seed). Shapes must stay inside the
// frame for the whole clip; the first offending frame index is reported.
inline SynthClip synth_frames(const ClipSpec& spec, int n_frames, std::uint64_t seed) {
  if (spec.width < 1 || spec.height < 1) throw InvalidArgument("clip dimensions must be >= 1");
  if (spec.channels != 1 && spec.channels != 3) throw InvalidArgument("clip channels must be 1 or 3");
  if (n_frames < 1) throw InvalidArgument("clip must have >= 1 frame");
  for (const auto& s : spec.shapes)
    if (s.width < 1 || s.height < 1) throw InvalidArgument("shape dimensions must be >= 1");

  Rng rng(seed);
  SynthClip clip;
  clip.frames.reserve(static_cast<std::size_t>(n_frames));
  clip.centers.reserve(static_cast<std::size_t>(n_frames));
  clip.masks.reserve(static_cast<std::size_t>(n_frames));

  for (int t = 0; t < n_frames; ++t) {
    Frame f = Frame::make(spec.width, spec.height, spec.channels, 0, t);
    if (spec.channels == 1) {
      std::fill(f.data.begin(), f.data.end(), spec.background);
    } else {
      for (std::size_t i = 0; i < f.pixel_count(); ++i)
        f.data[3 * i] = f.data[3 * i + 1] = f.data[3 * i + 2] = spec.background;
    }
    BinaryMask mask = BinaryMask::make(spec.width, spec.height);
    std::vector<std::array<double, 2>> frame_centers;
    frame_centers.reserve(spec.shapes.size());

    for (const auto& s : spec.shapes) {
      double x = s.x0 + s.vx * t;
      double y = s.y0 + s.vy * t;
      if (s.jitter_sigma > 0.0) {
        x += rng.gaussian(0.0, s.jitter_sigma);
        y += rng.gaussian(0.0, s.jitter_sigma);
      }
      const int ix = static_cast<int>(std::lround(x));
      const int iy = static_cast<int>(std::lround(y));
      if (ix < 0 || iy < 0 || ix + s.width > spec.width || iy + s.height > spec.height)
        throw InvalidArgument("shape leaves frame bounds at frame " + std::to_string(t));
      for (int yy = iy; yy < iy + s.height; ++yy) {
        for (int xx = ix; xx < ix + s.width; ++xx) {
          if (spec.channels == 1) {
            f.at(xx, yy) = s.color[0];
          } else {
            f.at(xx, yy, 0) = s.color[0];
            f.at(xx, yy, 1) = s.color[1];
            f.at(xx, yy, 2) = s.color[2];
          }
          mask.set(xx, yy, true);
        }
      }
      frame_centers.push_back({ix + (s.width - 1) / 2.0, iy + (s.height - 1) / 2.0});
    }

    clip.frames.push_back(std::move(f));
    clip.masks.push_back(std::move(mask));
    clip.centers.push_back(std::move(frame_centers));
  }
  return clip;
}

}  // namespace teamrec
