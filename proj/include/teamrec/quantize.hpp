#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "teamrec/error.hpp"
#include "teamrec/rng.hpp"

namespace teamrec {

// K-means color-space partition. Assignment is nearest center by squared
// RGB distance, ties to the lowest index.
struct ColorQuantizer {
  std::vector<std::array<double, 3>> centers;

  int k() const { return static_cast<int>(centers.size()); }

  int assign(double r, double g, double b) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const double dr = r - centers[i][0], dg = g - centers[i][1], db = b - centers[i][2];
      const double d = dr * dr + dg * dg + db * db;
      if (d < best_d) best_d = d, best = static_cast<int>(i);
    }
    return best;
  }
};

namespace detail {
inline double sq_dist3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dr = a[0] - b[0], dg = a[1] - b[1], db = a[2] - b[2];
  return dr * dr + dg * dg + db * db;
}
}  // namespace detail

// Lloyd's algorithm from a seeded k-means++ initialization. Deterministic:
// a fixed seed gives identical centers. Clusters that empty out are re-seeded
// to the farthest point from its current center (ties to the lowest pixel
// index).
inline ColorQuantizer quantize_colors(const std::vector<std::array<double, 3>>& pixels, int k, int iters,
                                      std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("quantize_colors needs k >= 2");
  if (iters < 1) throw InvalidArgument("quantize_colors needs iters >= 1");
  if (pixels.size() < static_cast<std::size_t>(k))
    throw InvalidArgument("quantize_colors: " + std::to_string(pixels.size()) + " pixels < k=" + std::to_string(k));

  Rng rng(seed);
  const std::size_t n = pixels.size();
  ColorQuantizer q;
  q.centers.reserve(static_cast<std::size_t>(k));

  // k-means++ seeding: first center uniform, then D^2-weighted picks.
  q.centers.push_back(pixels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1))]);
  std::vector<double> d2(n);
  while (q.centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : q.centers) best = std::min(best, detail::sq_dist3(pixels[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
    }
    q.centers.push_back(pixels[pick]);
  }

  std::vector<int> assign(n, 0);
  for (int it = 0; it < iters; ++it) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) assign[i] = q.assign(pixels[i][0], pixels[i][1], pixels[i][2]);

    std::vector<std::array<double, 3>> sum(static_cast<std::size_t>(k), {0.0, 0.0, 0.0});
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assign[i]);
      sum[c][0] += pixels[i][0];
      sum[c][1] += pixels[i][1];
      sum[c][2] += pixels[i][2];
      count[c] += 1;
    }
    for (int c = 0; c < k; ++c) {
      std::array<double, 3> nc;
      if (count[static_cast<std::size_t>(c)] == 0) {
        // farthest point from its assigned center, lowest index on ties
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = detail::sq_dist3(pixels[i], q.centers[static_cast<std::size_t>(assign[i])]);
          if (d > far_d) far_d = d, far = i;
        }
        nc = pixels[far];
      } else {
        const double m = static_cast<double>(count[static_cast<std::size_t>(c)]);
        nc = {sum[static_cast<std::size_t>(c)][0] / m, sum[static_cast<std::size_t>(c)][1] / m,
              sum[static_cast<std::size_t>(c)][2] / m};
      }
      if (nc != q.centers[static_cast<std::size_t>(c)]) moved = true;
      q.centers[static_cast<std::size_t>(c)] = nc;
    }
    if (!moved) break;
  }
  return q;
}

// Total within-cluster squared distance under the quantizer's assignment.
inline double quantizer_distortion(const ColorQuantizer& q, const std::vector<std::array<double, 3>>& pixels) {
  double d = 0.0;
  for (const auto& p : pixels) d += detail::sq_dist3(p, q.centers[static_cast<std::size_t>(q.assign(p[0], p[1], p[2]))]);
  return d;
}

}  // namespace teamrec
