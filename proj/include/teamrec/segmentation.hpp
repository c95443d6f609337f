#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "teamrec/error.hpp"
#include "teamrec/frame.hpp"
#include "teamrec/parallel.hpp"

namespace teamrec {

enum class Connectivity { Four, Eight };

inline std::string connectivity_name(Connectivity c) { return c == Connectivity::Four ? "four" : "eight"; }

inline Connectivity parse_connectivity(const std::string& s) {
  if (s == "four" || s == "4") return Connectivity::Four;
  if (s == "eight" || s == "8") return Connectivity::Eight;
  throw InvalidArgument("unknown connectivity '" + s + "' (expected four|eight)");
}

struct SegmentationConfig {
  int n_blocks = 4;
  Connectivity connectivity = Connectivity::Eight;
  int min_area = 4;

  void validate() const {
    if (n_blocks < 1) throw ConfigError("n_blocks must be >= 1");
    if (min_area < 1) throw ConfigError("min_area must be >= 1");
  }
};

struct Blob {
  int label = 0;
  int area = 0;
  int x_min = 0, y_min = 0, x_max = 0, y_max = 0;
  double cx = 0.0, cy = 0.0;
  std::vector<std::int64_t> pixels;  // row-major offsets
  // filled by extract_blob_features
  double mean_intensity = 0.0;
  double aspect = 0.0;  // bbox width / height
};

struct Labeling {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // 0 = background, blobs dense 1..k
  std::vector<Blob> blobs;

  int label_at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent[b] = a;  // keep the smaller root so merges stay deterministic
    else parent[a] = b;
  }
};

// Choose the grid shape for n blocks: the most-square factorization, rows
// being the factor <= sqrt(n).
inline std::pair<int, int> block_grid(int n_blocks) {
  int rows = 1;
  for (int r = 1; r * r <= n_blocks; ++r)
    if (n_blocks % r == 0) rows = r;
  return {rows, n_blocks / rows};
}

// First-appearance renumbering in raster order, with small components
// dropped and the survivors compacted to 1..k.
inline Labeling finalize_labels(const BinaryMask& mask, UnionFind& uf, const std::vector<int>& provisional,
                                int min_area) {
  const int w = mask.width, h = mask.height;
  const std::size_t px = static_cast<std::size_t>(w) * h;

  std::vector<int> root_to_dense;                  // discovery order of roots
  std::vector<int> dense_of_root(uf.parent.size(), 0);
  std::vector<int> dense(px, 0);
  for (std::size_t p = 0; p < px; ++p) {
    if (provisional[p] == 0) continue;
    const int r = uf.find(provisional[p]);
    if (dense_of_root[r] == 0) {
      root_to_dense.push_back(r);
      dense_of_root[r] = static_cast<int>(root_to_dense.size());
    }
    dense[p] = dense_of_root[r];
  }

  std::vector<int> area(root_to_dense.size() + 1, 0);
  for (std::size_t p = 0; p < px; ++p)
    if (dense[p] != 0) area[dense[p]] += 1;

  std::vector<int> remap(root_to_dense.size() + 1, 0);
  int next = 0;
  for (std::size_t d = 1; d < area.size(); ++d)
    if (area[d] >= min_area) remap[d] = ++next;

  Labeling out;
  out.width = w;
  out.height = h;
  out.labels.assign(px, 0);
  out.blobs.resize(static_cast<std::size_t>(next));
  for (int k = 0; k < next; ++k) {
    out.blobs[k].label = k + 1;
    out.blobs[k].x_min = w;
    out.blobs[k].y_min = h;
    out.blobs[k].x_max = -1;
    out.blobs[k].y_max = -1;
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const int lab = remap[dense[p]];
      out.labels[p] = lab;
      if (lab == 0) continue;
      Blob& b = out.blobs[static_cast<std::size_t>(lab - 1)];
      b.area += 1;
      b.x_min = std::min(b.x_min, x);
      b.y_min = std::min(b.y_min, y);
      b.x_max = std::max(b.x_max, x);
      b.y_max = std::max(b.y_max, y);
      b.cx += x;
      b.cy += y;
      b.pixels.push_back(static_cast<std::int64_t>(p));
    }
  }
  for (Blob& b : out.blobs) {
    b.cx /= b.area;
    b.cy /= b.area;
  }
  return out;
}

// Provisional two-pass labeling restricted to one rectangular window of the
// mask. Labels are allocated from `next_label` and all merges go through the
// shared union-find, so disjoint windows can run on different workers.
inline void label_window(const BinaryMask& mask, int x0, int y0, int x1, int y1, Connectivity conn,
                         std::vector<int>& provisional, UnionFind& uf, int& next_label) {
  const int w = mask.width;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (!mask.bits[p]) continue;
      int best = 0;
      auto consider = [&](int nx, int ny) {
        if (nx < x0 || nx >= x1 || ny < y0 || ny >= y1) return;
        const int lab = provisional[static_cast<std::size_t>(ny) * w + nx];
        if (lab == 0) return;
        if (best == 0) best = lab;
        else uf.unite(best, lab);
      };
      consider(x - 1, y);
      consider(x, y - 1);
      if (conn == Connectivity::Eight) {
        consider(x - 1, y - 1);
        consider(x + 1, y - 1);
      }
      provisional[p] = best != 0 ? best : ++next_label;
    }
  }
}

}  // namespace detail

// Classic two-pass union-find labeling over the whole mask.
inline Labeling label_sequential(const BinaryMask& mask, const SegmentationConfig& cfg) {
  cfg.validate();
  const std::size_t px = static_cast<std::size_t>(mask.width) * mask.height;
  std::vector<int> provisional(px, 0);
  detail::UnionFind uf(px / 2 + 2);
  int next_label = 0;
  detail::label_window(mask, 0, 0, mask.width, mask.height, cfg.connectivity, provisional, uf, next_label);
  return detail::finalize_labels(mask, uf, provisional, cfg.min_area);
}

// Block-partitioned labeling: the image is tiled into an r x c grid of
// blocks, each labeled independently (workers operate on disjoint windows
// and disjoint label ranges), then a single merge pass unions labels across
// block seams. Renumbering by raster-order first appearance makes the result
// bit-identical to label_sequential, not merely isomorphic.
inline Labeling label_blocked(const BinaryMask& mask, const SegmentationConfig& cfg,
                              const Backend& backend = Backend::sequential()) {
  cfg.validate();
  const auto [rows, cols] = detail::block_grid(cfg.n_blocks);
  if (rows > mask.height || cols > mask.width)
    throw ConfigError("n_blocks=" + std::to_string(cfg.n_blocks) + " does not tile a " + std::to_string(mask.width) +
                      "x" + std::to_string(mask.height) + " image (grid " + std::to_string(rows) + "x" +
                      std::to_string(cols) + ")");

  const int w = mask.width, h = mask.height;
  const std::size_t px = static_cast<std::size_t>(w) * h;
  std::vector<int> provisional(px, 0);

  // Per-block label ranges are preallocated: a block of A pixels has at most
  // ceil(A/2) components, so ranges never collide across workers.
  std::vector<int> bx(cols + 1), by(rows + 1);
  for (int c = 0; c <= cols; ++c) bx[c] = static_cast<int>(static_cast<std::int64_t>(w) * c / cols);
  for (int r = 0; r <= rows; ++r) by[r] = static_cast<int>(static_cast<std::int64_t>(h) * r / rows);

  const int n = rows * cols;
  std::vector<int> base(n + 1, 0);
  for (int b = 0; b < n; ++b) {
    const int r = b / cols, c = b % cols;
    const int area = (bx[c + 1] - bx[c]) * (by[r + 1] - by[r]);
    base[b + 1] = base[b] + (area + 1) / 2;
  }
  detail::UnionFind uf(static_cast<std::size_t>(base[n]) + 1);

  parallel_for(
      static_cast<std::size_t>(n),
      [&](std::size_t b) {
        const int r = static_cast<int>(b) / cols, c = static_cast<int>(b) % cols;
        int next_label = base[b];
        detail::label_window(mask, bx[c], by[r], bx[c + 1], by[r + 1], cfg.connectivity, provisional, uf, next_label);
      },
      backend, 1);

  // Seam merge: union across every adjacency that crosses a block boundary.
  auto unite_px = [&](std::size_t p, std::size_t q) {
    if (provisional[p] != 0 && provisional[q] != 0) uf.unite(provisional[p], provisional[q]);
  };
  for (int r = 1; r < rows; ++r) {
    const int y = by[r];
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const std::size_t up = p - static_cast<std::size_t>(w);
      unite_px(p, up);
      if (cfg.connectivity == Connectivity::Eight) {
        if (x > 0) unite_px(p, up - 1);
        if (x + 1 < w) unite_px(p, up + 1);
      }
    }
  }
  for (int c = 1; c < cols; ++c) {
    const int x = bx[c];
    for (int y = 0; y < h; ++y) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      unite_px(p, p - 1);
      if (cfg.connectivity == Connectivity::Eight) {
        if (y > 0) unite_px(p, p - static_cast<std::size_t>(w) - 1);
        if (y + 1 < h) unite_px(p, p + static_cast<std::size_t>(w) - 1);
      }
    }
  }

  return detail::finalize_labels(mask, uf, provisional, cfg.min_area);
}

// Attach per-blob appearance features: mean intensity (luma for color
// frames) and bounding-box aspect ratio.
inline std::vector<Blob> extract_blob_features(const Labeling& lab, const Frame& frame) {
  if (lab.width != frame.width || lab.height != frame.height)
    throw InvalidArgument("label image dimensions do not match frame");
  std::vector<Blob> blobs = lab.blobs;
  std::vector<double> sum(blobs.size(), 0.0);
  for (std::size_t p = 0; p < lab.labels.size(); ++p) {
    const int l = lab.labels[p];
    if (l == 0) continue;
    double v;
    if (frame.channels == 1) {
      v = frame.data[p];
    } else {
      const std::size_t q = p * 3;
      v = luma(frame.data[q], frame.data[q + 1], frame.data[q + 2]);
    }
    sum[static_cast<std::size_t>(l - 1)] += v;
  }
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    blobs[i].mean_intensity = sum[i] / blobs[i].area;
    blobs[i].aspect = static_cast<double>(blobs[i].x_max - blobs[i].x_min + 1) /
                      static_cast<double>(blobs[i].y_max - blobs[i].y_min + 1);
  }
  return blobs;
}

// Debug view: label image as an 8-bit grayscale frame (label mod 256).
inline Frame label_image_to_frame(const Labeling& lab) {
  Frame f = Frame::make(lab.width, lab.height, 1);
  for (std::size_t p = 0; p < lab.labels.size(); ++p) f.data[p] = static_cast<std::uint8_t>(lab.labels[p] % 256);
  return f;
}

}  // namespace teamrec
