#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "teamrec/error.hpp"

namespace teamrec {

// A raster frame: grayscale (1 channel) or RGB (3 channels), 8 bits per
// sample, row-major with interleaved channels.
struct Frame {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;
  std::int64_t index = 0;

  static Frame make(int width, int height, int channels = 1, std::uint8_t fill = 0, std::int64_t index = 0) {
    Frame f;
    f.width = width;
    f.height = height;
    f.channels = channels;
    f.index = index;
    f.data.assign(static_cast<std::size_t>(width) * height * channels, fill);
    f.validate();
    return f;
  }

  void validate() const {
    if (width < 1 || height < 1) throw InvalidArgument("frame dimensions must be >= 1");
    if (channels != 1 && channels != 3) throw InvalidArgument("frame channels must be 1 or 3");
    if (data.size() != static_cast<std::size_t>(width) * height * channels)
      throw InvalidArgument("frame data length does not match width*height*channels");
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const Frame& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  bool operator==(const Frame& o) const {
    return same_shape(o) && data == o.data;
  }
};

// One boolean per pixel, row-major. Stored as bytes for simple indexing.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  static BinaryMask make(int width, int height, bool fill = false) {
    BinaryMask m;
    m.width = width;
    m.height = height;
    m.bits.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
    return m;
  }

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }

  bool operator==(const BinaryMask& o) const {
    return width == o.width && height == o.height && bits == o.bits;
  }
};

// Integer BT.601 luma with 77/150/29 weights over 256, rounded to nearest.
// Keeps all background-model arithmetic integral.
inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((77 * r + 150 * g + 29 * b + 128) >> 8);
}

// RGB frames are collapsed to luma; grayscale frames pass through untouched.
inline Frame grayscale(const Frame& f) {
  f.validate();
  if (f.channels == 1) return f;
  Frame g = Frame::make(f.width, f.height, 1, 0, f.index);
  const std::size_t n = f.pixel_count();
  for (std::size_t i = 0; i < n; ++i)
    g.data[i] = luma(f.data[3 * i], f.data[3 * i + 1], f.data[3 * i + 2]);
  return g;
}

// ---------------------------------------------------------------------------
// Portable pixmap interchange: binary PGM (P5) for grayscale, PPM (P6) for
// RGB, maxval always 255. Encoding is canonical so save -> load -> save is
// byte-identical.
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> encode_pnm(const Frame& f) {
  f.validate();
  const std::string header = std::string(f.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(f.width) + " " + std::to_string(f.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), f.data.begin(), f.data.end());
  return out;
}

namespace detail {

// Reads the next header token, skipping whitespace and '#' comments.
inline std::string pnm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos, const std::string& src) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= bytes.size()) throw IoError("truncated pnm header in " + src);
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
  return tok;
}

inline int pnm_int(const std::vector<std::uint8_t>& bytes, std::size_t& pos, const std::string& src) {
  const std::string tok = pnm_token(bytes, pos, src);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad pnm header value '" + tok + "' in " + src);
  }
}

}  // namespace detail

inline Frame decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& source_name = "<memory>") {
  std::size_t pos = 0;
  const std::string magic = detail::pnm_token(bytes, pos, source_name);
  int channels = 0;
  if (magic == "P5") channels = 1;
  else if (magic == "P6") channels = 3;
  else throw IoError("unsupported pnm magic '" + magic + "' in " + source_name + " (want P5 or P6)");
  const int width = detail::pnm_int(bytes, pos, source_name);
  const int height = detail::pnm_int(bytes, pos, source_name);
  const int maxval = detail::pnm_int(bytes, pos, source_name);
  if (width < 1 || height < 1) throw IoError("bad pnm dimensions in " + source_name);
  if (maxval != 255) throw IoError("unsupported pnm maxval " + std::to_string(maxval) + " in " + source_name);
  ++pos;  // single whitespace after maxval
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() < pos || bytes.size() - pos < need)
    throw IoError("truncated pnm pixel data in " + source_name);
  Frame f;
  f.width = width;
  f.height = height;
  f.channels = channels;
  f.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return f;
}

inline Frame load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pnm(bytes, path.string());
}

inline void save_pnm(const Frame& f, const std::filesystem::path& path) {
  const auto bytes = encode_pnm(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

// Canonical frame filename: zero-padded decimal index, e.g. "frame_000017.pgm".
inline std::string frame_filename(std::int64_t index, int channels = 1, const std::string& prefix = "frame_") {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06lld", static_cast<long long>(index));
  return prefix + buf + (channels == 1 ? ".pgm" : ".ppm");
}

// Loads every .pgm/.ppm file in the directory, ordered by the zero-padded
// index in the filename. Dimensions must be uniform across the sequence.
inline std::vector<Frame> load_frame_sequence(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& p : files) {
    Frame f = load_pnm(p);
    // Trailing digits of the stem are the frame index.
    const std::string stem = p.stem().string();
    std::size_t d = stem.size();
    while (d > 0 && std::isdigit(static_cast<unsigned char>(stem[d - 1]))) --d;
    f.index = d < stem.size() ? std::stoll(stem.substr(d)) : static_cast<std::int64_t>(frames.size());
    if (!frames.empty() && !frames.front().same_shape(f))
      throw IoError("dimension mismatch in " + p.string() + ": expected " + std::to_string(frames.front().width) + "x" +
                    std::to_string(frames.front().height) + "x" + std::to_string(frames.front().channels) + ", got " +
                    std::to_string(f.width) + "x" + std::to_string(f.height) + "x" + std::to_string(f.channels));
    frames.push_back(std::move(f));
  }
  std::sort(frames.begin(), frames.end(), [](const Frame& a, const Frame& b) { return a.index < b.index; });
  return frames;
}

inline void save_frame_sequence(const std::vector<Frame>& frames, const std::filesystem::path& dir,
                                const std::string& prefix = "frame_") {
  std::filesystem::create_directories(dir);
  for (const auto& f : frames) save_pnm(f, dir / frame_filename(f.index, f.channels, prefix));
}

}  // namespace teamrec
