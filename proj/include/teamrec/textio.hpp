#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>

#include "teamrec/error.hpp"

namespace teamrec::detail {

// 17 significant digits: enough for double round trips, so save -> load ->
// save is byte-identical.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void expect_token(std::istream& in, const std::string& want, const std::string& source) {
  std::string got;
  if (!(in >> got) || got != want)
    throw IoError("expected '" + want + "' in " + source + (got.empty() ? "" : " (got '" + got + "')"));
}

template <typename T>
inline T read_value(std::istream& in, const std::string& what, const std::string& source) {
  T v{};
  if (!(in >> v)) throw IoError("failed to read " + what + " in " + source);
  return v;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace teamrec::detail
