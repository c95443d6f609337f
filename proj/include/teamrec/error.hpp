#pragma once

#include <stdexcept>
#include <string>

namespace teamrec {

// Base error for everything the library throws.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad caller input: dimension mismatches, out-of-range symbols, invalid specs.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

// File/stream decode and encode failures. Message names the offending file.
class IoError : public Error {
public:
  using Error::Error;
};

// Configuration file or parameter validation failure. Message names the key.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Pipeline assembly or stage execution failure. Message names the stage.
class PipelineError : public Error {
public:
  using Error::Error;
};

}  // namespace teamrec
