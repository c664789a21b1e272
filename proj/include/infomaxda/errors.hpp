#pragma once

#include <stdexcept>
#include <string>

namespace infomaxda {

// Bad arguments, shapes, config values or malformed input files.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// NaN/Inf in a tensor, loss or gradient.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Missing files, unwritable directories.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace infomaxda
