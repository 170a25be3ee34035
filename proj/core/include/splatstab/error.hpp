#pragma once

#include <stdexcept>
#include <string>

namespace splatstab {

// Bad or inconsistent input (files, shapes, configuration). Maps to CLI exit code 1.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical stage failed (divergence, degenerate fit). Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace splatstab
