#pragma once

#include <stdexcept>
#include <string>

namespace crackseg {

// Two inputs that must share a shape (image vs. mask, grid vs. map) do not.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable / undecodable / unwritable files and byte buffers.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Geodesic target cannot be reached from the seed under the metric.
class UnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crackseg
