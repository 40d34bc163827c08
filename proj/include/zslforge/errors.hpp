#pragma once

#include <stdexcept>
#include <string>

namespace zslforge {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

// A critic was given an attribute it cannot take, or denied one it needs.
class ConditioningMismatch : public Error {
 public:
  using Error::Error;
};

// A gradient was requested for a value that never went onto the tape.
class UnrecordedLeaf : public Error {
 public:
  using Error::Error;
};

// A loss left the finite range allowed by the divergence policy.
class NumericDivergence : public Error {
 public:
  using Error::Error;
};

// Dataset files: missing file, malformed row, dimension mismatch,
// overlapping class partition. The message names the file and line.
class DataFormatError : public Error {
 public:
  using Error::Error;
};

class MissingLabels : public Error {
 public:
  using Error::Error;
};

class StageMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace zslforge
