#pragma once

#include <stdexcept>
#include <string>

namespace srcsel {

// Base of every error raised by the library. Precondition violations on
// plain arguments (K < 1, bad ranges) use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ManifestError : public Error {
 public:
  using Error::Error;
};

class ImageError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

// Raised by source selection when every candidate in a row is degenerate.
class NoValidSourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace srcsel
