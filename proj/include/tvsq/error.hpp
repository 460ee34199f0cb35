// Copyright 2026 The tvsq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tvsq {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs violate a documented precondition (lengths, ranges, shapes).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A filter's characteristic polynomial has a root on or outside the unit
/// circle.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double rho)
      : Error(what + " (spectral radius " + std::to_string(rho) + ")"),
        rho_(rho) {}
  double rho() const noexcept { return rho_; }

 private:
  double rho_;
};

/// A value lies outside the open interval an inverse map is defined on.
class RangeError : public Error {
 public:
  RangeError(const std::string& what, double lo, double hi)
      : Error(what + " (admissible open interval (" + std::to_string(lo) +
              ", " + std::to_string(hi) + "))"),
        lo_(lo),
        hi_(hi) {}
  double lower() const noexcept { return lo_; }
  double upper() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// Subject score preprocessing failed (zero-variance subject, all outliers).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column,
             const std::string& what)
      : Error(source + ":" + std::to_string(line) + ":" +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tvsq
