// Copyright 2026 The mecopt Authors
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

#include <stdexcept>
#include <string>

namespace mecopt {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a special function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The ellipsoid shape matrix produced a non-positive cut norm.
class DegenerateCut : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped without reaching its accuracy target.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// Exhaustive search requested on more users than the configured cap.
class InstanceTooLarge : public Error {
 public:
  using Error::Error;
};

/// An allocation lacks a field required for the given placement.
class MissingAllocationEntry : public Error {
 public:
  using Error::Error;
};

/// A scenario document is malformed or violates a validity rule.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// Unrecognized solver method name.
class UnknownMethod : public Error {
 public:
  using Error::Error;
};

/// Unrecognized sweep parameter name.
class UnknownParameter : public Error {
 public:
  using Error::Error;
};

}  // namespace mecopt
