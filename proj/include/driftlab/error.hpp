// Copyright 2026 The driftlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

// Base of everything the library throws on bad input or broken invariants.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or argument values (CLI exit code 1).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed or insufficient data (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

// A split point that leaves one side empty or violates the margin.
class InvalidSplit : public DataError {
 public:
  using DataError::DataError;
};

// Estimator cannot be applied to this dataset (e.g. grid too large).
class IncompatibleError : public Error {
 public:
  using Error::Error;
};

// An internal consistency check failed (CLI exit code 3).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace driftlab
