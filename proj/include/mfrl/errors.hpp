// Copyright 2026 The mfrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace mfrl {

// Shape or index disagreement between inputs.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A mass or renormalization check failed beyond tolerance.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The transition family does not support the requested operation.
struct UnsupportedFamilyError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Scalar parameter outside its admissible range.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Class generation could not satisfy the requested constraints.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Instance exceeds the hard size cap of an exact oracle.
struct SizeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A stated precondition is violated by the supplied data.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Serialized artifact carries an unknown schema version.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mfrl
