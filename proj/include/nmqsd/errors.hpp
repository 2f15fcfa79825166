// Copyright 2026 The nmqsd Authors
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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nmqsd {

/// Precondition violation on a public entry point.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A pulse time is not a node of the grid handed to an integrator.
class GridMisalignment : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or diverging value produced during integration.
class NumericalFault : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Gram matrix is not positive semidefinite within tolerance.
class FactorizationFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Requested quadrature tolerance cannot be met on the supplied grid.
class QuadratureResolution : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Trajectory fault tagged with the noise stream that produced it.
class TrajectoryFault : public NumericalFault {
  public:
    TrajectoryFault(std::uint64_t stream, const std::string &what)
        : NumericalFault("stream " + std::to_string(stream) + ": " + what), stream_(stream) {}
    std::uint64_t stream() const noexcept { return stream_; }

  private:
    std::uint64_t stream_;
};

}  // namespace nmqsd
