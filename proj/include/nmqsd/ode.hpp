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

namespace nmqsd {

/// Classical fourth-order Runge-Kutta step. The derivative is called with a
/// stage tag (0 = step start, 1 = midpoint, 2 = step end) so callers can read
/// pre-tabulated inputs instead of interpolating.
template <class State, class Derivative>
State rk4_step(const State &y, double h, Derivative &&deriv) {
    const State k1 = deriv(0, y);
    const State k2 = deriv(1, State(y + (0.5 * h) * k1));
    const State k3 = deriv(1, State(y + (0.5 * h) * k2));
    const State k4 = deriv(2, State(y + h * k3));
    return State(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

}  // namespace nmqsd
