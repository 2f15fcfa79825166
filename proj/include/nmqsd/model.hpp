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

#include <string>

#include "nmqsd/errors.hpp"

namespace nmqsd {

enum class Model { Dephasing, Dissipative };

inline const char *to_string(Model m) { return m == Model::Dephasing ? "dephasing" : "dissipative"; }

inline Model parse_model(const std::string &s) {
    if (s == "dephasing") {
        return Model::Dephasing;
    }
    if (s == "dissipative") {
        return Model::Dissipative;
    }
    throw InvalidArgument("unknown model '" + s + "'");
}

/// Level spacing omega and Ornstein-Uhlenbeck bandwidth gamma (memory time 1/gamma).
struct ModelParams {
    Model model = Model::Dephasing;
    double omega = 1.0;
    double gamma = 1.0;
};

}  // namespace nmqsd
