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

#include "nmqsd/coefficients.hpp"
#include "nmqsd/ensemble.hpp"
#include "nmqsd/errors.hpp"
#include "nmqsd/model.hpp"
#include "nmqsd/noise.hpp"
#include "nmqsd/ode.hpp"
#include "nmqsd/oracles.hpp"
#include "nmqsd/pulse_schedule.hpp"
#include "nmqsd/spin1.hpp"
#include "nmqsd/trajectory.hpp"
#include "nmqsd/version.hpp"
