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

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "nmqsd/coefficients.hpp"
#include "nmqsd/errors.hpp"
#include "nmqsd/model.hpp"
#include "nmqsd/noise.hpp"
#include "nmqsd/ode.hpp"
#include "nmqsd/pulse_schedule.hpp"
#include "nmqsd/spin1.hpp"

namespace nmqsd {

struct TrajectoryState {
    Vector3 psi;
    double t = 0.0;
};

/// Noise-free part of the dephasing generator: -i omega p J_z - p F J_z^2.
inline Matrix3 dephasing_drift(double p, double omega, double F, const OperatorSet &ops) {
    const Complex I{0.0, 1.0};
    return -I * (p * omega) * ops.jz - (p * F) * (ops.jz * ops.jz);
}

inline Matrix3 dissipative_drift(const SignValues &sv, double omega, const Memory4 &F, const OperatorSet &ops) {
    const Complex I{0.0, 1.0};
    const double l1 = sv.l1;
    const double l2 = sv.l2;
    const Matrix3 &jp = ops.jplus;
    const Matrix3 &jm = ops.jminus;
    Matrix3 d = -I * (sv.p * omega) * ops.jz;
    if (l1 != 0.0) {
        d -= l1 * (F(0) * (jp * jm) + F(1) * (jp * jp) + F(2) * (jp * ops.jz * jm));
    }
    if (l2 != 0.0) {
        d -= l2 * (F(1) * (jm * jp) + F(0) * (jm * jm) + F(3) * (jm * ops.jz * jp));
    }
    return d;
}

/// Operator multiplying z_t^* in the equation of motion.
inline Matrix3 noise_coupling(Model model, const SignValues &sv, const OperatorSet &ops) {
    if (model == Model::Dephasing) {
        return static_cast<double>(sv.p) * ops.jz;
    }
    return static_cast<double>(sv.l1) * ops.jminus + static_cast<double>(sv.l2) * ops.jplus;
}

inline Vector3 rhs_dephasing(const Vector3 &psi, double t, Complex z_conj, const PulseSchedule &schedule,
                             const CoefficientTables &tables, const OperatorSet &ops = spin1_operators()) {
    if (tables.model != Model::Dephasing) {
        throw InvalidArgument("rhs_dephasing needs dephasing tables");
    }
    const SignValues sv = signs_at(schedule, t);
    const Matrix3 A = dephasing_drift(sv.p, tables.omega, tables.F_at(t), ops) +
                      z_conj * noise_coupling(Model::Dephasing, sv, ops);
    return A * psi;
}

inline Vector3 rhs_dissipative(const Vector3 &psi, double t, Complex z_conj, const PulseSchedule &schedule,
                               const CoefficientTables &tables, const OperatorSet &ops = spin1_operators()) {
    if (tables.model != Model::Dissipative) {
        throw InvalidArgument("rhs_dissipative needs dissipative tables");
    }
    const SignValues sv = signs_at(schedule, t);
    const Matrix3 A = dissipative_drift(sv, tables.omega, tables.Fi_at(t), ops) +
                      z_conj * noise_coupling(Model::Dissipative, sv, ops);
    return A * psi;
}

/// Per-step generators shared read-only by every trajectory of a run. Step k
/// spans nodes[k]..nodes[k+1]; drift[j] is the noise-free generator at the
/// start, midpoint and end of the step.
class EvolutionPlan {
  public:
    struct Step {
        Matrix3 drift[3];
        Matrix3 coupling;
        double h = 0.0;
    };

    EvolutionPlan(const ModelParams &params, const PulseSchedule &schedule, std::span<const double> nodes,
                  const CoefficientTables &tables, const OperatorSet &ops = spin1_operators())
        : params_(params), nodes_(nodes.begin(), nodes.end()) {
        require_aligned(schedule, nodes);
        if (tables.model != params.model) {
            throw InvalidArgument("coefficient tables belong to a different model");
        }
        stages_ = stage_grid(nodes);
        const auto signs = step_signs(schedule, nodes);
        steps_.resize(nodes.size() - 1);
        for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
            Step &st = steps_[k];
            st.h = nodes[k + 1] - nodes[k];
            st.coupling = noise_coupling(params.model, signs[k], ops);
            for (int j = 0; j < 3; ++j) {
                const double t = stages_[2 * k + j];
                st.drift[j] = params.model == Model::Dephasing
                                  ? dephasing_drift(signs[k].p, params.omega, tables.F_at(t), ops)
                                  : dissipative_drift(signs[k], params.omega, tables.Fi_at(t), ops);
            }
        }
    }

    const ModelParams &params() const { return params_; }
    const std::vector<double> &nodes() const { return nodes_; }
    const std::vector<double> &stages() const { return stages_; }
    const std::vector<Step> &steps() const { return steps_; }

  private:
    ModelParams params_;
    std::vector<double> nodes_;
    std::vector<double> stages_;
    std::vector<Step> steps_;
};

inline void require_unit_norm(const Vector3 &psi) {
    if (!(std::abs(psi.norm() - 1.0) <= 1e-10)) {
        throw InvalidArgument("initial state must have unit norm");
    }
}

/// Indices of the plan nodes matching the requested output times.
inline std::vector<std::size_t> output_indices(std::span<const double> nodes, std::span<const double> times) {
    const double eps = 1e-9 * std::max(1.0, std::abs(nodes.back()));
    auto idx = nearest_nodes(nodes, times);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (std::abs(nodes[idx[i]] - times[i]) > eps) {
            throw GridMisalignment("output time " + std::to_string(times[i]) + " is not a grid node");
        }
        if (i > 0 && idx[i] < idx[i - 1]) {
            throw InvalidArgument("output times must be ascending");
        }
    }
    return idx;
}

/// Fixed-step RK4 of the linear QSD equation along one noise path; states
/// are recorded at the given node indices (ascending).
inline std::vector<TrajectoryState> integrate_trajectory(const EvolutionPlan &plan, const NoisePath &noise,
                                                         const Vector3 &psi0, std::span<const std::size_t> outputs) {
    const auto &stages = plan.stages();
    if (noise.z.size() != stages.size()) {
        throw GridMisalignment("noise path does not cover the integration stages");
    }
    if (!noise.grid.empty()) {
        const double eps = 1e-12 * std::max(1.0, stages.back());
        if (noise.grid.size() != stages.size()) {
            throw GridMisalignment("noise grid does not match the integration stages");
        }
        for (std::size_t i = 0; i < stages.size(); ++i) {
            if (std::abs(noise.grid[i] - stages[i]) > eps) {
                throw GridMisalignment("noise grid does not match the integration stages");
            }
        }
    }
    require_unit_norm(psi0);

    const auto &nodes = plan.nodes();
    const auto &steps = plan.steps();
    std::vector<TrajectoryState> out;
    out.reserve(outputs.size());
    std::size_t next = 0;
    auto record = [&](std::size_t k, const Vector3 &psi) {
        while (next < outputs.size() && outputs[next] == k) {
            out.push_back({psi, nodes[k]});
            ++next;
        }
    };

    Vector3 psi = psi0;
    record(0, psi);
    for (std::size_t k = 0; k < steps.size() && next < outputs.size(); ++k) {
        const auto &st = steps[k];
        const Complex zc[3] = {std::conj(noise.z[2 * k]), std::conj(noise.z[2 * k + 1]),
                               std::conj(noise.z[2 * k + 2])};
        psi = rk4_step(psi, st.h, [&](int j, const Vector3 &y) {
            return Vector3(st.drift[j] * y + zc[j] * (st.coupling * y));
        });
        const double n2 = psi.squaredNorm();
        if (!std::isfinite(n2)) {
            throw TrajectoryFault(noise.stream_id, "state became non-finite at t=" + std::to_string(nodes[k + 1]));
        }
        record(k + 1, psi);
    }
    if (next != outputs.size()) {
        throw InvalidArgument("output indices beyond the integration grid");
    }
    return out;
}

/// Convenience form: the integration nodes are the even entries of the
/// noise grid, which must be a stage grid.
inline std::vector<TrajectoryState> integrate_trajectory(const ModelParams &params, const PulseSchedule &schedule,
                                                         const NoisePath &noise, const CoefficientTables &tables,
                                                         const Vector3 &psi0, std::span<const double> output_times) {
    if (noise.grid.size() < 3 || noise.grid.size() % 2 == 0) {
        throw GridMisalignment("noise grid must include the step midpoints");
    }
    std::vector<double> nodes;
    for (std::size_t i = 0; i < noise.grid.size(); i += 2) {
        nodes.push_back(noise.grid[i]);
    }
    const EvolutionPlan plan(params, schedule, nodes, tables);
    const auto idx = output_indices(plan.nodes(), output_times);
    return integrate_trajectory(plan, noise, psi0, idx);
}

}  // namespace nmqsd
