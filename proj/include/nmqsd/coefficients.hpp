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

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmqsd/csv.hpp"
#include "nmqsd/errors.hpp"
#include "nmqsd/model.hpp"
#include "nmqsd/noise.hpp"
#include "nmqsd/ode.hpp"
#include "nmqsd/pulse_schedule.hpp"
#include "nmqsd/spin1.hpp"

namespace nmqsd {

using Memory4 = Eigen::Matrix<Complex, 4, 1>;

namespace detail {

struct Bracket {
    std::size_t k;
    double w;
};

inline Bracket bracket(const std::vector<double> &grid, double t) {
    const double span = grid.back() - grid.front();
    const double eps = 1e-12 * std::max(1.0, std::abs(span));
    if (t < grid.front() - eps || t > grid.back() + eps) {
        throw InvalidArgument("coefficient lookup at t=" + std::to_string(t) + " outside the table span");
    }
    auto it = std::upper_bound(grid.begin(), grid.end(), t);
    std::size_t k = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
    k = std::min(k, grid.size() - 2);
    const double w = std::clamp((t - grid[k]) / (grid[k + 1] - grid[k]), 0.0, 1.0);
    return {k, w};
}

inline void require_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("gamma must be positive and finite");
    }
}

}  // namespace detail

/// Deterministic memory functions on a grid. Dephasing tables fill F;
/// dissipative tables fill Fi = (F1, F2, F3, F4).
struct CoefficientTables {
    Model model = Model::Dephasing;
    double omega = 0.0;
    double gamma = 1.0;
    std::vector<double> grid;
    std::vector<double> F;
    std::vector<Memory4> Fi;

    double F_at(double t) const {
        const auto b = detail::bracket(grid, t);
        return (1.0 - b.w) * F[b.k] + b.w * F[b.k + 1];
    }

    Memory4 Fi_at(double t) const {
        const auto b = detail::bracket(grid, t);
        return (1.0 - b.w) * Fi[b.k] + b.w * Fi[b.k + 1];
    }
};

/// dF/dt = (gamma/2) p - gamma F, F(0) = 0, RK4 on every grid step.
inline CoefficientTables solve_F_dephasing(const PulseSchedule &schedule, double gamma,
                                           std::span<const double> grid, double omega = 1.0) {
    detail::require_gamma(gamma);
    require_aligned(schedule, grid);
    const auto signs = step_signs(schedule, grid);

    CoefficientTables out;
    out.model = Model::Dephasing;
    out.omega = omega;
    out.gamma = gamma;
    out.grid.assign(grid.begin(), grid.end());
    out.F.assign(grid.size(), 0.0);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double drive = 0.5 * gamma * signs[k].p;
        const double h = grid[k + 1] - grid[k];
        out.F[k + 1] = rk4_step(out.F[k], h, [&](int, double f) { return drive - gamma * f; });
    }
    return out;
}

/// F(t) = int_0^t alpha(t, s) p(s) ds by trapezoidal quadrature on the grid,
/// for stationary real kernels other than the exponential one.
inline CoefficientTables solve_F_dephasing_quadrature(const PulseSchedule &schedule, const NoiseKernel &kernel,
                                                      std::span<const double> grid, double omega = 1.0) {
    require_aligned(schedule, grid);
    const auto signs = step_signs(schedule, grid);
    CoefficientTables out;
    out.model = Model::Dephasing;
    out.omega = omega;
    out.gamma = kernel.kind() == NoiseKernel::Kind::Exponential ? kernel.gamma() : 0.0;
    out.grid.assign(grid.begin(), grid.end());
    out.F.assign(grid.size(), 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        Complex acc{};
        for (std::size_t k = 0; k < i; ++k) {
            const double h = grid[k + 1] - grid[k];
            acc += 0.5 * h * static_cast<double>(signs[k].p) * (kernel(grid[i], grid[k]) + kernel(grid[i], grid[k + 1]));
        }
        if (std::abs(acc.imag()) > 1e-12 * (1.0 + std::abs(acc))) {
            throw InvalidArgument("dephasing quadrature needs a real kernel");
        }
        out.F[i] = acc.real();
    }
    return out;
}

/// Right-hand side of the closed memory-function system of the dissipative model.
inline Memory4 dissipative_memory_rhs(const Memory4 &F, const SignValues &sv, double omega, double gamma) {
    const Complex I{0.0, 1.0};
    const double p = sv.p;
    const double l1 = sv.l1;
    const double l2 = sv.l2;
    const Complex w = I * (p * omega);
    Memory4 d;
    d(0) = 0.5 * gamma * l1 + (w - l1 * F(2) + l2 * F(3) - gamma) * F(0);
    d(1) = 0.5 * gamma * l2 + (-w - l1 * F(2) + l2 * F(3) - gamma) * F(1);
    d(2) = (w - 3.0 * l1 * F(0) + l1 * F(2) - l2 * F(3) - gamma) * F(2) + (l1 * F(0) - l2 * F(1) + l2 * F(3)) * F(0);
    d(3) = (-w - 3.0 * l2 * F(1) + l1 * F(2) - l2 * F(3) - gamma) * F(3) + (l1 * F(0) - l2 * F(1) + l1 * F(2)) * F(1);
    return d;
}

inline bool all_finite(const Memory4 &v) {
    for (int i = 0; i < 4; ++i) {
        if (!std::isfinite(v(i).real()) || !std::isfinite(v(i).imag())) {
            return false;
        }
    }
    return true;
}

inline CoefficientTables solve_Fi_dissipative(const PulseSchedule &schedule, double omega, double gamma,
                                              std::span<const double> grid) {
    detail::require_gamma(gamma);
    require_aligned(schedule, grid);
    const auto signs = step_signs(schedule, grid);

    CoefficientTables out;
    out.model = Model::Dissipative;
    out.omega = omega;
    out.gamma = gamma;
    out.grid.assign(grid.begin(), grid.end());
    out.Fi.assign(grid.size(), Memory4::Zero());
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double h = grid[k + 1] - grid[k];
        const SignValues sv = signs[k];
        out.Fi[k + 1] = rk4_step(out.Fi[k], h, [&](int, const Memory4 &f) {
            return dissipative_memory_rhs(f, sv, omega, gamma);
        });
        if (!all_finite(out.Fi[k + 1])) {
            throw NumericalFault("memory functions became non-finite at t=" + std::to_string(grid[k + 1]));
        }
    }
    return out;
}

/// Linear generator of the two-time system: d f(t, s)/dt = M(t) f(t, s).
inline Eigen::Matrix4cd two_time_generator(const Memory4 &F, const SignValues &sv, double omega) {
    const Complex w{0.0, sv.p * omega};
    const double l1 = sv.l1;
    const double l2 = sv.l2;
    const Complex c = l1 * F(0) - 2.0 * l1 * F(2) + l2 * F(1) + 2.0 * l2 * F(3);
    Eigen::Matrix4cd M = Eigen::Matrix4cd::Zero();
    M(0, 0) = w + l2 * F(1) - l1 * F(2) + l2 * F(3);
    M(0, 1) = -l2 * F(0);
    M(1, 1) = -w + l1 * F(0) - l1 * F(2) + l2 * F(3);
    M(1, 0) = -l1 * F(1);
    M(2, 2) = w - l1 * F(0) + l1 * F(2) - l2 * F(3);
    M(2, 0) = c;
    M(2, 1) = -2.0 * l2 * F(0);
    M(2, 3) = -l2 * F(0);
    M(3, 3) = -w - l2 * F(1) + l1 * F(2) - l2 * F(3);
    M(3, 1) = -c;
    M(3, 0) = 2.0 * l1 * F(1);
    M(3, 2) = -l1 * F(1);
    return M;
}

struct TwoTimeSolution {
    double s = 0.0;
    std::vector<double> times;
    std::vector<Memory4> f;
};

/// Integrates f_i(t, s) for t >= s from (l1(s), l2(s), 0, 0), reading F_i
/// from the tables by linear interpolation.
inline TwoTimeSolution solve_fi_two_time(const PulseSchedule &schedule, double omega, double gamma, double s,
                                         const CoefficientTables &tables, std::span<const double> grid) {
    detail::require_gamma(gamma);
    require_aligned(schedule, grid);
    if (tables.model != Model::Dissipative) {
        throw InvalidArgument("solve_fi_two_time needs dissipative tables");
    }
    const double eps = 1e-12 * schedule.total_time;
    auto it = std::lower_bound(grid.begin(), grid.end(), s - eps);
    if (it == grid.end() || std::abs(*it - s) > eps) {
        throw InvalidArgument("solve_fi_two_time: s must be a grid point");
    }
    if (tables.grid.front() > s + eps || tables.grid.back() < grid.back() - eps) {
        throw InvalidArgument("solve_fi_two_time: tables do not cover [s, T]");
    }
    const auto start = static_cast<std::size_t>(it - grid.begin());
    const auto signs = step_signs(schedule, grid);
    const SignValues s0 = signs_at(schedule, grid[start]);

    TwoTimeSolution out;
    out.s = grid[start];
    Memory4 f;
    f << static_cast<double>(s0.l1), static_cast<double>(s0.l2), 0.0, 0.0;
    out.times.push_back(grid[start]);
    out.f.push_back(f);
    for (std::size_t k = start; k + 1 < grid.size(); ++k) {
        const double h = grid[k + 1] - grid[k];
        const Eigen::Matrix4cd M[3] = {two_time_generator(tables.Fi_at(grid[k]), signs[k], omega),
                                       two_time_generator(tables.Fi_at(grid[k] + 0.5 * h), signs[k], omega),
                                       two_time_generator(tables.Fi_at(grid[k + 1]), signs[k], omega)};
        f = rk4_step(f, h, [&](int stage, const Memory4 &y) { return Memory4(M[stage] * y); });
        if (!all_finite(f)) {
            throw NumericalFault("two-time memory functions became non-finite");
        }
        out.times.push_back(grid[k + 1]);
        out.f.push_back(f);
    }
    return out;
}

struct ConsistencyReport {
    std::vector<double> times;
    std::vector<double> deviation;
    double max_deviation = 0.0;
    double worst_time = 0.0;
};

/// Compares F_i(t) from the closed system with the trapezoid sum over s of
/// alpha(t, s) f_i(t, s) at every grid node t.
inline ConsistencyReport quadrature_consistency_report(const PulseSchedule &schedule, double omega, double gamma,
                                                       std::span<const double> grid) {
    detail::require_gamma(gamma);
    require_aligned(schedule, grid);
    const auto stages = stage_grid(grid);
    const CoefficientTables tables = solve_Fi_dissipative(schedule, omega, gamma, stages);
    const auto signs = step_signs(schedule, grid);
    const NoiseKernel alpha = NoiseKernel::ornstein_uhlenbeck(gamma);
    const std::size_t n = grid.size();

    std::vector<std::array<Eigen::Matrix4cd, 3>> gen(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        for (int j = 0; j < 3; ++j) {
            gen[k][j] = two_time_generator(tables.Fi[2 * k + j], signs[k], omega);
        }
    }

    auto initial = [](const SignValues &sv) {
        Memory4 v;
        v << static_cast<double>(sv.l1), static_cast<double>(sv.l2), 0.0, 0.0;
        return v;
    };
    // f(., s) is linear in its initial data, so the two one-sided limits at a
    // pulse node are folded into one weighted start vector.
    std::vector<Memory4> Q(n, Memory4::Zero());
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double right = 0.5 * (grid[k + 1] - grid[k]);
        Memory4 f = right * initial(signs[k]);
        if (k > 0) {
            f += 0.5 * (grid[k] - grid[k - 1]) * initial(signs[k - 1]);
        }
        for (std::size_t m = k; m + 1 < n; ++m) {
            const double h = grid[m + 1] - grid[m];
            f = rk4_step(f, h, [&](int stage, const Memory4 &y) { return Memory4(gen[m][stage] * y); });
            Q[m + 1] += alpha(grid[m + 1], grid[k]).real() * f;
        }
        if (!all_finite(f)) {
            throw NumericalFault("two-time memory functions became non-finite");
        }
    }
    // upper end point s = t, approached from below
    for (std::size_t m = 1; m < n; ++m) {
        Q[m] += 0.5 * (grid[m] - grid[m - 1]) * alpha(grid[m], grid[m]).real() * initial(signs[m - 1]);
    }

    ConsistencyReport rep;
    rep.times.assign(grid.begin(), grid.end());
    rep.deviation.assign(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        const Memory4 &F = tables.Fi[2 * m];
        const double diff = (Q[m] - F).norm();
        const double ref = F.norm();
        double dev = 0.0;
        if (ref > 0.0) {
            dev = diff / ref;
        } else if (diff > 0.0) {
            dev = std::numeric_limits<double>::infinity();
        }
        rep.deviation[m] = dev;
        if (dev > rep.max_deviation) {
            rep.max_deviation = dev;
            rep.worst_time = grid[m];
        }
    }
    return rep;
}

inline double quadrature_consistency_check(const PulseSchedule &schedule, double omega, double gamma,
                                           std::span<const double> grid) {
    return quadrature_consistency_report(schedule, omega, gamma, grid).max_deviation;
}

/// Writes t and F, or t and re/im of F1..F4.
inline void write_coefficients_csv(const CoefficientTables &tables, const std::string &file) {
    if (tables.model == Model::Dephasing) {
        CsvWriter w(file, {"time", "F"});
        for (std::size_t i = 0; i < tables.grid.size(); ++i) {
            w.row({tables.grid[i], tables.F[i]});
        }
        w.close();
        return;
    }
    CsvWriter w(file, {"time", "F1_re", "F1_im", "F2_re", "F2_im", "F3_re", "F3_im", "F4_re", "F4_im"});
    for (std::size_t i = 0; i < tables.grid.size(); ++i) {
        const Memory4 &F = tables.Fi[i];
        w.row({tables.grid[i], F(0).real(), F(0).imag(), F(1).real(), F(1).imag(), F(2).real(), F(2).imag(),
               F(3).real(), F(3).imag()});
    }
    w.close();
}

}  // namespace nmqsd
