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
#include "nmqsd/noise.hpp"
#include "nmqsd/ode.hpp"
#include "nmqsd/pulse_schedule.hpp"
#include "nmqsd/spin1.hpp"

namespace nmqsd {

struct DephasingOracleResult {
    std::vector<double> times;
    std::vector<double> theta;
    std::vector<double> gp;
    std::vector<Matrix3> rho;
};

struct QuadratureOptions {
    int steps_per_segment = 50;
    double max_step = 0.0;  // <= 0: T / 400
    double tolerance = 1e-6;
};

namespace detail {

struct SignSegment {
    double a;
    double b;
    int p;
};

inline std::vector<SignSegment> outer_segments(const PulseSchedule &schedule) {
    std::vector<SignSegment> seg;
    double a = 0.0;
    int p = 1;
    for (double t : schedule.outer_times) {
        seg.push_back({a, t, p});
        a = t;
        p = -p;
    }
    seg.push_back({a, schedule.total_time, p});
    return seg;
}

inline void require_times(std::span<const double> times, double total_time) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0 && times[i] <= total_time * (1.0 + 1e-12))) {
            throw InvalidArgument("oracle times must lie in [0, T]");
        }
    }
}

inline Matrix3 dephase(const Matrix3 &rho0, double omega, double theta, double gp) {
    const double lambda[3] = {-1.0, 0.0, 1.0};
    Matrix3 rho;
    for (int m = 0; m < 3; ++m) {
        for (int n = 0; n < 3; ++n) {
            const double d = lambda[m] - lambda[n];
            rho(m, n) = rho0(m, n) * std::polar(std::exp(-d * d * gp), -omega * d * theta);
        }
    }
    return rho;
}

}  // namespace detail

/// Theta(t) = int_0^t p(s) ds.
inline double sign_integral(const PulseSchedule &schedule, double t) {
    double theta = 0.0;
    for (const auto &s : detail::outer_segments(schedule)) {
        const double len = std::min(t, s.b) - s.a;
        if (len > 0.0) {
            theta += s.p * len;
        }
    }
    return theta;
}

/// G_p(t) = (1/2) int int p(s) p(s') alpha(s, s') for the exponential
/// kernel, summed exactly over sign-constant segments.
inline double gp_exponential(const PulseSchedule &schedule, double gamma, double t) {
    detail::require_gamma(gamma);
    std::vector<detail::SignSegment> seg;
    for (const auto &s : detail::outer_segments(schedule)) {
        const double b = std::min(t, s.b);
        if (b > s.a) {
            seg.push_back({s.a, b, s.p});
        }
    }
    double diag = 0.0;
    double cross = 0.0;
    for (std::size_t k = 0; k < seg.size(); ++k) {
        const double Lk = seg[k].b - seg[k].a;
        diag += Lk + std::expm1(-gamma * Lk) / gamma;
        const double ek = -std::expm1(-gamma * Lk);
        for (std::size_t l = k + 1; l < seg.size(); ++l) {
            const double Ll = seg[l].b - seg[l].a;
            const double el = -std::expm1(-gamma * Ll);
            const double gap = seg[l].a - seg[k].b;
            cross += seg[k].p * seg[l].p * ek * el * std::exp(-gamma * gap) / (2.0 * gamma);
        }
    }
    return 0.5 * (diag + 2.0 * cross);
}

/// Exact dephasing solution for the exponential kernel.
inline DephasingOracleResult dephasing_analytic(const PulseSchedule &schedule, double omega, double gamma,
                                                const Matrix3 &rho0, std::span<const double> times) {
    detail::require_times(times, schedule.total_time);
    DephasingOracleResult r;
    r.times.assign(times.begin(), times.end());
    for (double t : times) {
        const double th = sign_integral(schedule, t);
        const double g = gp_exponential(schedule, gamma, t);
        r.theta.push_back(th);
        r.gp.push_back(g);
        r.rho.push_back(detail::dephase(rho0, omega, th, g));
    }
    return r;
}

namespace detail {

/// G_p at the requested times by trapezoidal quadrature: G = int p F with
/// F(s) = int_0^s p(s') Re alpha(s, s') ds'.
inline std::vector<double> gp_quadrature(const PulseSchedule &schedule, const NoiseKernel &kernel,
                                         std::span<const double> times, int steps, double max_step) {
    const auto grid = segment_grid(schedule, steps, max_step, times);
    const auto signs = step_signs(schedule, grid);
    const std::size_t n = grid.size();
    std::vector<double> F(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < i; ++k) {
            const double h = grid[k + 1] - grid[k];
            acc += 0.5 * h * signs[k].p * (kernel(grid[i], grid[k]).real() + kernel(grid[i], grid[k + 1]).real());
        }
        F[i] = acc;
    }
    std::vector<double> G(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        G[k + 1] = G[k] + 0.5 * (grid[k + 1] - grid[k]) * signs[k].p * (F[k] + F[k + 1]);
    }
    const auto idx = nearest_nodes(grid, times);
    std::vector<double> out;
    for (std::size_t i : idx) {
        out.push_back(G[i]);
    }
    return out;
}

}  // namespace detail

/// Dephasing solution for any kernel. Non-exponential kernels use 2-D
/// trapezoidal quadrature, checked against a half-step refinement.
inline DephasingOracleResult dephasing_analytic(const PulseSchedule &schedule, double omega,
                                                const NoiseKernel &kernel, const Matrix3 &rho0,
                                                std::span<const double> times, const QuadratureOptions &opt = {}) {
    if (kernel.kind() == NoiseKernel::Kind::Exponential) {
        return dephasing_analytic(schedule, omega, kernel.gamma(), rho0, times);
    }
    detail::require_times(times, schedule.total_time);
    if (times.empty()) {
        return {};
    }
    const double h = opt.max_step > 0.0 ? opt.max_step : schedule.total_time / 400.0;
    const auto coarse = detail::gp_quadrature(schedule, kernel, times, opt.steps_per_segment, h);
    const auto fine = detail::gp_quadrature(schedule, kernel, times, 2 * opt.steps_per_segment, 0.5 * h);
    DephasingOracleResult r;
    r.times.assign(times.begin(), times.end());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double err = std::abs(fine[i] - coarse[i]) / 3.0;
        if (err > opt.tolerance) {
            throw QuadratureResolution("kernel quadrature error " + std::to_string(err) + " exceeds tolerance at t=" +
                                       std::to_string(times[i]));
        }
        const double th = sign_integral(schedule, times[i]);
        r.theta.push_back(th);
        r.gp.push_back(fine[i]);
        r.rho.push_back(detail::dephase(rho0, omega, th, fine[i]));
    }
    return r;
}

struct LindbladResult {
    std::vector<double> times;
    std::vector<Matrix3> rho;
};

/// d rho/dt = -i omega [J_z, rho] + rate (J_- rho J_+ - {J_+ J_-, rho}/2), RK4.
inline LindbladResult lindblad_markov(double omega, const Matrix3 &rho0, std::span<const double> times, double rate,
                                      double max_step = 0.0) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw InvalidArgument("lindblad rate must be positive");
    }
    const OperatorSet &ops = spin1_operators();
    const Complex I{0.0, 1.0};
    const Matrix3 jpjm = ops.jplus * ops.jminus;
    auto deriv = [&](int, const Matrix3 &r) {
        return Matrix3(-I * omega * commutator(ops.jz, r) +
                       rate * (ops.jminus * r * ops.jplus - 0.5 * anticommutator(jpjm, r)));
    };
    const double h = max_step > 0.0 ? max_step : std::min(1e-3, 0.01 / std::max({std::abs(omega), rate, 1.0}));
    const double tr0 = rho0.trace().real();

    LindbladResult out;
    Matrix3 rho = rho0;
    double t = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= t)) {
            throw InvalidArgument("lindblad times must be ascending and non-negative");
        }
        const double span = times[i] - t;
        const auto m = static_cast<long>(std::ceil(span / h - 1e-9));
        for (long j = 0; j < m; ++j) {
            rho = rk4_step(rho, span / static_cast<double>(m), deriv);
        }
        t = times[i];
        const double drift = std::abs(rho.trace().real() - tr0);
        if (!std::isfinite(max_abs(rho)) || drift > 1e-6) {
            throw NumericalFault("lindblad integration unstable; reduce the step size");
        }
        out.times.push_back(t);
        out.rho.push_back(rho);
    }
    return out;
}

}  // namespace nmqsd
