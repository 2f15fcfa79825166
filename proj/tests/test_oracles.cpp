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

#include <cmath>

#include <gtest/gtest.h>

#include "nmqsd/oracles.hpp"

namespace nmqsd {
namespace {

Vector3 equal_superposition() { return Vector3::Constant(Complex(1.0 / std::sqrt(3.0), 0.0)); }

Matrix3 equal_density() { return equal_superposition() * equal_superposition().adjoint(); }

// G = int_0^t p(s) F(s) ds with F solving dF/dt = gamma (p/2 - F), segment by segment.
double gp_piecewise(const PulseSchedule &s, double gamma, double t) {
    double G = 0.0;
    double F = 0.0;
    double a = 0.0;
    int p = 1;
    auto segment = [&](double b) {
        const double L = b - a;
        G += p * (0.5 * p * L + (F - 0.5 * p) * (1.0 - std::exp(-gamma * L)) / gamma);
        F = 0.5 * p + (F - 0.5 * p) * std::exp(-gamma * L);
        a = b;
    };
    for (double b : s.outer_times) {
        if (b >= t) {
            break;
        }
        segment(b);
        p = -p;
    }
    segment(t);
    return G;
}

NoiseKernel tabulated_exponential(double gamma, double lag_step, double span) {
    std::vector<Complex> v;
    for (double tau = 0.0; tau <= span + lag_step; tau += lag_step) {
        v.emplace_back(0.5 * gamma * std::exp(-gamma * tau), 0.0);
    }
    return NoiseKernel::tabulated(lag_step, std::move(v));
}

TEST(GpExponential, FreeEvolutionValue) {
    const auto s = free_evolution(5.0);
    EXPECT_NEAR(gp_exponential(s, 1.0, 2.0), 0.567667641618306, 1e-12);
    EXPECT_EQ(gp_exponential(s, 1.0, 0.0), 0.0);
}

TEST(GpExponential, ShortTimeIsQuadratic) {
    const auto s = free_evolution(1.0);
    for (double t : {1e-3, 1e-2}) {
        EXPECT_NEAR(gp_exponential(s, 3.0, t) / (3.0 * t * t / 4.0), 1.0, 3.0 * t);
    }
}

TEST(GpExponential, MatchesPiecewiseIntegral) {
    for (int n : {1, 4, 20, 40}) {
        for (double gamma : {0.5, 1.0, 10.0}) {
            const auto s = single_layer_udd(n, 5.0);
            for (double t : {0.3, 1.7, 2.5, 5.0}) {
                EXPECT_NEAR(gp_exponential(s, gamma, t), gp_piecewise(s, gamma, t), 1e-12) << n << " " << gamma;
                EXPECT_GE(gp_exponential(s, gamma, t), 0.0);
            }
        }
    }
}

TEST(GpExponential, MorePulsesProtectBetter) {
    for (double gamma : {1.0, 5.0}) {
        const double g0 = gp_exponential(single_layer_udd(0, 5.0), gamma, 5.0);
        const double g20 = gp_exponential(single_layer_udd(20, 5.0), gamma, 5.0);
        const double g40 = gp_exponential(single_layer_udd(40, 5.0), gamma, 5.0);
        EXPECT_GT(g0, g20);
        EXPECT_GT(g20, g40);
    }
}

TEST(GpExponential, RejectsBadGamma) {
    EXPECT_THROW(gp_exponential(free_evolution(1.0), 0.0, 0.5), InvalidArgument);
}

TEST(SignIntegral, AlternatesAcrossPulses) {
    const auto s = single_layer_udd(1, 2.0);
    EXPECT_NEAR(sign_integral(s, 1.0), 1.0, 1e-15);
    EXPECT_NEAR(sign_integral(s, 2.0), 0.0, 1e-15);
    EXPECT_NEAR(sign_integral(s, 1.5), 0.5, 1e-15);
}

TEST(DephasingAnalytic, PopulationsPreservedAndCoherencesDecay) {
    const auto s = single_layer_udd(20, 5.0);
    const std::vector<double> times = linspace(0.0, 5.0, 21);
    const auto r = dephasing_analytic(s, 1.0, 1.0, equal_density(), times);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double G = gp_piecewise(s, 1.0, times[i]);
        for (int k = 0; k < 3; ++k) {
            EXPECT_NEAR(r.rho[i](k, k).real(), 1.0 / 3.0, 1e-15);
        }
        EXPECT_NEAR(std::abs(r.rho[i](0, 1)), std::exp(-G) / 3.0, 1e-12);
        EXPECT_NEAR(std::abs(r.rho[i](1, 2)), std::exp(-G) / 3.0, 1e-12);
        EXPECT_NEAR(std::abs(r.rho[i](0, 2)), std::exp(-4.0 * G) / 3.0, 1e-12);
        EXPECT_TRUE(r.rho[i].isApprox(r.rho[i].adjoint(), 1e-14));
    }
}

TEST(DephasingAnalytic, PhaseFollowsSignIntegral) {
    const auto s = single_layer_udd(3, 2.0);
    const std::vector<double> times{0.4, 1.3};
    const auto r = dephasing_analytic(s, 2.0, 1.0, equal_density(), times);
    for (std::size_t i = 0; i < times.size(); ++i) {
        // rho_02 rotates by exp(2 i omega theta) with J_z = diag(-1, 0, 1)
        const Complex u = r.rho[i](0, 2) / std::abs(r.rho[i](0, 2));
        const double th = sign_integral(s, times[i]);
        EXPECT_NEAR(std::abs(u - std::exp(Complex(0.0, 4.0 * th))), 0.0, 1e-12);
    }
}

TEST(DephasingAnalytic, FidelityOrderingWithPulseCount) {
    const std::vector<double> T{5.0};
    auto fid = [&](int n) {
        const auto r = dephasing_analytic(single_layer_udd(n, 5.0), 1.0, 1.0, equal_density(), T);
        const Vector3 v = equal_superposition();
        return (v.adjoint() * r.rho[0] * v)(0, 0).real();
    };
    EXPECT_GT(fid(40), fid(20));
    EXPECT_GT(fid(20), fid(0));
}

TEST(DephasingAnalytic, RejectsTimesOutsideRun) {
    const std::vector<double> bad{6.0};
    EXPECT_THROW(dephasing_analytic(free_evolution(5.0), 1.0, 1.0, equal_density(), bad), InvalidArgument);
}

TEST(KernelQuadrature, TabulatedExponentialMatchesClosedForm) {
    const auto s = single_layer_udd(4, 2.0);
    const std::vector<double> times{0.5, 1.0, 2.0};
    const auto kernel = tabulated_exponential(1.0, 1e-3, 2.0);
    QuadratureOptions opt;
    opt.tolerance = 1e-5;
    const auto q = dephasing_analytic(s, 1.0, kernel, equal_density(), times, opt);
    for (std::size_t i = 0; i < times.size(); ++i) {
        EXPECT_NEAR(q.gp[i], gp_piecewise(s, 1.0, times[i]), 1e-5);
    }
}

TEST(KernelQuadrature, ExponentialKindUsesClosedForm) {
    const auto s = single_layer_udd(4, 2.0);
    const std::vector<double> times{2.0};
    const auto q = dephasing_analytic(s, 1.0, NoiseKernel::ornstein_uhlenbeck(1.0), equal_density(), times);
    EXPECT_NEAR(q.gp[0], gp_piecewise(s, 1.0, 2.0), 1e-12);
}

TEST(KernelQuadrature, CoarseGridRaisesResolutionError) {
    const auto s = single_layer_udd(4, 2.0);
    const std::vector<double> times{2.0};
    QuadratureOptions opt;
    opt.steps_per_segment = 1;
    opt.max_step = 1.0;
    opt.tolerance = 1e-9;
    EXPECT_THROW(dephasing_analytic(s, 1.0, tabulated_exponential(5.0, 1e-3, 2.0), equal_density(), times, opt),
                 QuadratureResolution);
}

TEST(Lindblad, PopulationsMatchRateEquations) {
    const double r = 1.0;
    const std::vector<double> times{0.5, 1.0, 3.0};
    const auto res = lindblad_markov(1.0, equal_density(), times, r);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const double e = std::exp(-2.0 * r * t);
        const double p2 = e / 3.0;
        const double p1 = (1.0 / 3.0 + 2.0 * r * t / 3.0) * e;
        EXPECT_NEAR(res.rho[i](2, 2).real(), p2, 1e-8);
        EXPECT_NEAR(res.rho[i](1, 1).real(), p1, 1e-8);
        EXPECT_NEAR(res.rho[i](0, 0).real(), 1.0 - p1 - p2, 1e-8);
        EXPECT_NEAR(res.rho[i].trace().real(), 1.0, 1e-12);
    }
}

TEST(Lindblad, RelaxesToGroundState) {
    const std::vector<double> times{40.0};
    const auto res = lindblad_markov(1.0, equal_density(), times, 1.0);
    Matrix3 ground = Matrix3::Zero();
    ground(0, 0) = 1.0;
    EXPECT_NEAR((res.rho[0] - ground).norm(), 0.0, 1e-10);
}

TEST(Lindblad, RejectsBadInput) {
    const std::vector<double> times{1.0};
    EXPECT_THROW(lindblad_markov(1.0, equal_density(), times, 0.0), InvalidArgument);
    EXPECT_THROW(lindblad_markov(1.0, equal_density(), times, -1.0), InvalidArgument);
    const std::vector<double> back{1.0, 0.5};
    EXPECT_THROW(lindblad_markov(1.0, equal_density(), back, 1.0), InvalidArgument);
}

}  // namespace
}  // namespace nmqsd
