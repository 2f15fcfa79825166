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
#include <random>

#include <gtest/gtest.h>

#include "nmqsd/ensemble.hpp"
#include "nmqsd/oracles.hpp"

namespace nmqsd {
namespace {

Vector3 equal_superposition() { return Vector3::Constant(Complex(1.0 / std::sqrt(3.0), 0.0)); }

Matrix3 projector(const Vector3 &v) { return v * v.adjoint(); }

Matrix3 random_density(std::mt19937_64 &rng) {
    std::normal_distribution<double> n;
    Matrix3 A;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            A(i, j) = Complex(n(rng), n(rng));
        }
    }
    const Matrix3 rho = A * A.adjoint();
    return rho / rho.trace().real();
}

EnsembleOptions small_options(std::size_t n, std::uint64_t seed) {
    EnsembleOptions o;
    o.trajectories = n;
    o.master_seed = seed;
    o.output_times = linspace(0.0, 1.0, 11);
    o.max_step = 5e-3;
    o.threads = 1;
    return o;
}

TEST(InitialState, PureHasSingleComponent) {
    const auto parts = decompose_initial(InitialStateSpec::pure(equal_superposition()));
    ASSERT_EQ(parts.size(), 1u);
    EXPECT_EQ(parts[0].weight, 1.0);
}

TEST(InitialState, WernerWithUnitMixingIsPure) {
    const auto parts = decompose_initial(InitialStateSpec::werner(1.0, equal_superposition()));
    ASSERT_EQ(parts.size(), 1u);
    EXPECT_NEAR((parts[0].psi - equal_superposition()).norm(), 0.0, 1e-15);
}

TEST(InitialState, MaximallyMixedUsesComputationalBasis) {
    const auto parts = decompose_initial(InitialStateSpec::werner(1.0 / 3.0, equal_superposition()));
    ASSERT_EQ(parts.size(), 3u);
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(parts[k].weight, 1.0 / 3.0, 1e-15);
        EXPECT_NEAR((parts[k].psi - Vector3::Unit(k)).norm(), 0.0, 1e-15);
    }
}

TEST(InitialState, DecompositionReconstructsDensity) {
    for (double M : {0.4, 0.6, 5.0 / 6.0}) {
        const auto spec = InitialStateSpec::werner(M, equal_superposition());
        const auto parts = decompose_initial(spec);
        ASSERT_EQ(parts.size(), 3u);
        Matrix3 rho = Matrix3::Zero();
        double total = 0.0;
        for (std::size_t a = 0; a < parts.size(); ++a) {
            rho += parts[a].weight * projector(parts[a].psi);
            total += parts[a].weight;
            for (std::size_t b = 0; b < parts.size(); ++b) {
                EXPECT_NEAR(std::abs(parts[a].psi.dot(parts[b].psi)), a == b ? 1.0 : 0.0, 1e-12);
            }
        }
        EXPECT_NEAR(total, 1.0, 1e-14);
        EXPECT_NEAR(parts[0].weight, M, 1e-15);
        EXPECT_NEAR((rho - spec.density()).norm(), 0.0, 1e-12);
        // Werner density written out independently
        const Matrix3 expect = (1.0 - M) / 2.0 * Matrix3::Identity() +
                               (3.0 * M - 1.0) / 2.0 * projector(equal_superposition());
        EXPECT_NEAR((rho - expect).norm(), 0.0, 1e-12);
    }
}

TEST(InitialState, RejectsBadInput) {
    EXPECT_THROW(InitialStateSpec::werner(0.2, equal_superposition()), InvalidArgument);
    EXPECT_THROW(InitialStateSpec::werner(1.1, equal_superposition()), InvalidArgument);
    EXPECT_THROW(InitialStateSpec::pure(Vector3(2.0, 0.0, 0.0)), InvalidArgument);
}

TEST(Coordinates, RoundTripAndOuterProduct) {
    std::mt19937_64 rng(1);
    for (int r = 0; r < 10; ++r) {
        const Matrix3 rho = random_density(rng);
        EXPECT_NEAR((coords_density(density_coords(rho)) - rho).norm(), 0.0, 1e-15);
    }
    const Vector3 psi(Complex(0.6, 0.0), Complex(0.0, 0.48), Complex(0.64, 0.0));
    EXPECT_NEAR((coords_density(outer_coords(psi)) - projector(psi)).norm(), 0.0, 1e-15);
    EXPECT_EQ(coord_index(2, 2, false), 2);
    EXPECT_EQ(coord_index(1, 0, true), coord_index(0, 1, true));
}

TEST(Coordinates, LinearGradientGivesTraceProduct) {
    std::mt19937_64 rng(2);
    const auto &ops = spin1_operators();
    for (const Matrix3 &O : {ops.jx, ops.jy, ops.jz, Matrix3(Matrix3::Identity())}) {
        for (int r = 0; r < 5; ++r) {
            const Matrix3 rho = random_density(rng);
            EXPECT_NEAR(linear_gradient(O).dot(density_coords(rho)), (rho * O).trace().real(), 1e-13);
        }
    }
}

TEST(Coordinates, ConjugationMapMatchesMatrixConjugation) {
    std::mt19937_64 rng(3);
    const auto &ops = spin1_operators();
    const Matrix3 V = ops.p_op * ops.q_op;
    const Matrix9 T = conjugation_map(V);
    for (int r = 0; r < 5; ++r) {
        const Matrix3 rho = random_density(rng);
        EXPECT_NEAR((coords_density(T * density_coords(rho)) - V * rho * V.adjoint()).norm(), 0.0, 1e-14);
    }
}

TEST(Moments, MergeEqualsSequential) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n;
    Moments9 all;
    Moments9 a;
    Moments9 b;
    for (int i = 0; i < 100; ++i) {
        Vector9 x;
        for (int j = 0; j < 9; ++j) {
            x(j) = n(rng) + j;
        }
        all.add(x);
        (i < 37 ? a : b).add(x);
    }
    a.merge(b);
    EXPECT_EQ(a.n, all.n);
    EXPECT_NEAR((a.mean - all.mean).norm(), 0.0, 1e-12);
    EXPECT_NEAR((a.m2 - all.m2).norm(), 0.0, 1e-10);
    EXPECT_NEAR((a.mean_covariance() - all.mean_covariance()).norm(), 0.0, 1e-12);
    Moments9 empty;
    empty.merge(all);
    EXPECT_EQ(empty.n, all.n);
}

TEST(Moments, MeanCovarianceOfKnownSample) {
    Moments9 m;
    for (double v : {1.0, 2.0, 3.0, 4.0}) {
        m.add(Vector9::Constant(v));
    }
    // sample variance 5/3, divided by n = 4
    EXPECT_NEAR(m.mean_covariance()(0, 0), 5.0 / 12.0, 1e-14);
    EXPECT_NEAR(m.mean(3), 2.5, 1e-15);
}

TEST(Functionals, FidelityExamples) {
    const Matrix3 a = projector(Vector3::Unit(0));
    const Matrix3 b = projector(Vector3::Unit(1));
    const Matrix3 mixed = Matrix3::Identity() / 3.0;
    EXPECT_NEAR(fidelity(a, a), 1.0, 1e-12);
    EXPECT_NEAR(fidelity(a, b), 0.0, 1e-12);
    EXPECT_NEAR(fidelity(a, mixed), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(fidelity(a, mixed, FidelityConvention::Root), std::sqrt(1.0 / 3.0), 1e-12);
    EXPECT_NEAR(fidelity(mixed, mixed), 1.0, 1e-12);
    std::mt19937_64 rng(5);
    for (int r = 0; r < 5; ++r) {
        const Matrix3 x = random_density(rng);
        const Matrix3 y = random_density(rng);
        EXPECT_NEAR(fidelity(x, y), fidelity(y, x), 1e-10);
        EXPECT_LE(fidelity(x, y), 1.0 + 1e-12);
        EXPECT_NEAR(fidelity(x, x), 1.0, 1e-10);
    }
}

TEST(Functionals, ExpectationsOfEqualSuperposition) {
    const auto e = expectations(projector(equal_superposition()));
    EXPECT_NEAR(e.jx, 2.0 * std::sqrt(2.0) / 3.0, 1e-14);
    EXPECT_NEAR(e.jy, 0.0, 1e-14);
    EXPECT_NEAR(e.jz, 0.0, 1e-14);
    const auto g = expectations(projector(Vector3::Unit(0)));
    EXPECT_NEAR(g.jz, -1.0, 1e-15);
}

TEST(Functionals, TraceDistanceAndEigenvalue) {
    const Matrix3 a = projector(Vector3::Unit(0));
    const Matrix3 b = projector(Vector3::Unit(2));
    EXPECT_NEAR(trace_distance(a, b), 1.0, 1e-14);
    EXPECT_NEAR(trace_distance(a, a), 0.0, 1e-14);
    EXPECT_NEAR(trace_distance(a, Matrix3::Identity() / 3.0), 2.0 / 3.0, 1e-14);
    Matrix3 neg = a;
    neg(2, 2) = -0.1;
    EXPECT_NEAR(min_eigenvalue(neg), -0.1, 1e-14);
}

TEST(Functionals, PulseFrameCounts) {
    const auto &ops = spin1_operators();
    const auto s = nested_udd_times(2, 1, 1.0);
    EXPECT_NEAR((pulse_frame(s, 0.0) - Matrix3::Identity()).norm(), 0.0, 1e-15);
    EXPECT_NEAR((pulse_frame(s, s.outer_times[0]) - ops.p_op).norm(), 0.0, 1e-15);
    EXPECT_NEAR((pulse_frame(s, s.inner_times[0]) - ops.p_op * ops.q_op).norm(), 0.0, 1e-15);
    EXPECT_NEAR((pulse_frame(s, 1.0) - ops.q_op).norm(), 0.0, 1e-15);
}

TEST(Observables, OracleSeriesHasExactReferenceFidelity) {
    const Matrix3 ref = projector(equal_superposition());
    auto s = series_from_states({0.0, 1.0}, {ref, Matrix3(Matrix3::Identity() / 3.0)});
    derive_observables(s, ref, FidelityConvention::Squared);
    EXPECT_NEAR(s.fidelity[0], 1.0, 1e-12);
    EXPECT_NEAR(s.fidelity[1], 1.0 / 3.0, 1e-12);
    EXPECT_EQ(s.fidelity_stderr[0], 0.0);
    EXPECT_NEAR(s.trace[1], 1.0, 1e-15);
}

class DephasingEnsemble : public ::testing::Test {
  protected:
    ModelParams params{Model::Dephasing, 1.0, 1.0};
    PulseSchedule schedule = single_layer_udd(2, 1.0);
    InitialStateSpec init = InitialStateSpec::pure(equal_superposition());
};

TEST_F(DephasingEnsemble, AgreesWithAnalyticOracle) {
    const auto s = run_ensemble(params, schedule, init, small_options(400, 11));
    const auto oracle = dephasing_analytic(schedule, 1.0, 1.0, init.density(), s.times);
    int beyond = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (int m = 0; m < 3; ++m) {
            for (int n = m; n < 3; ++n) {
                const double se = s.entry_stderr(i, m, n);
                const double d = std::abs(s.rho[i](m, n) - oracle.rho[i](m, n));
                if (se == 0.0) {
                    EXPECT_NEAR(d, 0.0, 1e-12);
                } else if (d > 3.0 * se) {
                    ++beyond;
                }
                EXPECT_LT(d, 5.0 * se + 1e-12);
            }
        }
    }
    EXPECT_LE(beyond, 3);
}

TEST_F(DephasingEnsemble, MiddlePopulationIsExact) {
    const auto s = run_ensemble(params, schedule, init, small_options(50, 12));
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(s.rho[i](1, 1).real(), 1.0 / 3.0, 1e-12);
    }
}

TEST_F(DephasingEnsemble, TraceWithinStandardErrors) {
    const auto s = run_ensemble(params, schedule, init, small_options(400, 13));
    EXPECT_NEAR(s.trace[0], 1.0, 1e-14);
    for (std::size_t i = 1; i < s.size(); ++i) {
        EXPECT_LT(std::abs(s.trace[i] - 1.0), 4.0 * s.trace_stderr[i]) << s.times[i];
        EXPECT_TRUE(s.rho[i].isApprox(s.rho[i].adjoint(), 1e-12));
    }
}

TEST_F(DephasingEnsemble, ThreadCountDoesNotChangeResult) {
    auto one = small_options(200, 14);
    auto many = one;
    many.threads = 3;
    const auto a = run_ensemble(params, schedule, init, one);
    const auto b = run_ensemble(params, schedule, init, many);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.rho[i], b.rho[i]);
        EXPECT_EQ(a.covariance[i], b.covariance[i]);
    }
    auto det = one;
    det.deterministic = true;
    det.threads = 4;
    const auto c = run_ensemble(params, schedule, init, det);
    EXPECT_EQ(a.rho.back(), c.rho.back());
}

TEST_F(DephasingEnsemble, SeedChangesResult) {
    const auto a = run_ensemble(params, schedule, init, small_options(50, 15));
    const auto b = run_ensemble(params, schedule, init, small_options(50, 16));
    EXPECT_NE(a.rho.back(), b.rho.back());
}

TEST_F(DephasingEnsemble, StandardErrorScalesWithInverseRootN) {
    const auto a = run_ensemble(params, schedule, init, small_options(256, 17));
    const auto b = run_ensemble(params, schedule, init, small_options(1024, 18));
    const double ra = a.entry_stderr(a.size() - 1, 0, 2);
    const double rb = b.entry_stderr(b.size() - 1, 0, 2);
    EXPECT_NEAR(ra / rb, 2.0, 0.3);
}

TEST_F(DephasingEnsemble, LabFrameIsPulseConjugation) {
    auto tog = small_options(64, 19);
    auto lab = tog;
    lab.frame = Frame::Lab;
    const auto a = run_ensemble(params, schedule, init, tog);
    const auto b = run_ensemble(params, schedule, init, lab);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Matrix3 V = pulse_frame(schedule, a.times[i]);
        EXPECT_NEAR((b.rho[i] - V * a.rho[i] * V.adjoint()).norm(), 0.0, 1e-14);
        EXPECT_NEAR(b.trace[i], a.trace[i], 1e-14);
        EXPECT_NEAR(b.trace_stderr[i], a.trace_stderr[i], 1e-12);
    }
}

TEST_F(DephasingEnsemble, NormalizedTraceIsOne) {
    auto o = small_options(64, 20);
    o.normalize_trace = true;
    const auto s = run_ensemble(params, schedule, init, o);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(s.trace[i], 1.0, 1e-13);
    }
}

TEST_F(DephasingEnsemble, RootFidelityIsSquareRoot) {
    auto sq = small_options(64, 21);
    auto rt = sq;
    rt.fidelity = FidelityConvention::Root;
    const auto a = run_ensemble(params, schedule, init, sq);
    const auto b = run_ensemble(params, schedule, init, rt);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.fidelity[i] > 0.0) {
            EXPECT_NEAR(b.fidelity[i], std::sqrt(a.fidelity[i]), 1e-12);
        }
    }
}

TEST_F(DephasingEnsemble, RejectsBadOptions) {
    auto o = small_options(1, 22);
    EXPECT_THROW(run_ensemble(params, schedule, init, o), InvalidArgument);
    o.trajectories = 10;
    o.chunk_size = 0;
    EXPECT_THROW(run_ensemble(params, schedule, init, o), InvalidArgument);
    o.chunk_size = 32;
    o.output_times = {0.5, 0.2};
    EXPECT_THROW(run_ensemble(params, schedule, init, o), InvalidArgument);
    o.output_times = {0.0, 2.0};
    EXPECT_THROW(run_ensemble(params, schedule, init, o), InvalidArgument);
}

TEST_F(DephasingEnsemble, DefaultOutputGrid) {
    auto o = small_options(4, 23);
    o.output_times.clear();
    const auto s = run_ensemble(params, schedule, init, o);
    EXPECT_EQ(s.size(), kDefaultOutputTimes);
    EXPECT_DOUBLE_EQ(s.times.back(), 1.0);
}

TEST(WernerEnsemble, HermitianWithCombinedWeights) {
    const ModelParams params{Model::Dissipative, 1.0, 1.0};
    const auto schedule = nested_udd_times(2, 2, 1.0);
    const auto init = InitialStateSpec::werner(0.6, equal_superposition());
    const auto s = run_ensemble(params, schedule, init, small_options(64, 24));
    ASSERT_EQ(s.component_weights.size(), 3u);
    EXPECT_NEAR(s.component_weights[0] + s.component_weights[1] + s.component_weights[2], 1.0, 1e-14);
    EXPECT_NEAR((s.rho[0] - init.density()).norm(), 0.0, 1e-12);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_TRUE(s.rho[i].isApprox(s.rho[i].adjoint(), 1e-12));
        EXPECT_GE(s.fidelity_stderr[i], 0.0);
        EXPECT_TRUE(std::isfinite(s.fidelity_stderr[i]));
    }
}

TEST(WernerEnsemble, MaximallyMixedDephasingStaysMixed) {
    const ModelParams params{Model::Dephasing, 1.0, 1.0};
    const auto schedule = free_evolution(1.0);
    const auto init = InitialStateSpec::werner(1.0 / 3.0, equal_superposition());
    const auto s = run_ensemble(params, schedule, init, small_options(200, 25));
    for (std::size_t i = 0; i < s.size(); ++i) {
        // dephasing keeps every basis state's population at 1 on average and has no coherences
        EXPECT_NEAR(std::abs(s.rho[i](0, 1)) + std::abs(s.rho[i](0, 2)) + std::abs(s.rho[i](1, 2)), 0.0, 1e-14);
        EXPECT_NEAR(s.rho[i](1, 1).real(), 1.0 / 3.0, 1e-12);
        EXPECT_LT(std::abs(s.fidelity[i] - 1.0), 4.0 * s.fidelity_stderr[i] + 1e-12);
    }
}

}  // namespace
}  // namespace nmqsd
