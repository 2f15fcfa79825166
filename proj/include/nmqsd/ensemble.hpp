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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "nmqsd/coefficients.hpp"
#include "nmqsd/errors.hpp"
#include "nmqsd/model.hpp"
#include "nmqsd/noise.hpp"
#include "nmqsd/pulse_schedule.hpp"
#include "nmqsd/spin1.hpp"
#include "nmqsd/trajectory.hpp"

namespace nmqsd {

using Vector9 = Eigen::Matrix<double, 9, 1>;
using Matrix9 = Eigen::Matrix<double, 9, 9>;

// ---------------------------------------------------------------------------
// initial states

struct InitialStateSpec {
    enum class Kind { Pure, Werner };

    Kind kind = Kind::Pure;
    Vector3 amplitudes = Vector3(1.0, 0.0, 0.0);
    double mixing = 1.0;

    static InitialStateSpec pure(const Vector3 &psi) {
        require_unit_norm(psi);
        InitialStateSpec s;
        s.amplitudes = psi;
        return s;
    }

    /// rho0 = ((1 - M)/2) I + ((3M - 1)/2) |psi0><psi0|, M in [1/3, 1].
    static InitialStateSpec werner(double mixing, const Vector3 &psi0) {
        require_unit_norm(psi0);
        if (!(mixing >= 1.0 / 3.0 - 1e-12 && mixing <= 1.0 + 1e-12)) {
            throw InvalidArgument("werner mixing degree must lie in [1/3, 1]");
        }
        InitialStateSpec s;
        s.kind = Kind::Werner;
        s.amplitudes = psi0;
        s.mixing = std::clamp(mixing, 1.0 / 3.0, 1.0);
        return s;
    }

    Matrix3 density() const {
        const Matrix3 pure_part = amplitudes * amplitudes.adjoint();
        if (kind == Kind::Pure) {
            return pure_part;
        }
        return 0.5 * (1.0 - mixing) * Matrix3::Identity() + 0.5 * (3.0 * mixing - 1.0) * pure_part;
    }
};

struct WeightedState {
    double weight = 0.0;
    Vector3 psi;
};

/// Orthonormal eigen-components of rho0, weights descending. Degenerate
/// eigenspaces are spanned by Gram-Schmidt on the projected basis vectors in
/// index order; zero weights are dropped.
inline std::vector<WeightedState> decompose_initial(const InitialStateSpec &init) {
    if (init.kind == InitialStateSpec::Kind::Pure) {
        return {{1.0, init.amplitudes}};
    }
    std::vector<WeightedState> out;
    const double M = init.mixing;
    const double rest = 0.5 * (1.0 - M);
    std::vector<Vector3> basis;
    if (std::abs(M - rest) > 1e-12) {
        out.push_back({M, init.amplitudes});
        basis.push_back(init.amplitudes);
    }
    if (rest <= 1e-12) {
        return out;
    }
    const double w = basis.empty() ? 1.0 / 3.0 : rest;
    for (int j = 0; j < 3 && basis.size() < 3; ++j) {
        Vector3 v = Vector3::Unit(j);
        for (const auto &b : basis) {
            v -= b * b.dot(v);
        }
        const double nv = v.norm();
        if (nv < 1e-8) {
            continue;
        }
        v /= nv;
        basis.push_back(v);
        out.push_back({w, v});
    }
    return out;
}

// ---------------------------------------------------------------------------
// density-matrix coordinates: (rho00, rho11, rho22, re/im rho01, rho02, rho12)

inline constexpr int kPairRow[3] = {0, 0, 1};
inline constexpr int kPairCol[3] = {1, 2, 2};

inline int coord_index(int m, int n, bool imag) {
    if (m == n) {
        return m;
    }
    const int a = std::min(m, n);
    const int b = std::max(m, n);
    const int pair = a == 0 ? (b == 1 ? 0 : 1) : 2;
    return 3 + 2 * pair + (imag ? 1 : 0);
}

inline Vector9 outer_coords(const Vector3 &psi) {
    Vector9 x;
    for (int m = 0; m < 3; ++m) {
        x(m) = std::norm(psi(m));
    }
    for (int p = 0; p < 3; ++p) {
        const Complex v = psi(kPairRow[p]) * std::conj(psi(kPairCol[p]));
        x(3 + 2 * p) = v.real();
        x(4 + 2 * p) = v.imag();
    }
    return x;
}

inline Vector9 density_coords(const Matrix3 &rho) {
    Vector9 x;
    for (int m = 0; m < 3; ++m) {
        x(m) = rho(m, m).real();
    }
    for (int p = 0; p < 3; ++p) {
        const Complex v = rho(kPairRow[p], kPairCol[p]);
        x(3 + 2 * p) = v.real();
        x(4 + 2 * p) = v.imag();
    }
    return x;
}

inline Matrix3 coords_density(const Vector9 &x) {
    Matrix3 rho = Matrix3::Zero();
    for (int m = 0; m < 3; ++m) {
        rho(m, m) = x(m);
    }
    for (int p = 0; p < 3; ++p) {
        const Complex v{x(3 + 2 * p), x(4 + 2 * p)};
        rho(kPairRow[p], kPairCol[p]) = v;
        rho(kPairCol[p], kPairRow[p]) = std::conj(v);
    }
    return rho;
}

/// Gradient of Tr(rho O) with respect to the coordinates, O Hermitian.
inline Vector9 linear_gradient(const Matrix3 &O) {
    Vector9 g;
    for (int m = 0; m < 3; ++m) {
        g(m) = O(m, m).real();
    }
    for (int p = 0; p < 3; ++p) {
        const Complex o = O(kPairCol[p], kPairRow[p]);
        g(3 + 2 * p) = 2.0 * o.real();
        g(4 + 2 * p) = -2.0 * o.imag();
    }
    return g;
}

/// Running mean and co-moment of the coordinates (Welford, Chan merge).
struct Moments9 {
    double n = 0.0;
    Vector9 mean = Vector9::Zero();
    Matrix9 m2 = Matrix9::Zero();

    void add(const Vector9 &x) {
        n += 1.0;
        const Vector9 d = x - mean;
        mean += d / n;
        m2.noalias() += d * (x - mean).transpose();
    }

    void merge(const Moments9 &o) {
        if (o.n == 0.0) {
            return;
        }
        if (n == 0.0) {
            *this = o;
            return;
        }
        const double tot = n + o.n;
        const Vector9 d = o.mean - mean;
        mean += d * (o.n / tot);
        m2 += o.m2 + d * d.transpose() * (n * o.n / tot);
        n = tot;
    }

    /// Covariance of the sample mean.
    Matrix9 mean_covariance() const {
        if (n < 2.0) {
            return Matrix9::Zero();
        }
        const Matrix9 c = m2 / ((n - 1.0) * n);
        return 0.5 * (c + c.transpose());
    }
};

// ---------------------------------------------------------------------------
// state functionals

enum class FidelityConvention { Squared, Root };
enum class Frame { Toggling, Lab };

inline const char *to_string(FidelityConvention c) { return c == FidelityConvention::Squared ? "squared" : "root"; }
inline const char *to_string(Frame f) { return f == Frame::Toggling ? "toggling" : "lab"; }

inline void require_hermitian(const Matrix3 &rho, const char *who) {
    const double scale = std::max(1.0, max_abs(rho));
    if (max_abs(rho - rho.adjoint()) > 1e-8 * scale) {
        throw InvalidArgument(std::string(who) + ": matrix is not Hermitian");
    }
}

/// Square root of a Hermitian matrix with negative eigenvalues clamped to 0.
inline Matrix3 psd_sqrt(const Matrix3 &rho) {
    const Matrix3 h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix3> es(h);
    const Eigen::Vector3d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

/// Uhlmann fidelity (Tr sqrt(sqrt(ref) rho sqrt(ref)))^2, or its root.
inline double fidelity(const Matrix3 &ref, const Matrix3 &rho,
                       FidelityConvention convention = FidelityConvention::Squared) {
    require_hermitian(ref, "fidelity");
    require_hermitian(rho, "fidelity");
    // rank-one argument: (Tr sqrt(...))^2 = lambda <v|other|v>
    auto rank_one = [](const Matrix3 &a, const Matrix3 &b, double &out) {
        Eigen::SelfAdjointEigenSolver<Matrix3> es(0.5 * (a + a.adjoint()));
        const Eigen::Vector3d ev = es.eigenvalues();
        if (!(ev(2) > 0.0) || std::abs(ev(1)) > 1e-12 * ev(2) || std::abs(ev(0)) > 1e-12 * ev(2)) {
            return false;
        }
        const Vector3 v = es.eigenvectors().col(2);
        out = std::max(0.0, ev(2) * v.dot(b * v).real());
        return true;
    };
    double sq = 0.0;
    if (rank_one(ref, rho, sq) || rank_one(rho, ref, sq)) {
        return convention == FidelityConvention::Squared ? sq : std::sqrt(sq);
    }
    const Matrix3 s = psd_sqrt(ref);
    const Matrix3 m = s * (0.5 * (rho + rho.adjoint())) * s;
    Eigen::SelfAdjointEigenSolver<Matrix3> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    const double root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return convention == FidelityConvention::Squared ? root * root : root;
}

struct Expectations {
    double jx = 0.0;
    double jy = 0.0;
    double jz = 0.0;
};

inline double real_trace_product(const Matrix3 &rho, const Matrix3 &op) {
    const Complex v = (rho * op).trace();
    if (std::abs(v.imag()) > 1e-9 * std::max(1.0, max_abs(rho))) {
        throw InvalidArgument("expectation value has a non-negligible imaginary part");
    }
    return v.real();
}

inline Expectations expectations(const Matrix3 &rho, const OperatorSet &ops = spin1_operators()) {
    require_hermitian(rho, "expectations");
    return {real_trace_product(rho, ops.jx), real_trace_product(rho, ops.jy), real_trace_product(rho, ops.jz)};
}

inline double trace_distance(const Matrix3 &a, const Matrix3 &b) {
    const Matrix3 d = a - b;
    Eigen::SelfAdjointEigenSolver<Matrix3> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double min_eigenvalue(const Matrix3 &rho) {
    Eigen::SelfAdjointEigenSolver<Matrix3> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

/// Accumulated pulse unitary P^a Q^b with a, b the pulses applied up to t.
inline Matrix3 pulse_frame(const PulseSchedule &schedule, double t, const OperatorSet &ops = spin1_operators()) {
    auto count = [t](const std::vector<double> &v) {
        return static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), t) - v.begin());
    };
    Matrix3 V = Matrix3::Identity();
    if (count(schedule.outer_times) % 2 == 1) {
        V = ops.p_op * V;
    }
    if (count(schedule.inner_times) % 2 == 1) {
        V = V * ops.q_op;
    }
    return V;
}

/// Linear map on coordinates induced by rho -> V rho V^dagger.
inline Matrix9 conjugation_map(const Matrix3 &V) {
    Matrix9 T;
    for (int j = 0; j < 9; ++j) {
        const Matrix3 e = coords_density(Vector9::Unit(j));
        T.col(j) = density_coords(V * e * V.adjoint());
    }
    return T;
}

// ---------------------------------------------------------------------------
// ensemble

struct DensitySeries {
    std::vector<double> times;
    std::vector<Matrix3> rho;
    std::vector<Matrix9> covariance;  // of the mean, in coordinates
    std::size_t trajectories = 0;     // per component
    std::vector<double> component_weights;

    std::vector<double> fidelity;
    std::vector<double> fidelity_stderr;
    std::vector<double> jx, jy, jz;
    std::vector<double> jx_stderr, jy_stderr, jz_stderr;
    std::vector<double> trace;
    std::vector<double> trace_stderr;

    std::vector<double> min_eigenvalue;
    double positivity_tol = 0.0;
    std::vector<std::size_t> positivity_violations;  // time indices

    std::size_t size() const { return times.size(); }

    /// Standard error of entry (m, n): sqrt(var re + var im) off the diagonal.
    double entry_stderr(std::size_t i, int m, int n) const {
        const Matrix9 &c = covariance[i];
        if (m == n) {
            return std::sqrt(std::max(0.0, c(m, m)));
        }
        const int a = coord_index(m, n, false);
        return std::sqrt(std::max(0.0, c(a, a) + c(a + 1, a + 1)));
    }

    double linear_stderr(std::size_t i, const Vector9 &g) const {
        return std::sqrt(std::max(0.0, g.dot(covariance[i] * g)));
    }
};

struct EnsembleOptions {
    std::size_t trajectories = 2000;
    std::uint64_t master_seed = 0;
    std::vector<double> output_times;  // empty: 200 evenly spaced over [0, T]
    int steps_per_segment = kDefaultStepsPerSegment;
    double max_step = 0.0;  // <= 0: default_max_step(gamma, T)
    unsigned threads = 0;   // 0: hardware concurrency
    bool deterministic = false;
    std::size_t chunk_size = 32;
    FidelityConvention fidelity = FidelityConvention::Squared;
    Frame frame = Frame::Toggling;
    bool normalize_trace = false;
    double positivity_tol = -1.0;  // < 0: 1e-2 / sqrt(n)
};

inline constexpr std::size_t kDefaultOutputTimes = 200;

struct RunGrid {
    std::vector<double> nodes;
    std::vector<double> stages;
    std::vector<double> output_times;
    std::vector<std::size_t> output_nodes;
    double max_step = 0.0;
};

inline RunGrid make_run_grid(const ModelParams &params, const PulseSchedule &schedule,
                             const EnsembleOptions &opt) {
    if (!(schedule.total_time > 0.0) || !std::isfinite(schedule.total_time)) {
        throw InvalidArgument("total time must be positive and finite");
    }
    detail::require_gamma(params.gamma);
    RunGrid g;
    g.max_step = opt.max_step > 0.0 ? opt.max_step : default_max_step(params.gamma, schedule.total_time);
    std::vector<double> out =
        opt.output_times.empty() ? linspace(0.0, schedule.total_time, kDefaultOutputTimes) : opt.output_times;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(out[i] >= 0.0 && out[i] <= schedule.total_time * (1.0 + 1e-12))) {
            throw InvalidArgument("output times must lie in [0, T]");
        }
        if (i > 0 && !(out[i] > out[i - 1])) {
            throw InvalidArgument("output times must be strictly ascending");
        }
    }
    g.nodes = segment_grid(schedule, opt.steps_per_segment, g.max_step, out);
    g.stages = stage_grid(g.nodes);
    g.output_nodes = output_indices(g.nodes, out);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = g.nodes[g.output_nodes[i]];
    }
    g.output_times = std::move(out);
    return g;
}

inline CoefficientTables solve_tables(const ModelParams &params, const PulseSchedule &schedule,
                                      std::span<const double> stages) {
    return params.model == Model::Dephasing ? solve_F_dephasing(schedule, params.gamma, stages, params.omega)
                                            : solve_Fi_dissipative(schedule, params.omega, params.gamma, stages);
}

namespace detail {

using MomentSeries = std::vector<Moments9>;

inline void merge_into(MomentSeries &a, const MomentSeries &b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i].merge(b[i]);
    }
}

/// Pairwise merge in index order; the result depends only on the chunking.
inline MomentSeries tree_merge(std::vector<MomentSeries> parts) {
    while (parts.size() > 1) {
        std::vector<MomentSeries> next;
        for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
            merge_into(parts[i], parts[i + 1]);
            next.push_back(std::move(parts[i]));
        }
        if (parts.size() % 2 == 1) {
            next.push_back(std::move(parts.back()));
        }
        parts = std::move(next);
    }
    return std::move(parts.front());
}

struct Task {
    std::size_t component;
    std::size_t first;
    std::size_t count;
};

}  // namespace detail

/// Fills the derived series from rho and covariance (already in the
/// reporting frame).
inline void derive_observables(DensitySeries &s, const Matrix3 &reference, FidelityConvention convention,
                               const OperatorSet &ops = spin1_operators()) {
    const std::size_t n = s.size();
    s.fidelity.assign(n, 0.0);
    s.fidelity_stderr.assign(n, 0.0);
    s.jx.assign(n, 0.0);
    s.jy.assign(n, 0.0);
    s.jz.assign(n, 0.0);
    s.jx_stderr.assign(n, 0.0);
    s.jy_stderr.assign(n, 0.0);
    s.jz_stderr.assign(n, 0.0);
    s.trace.assign(n, 0.0);
    s.trace_stderr.assign(n, 0.0);
    s.min_eigenvalue.assign(n, 0.0);
    s.positivity_violations.clear();

    Eigen::SelfAdjointEigenSolver<Matrix3> ref_es(0.5 * (reference + reference.adjoint()));
    const bool pure_ref = ref_es.eigenvalues()(2) > 1.0 - 1e-12 && std::abs(ref_es.eigenvalues()(1)) < 1e-12;
    const Vector3 ref_vec = ref_es.eigenvectors().col(2);
    const Vector9 g_trace = linear_gradient(Matrix3::Identity());
    const Vector9 g_jx = linear_gradient(ops.jx);
    const Vector9 g_jy = linear_gradient(ops.jy);
    const Vector9 g_jz = linear_gradient(ops.jz);

    for (std::size_t i = 0; i < n; ++i) {
        const Matrix3 &rho = s.rho[i];
        const auto e = expectations(rho, ops);
        s.jx[i] = e.jx;
        s.jy[i] = e.jy;
        s.jz[i] = e.jz;
        s.jx_stderr[i] = s.linear_stderr(i, g_jx);
        s.jy_stderr[i] = s.linear_stderr(i, g_jy);
        s.jz_stderr[i] = s.linear_stderr(i, g_jz);
        s.trace[i] = rho.trace().real();
        s.trace_stderr[i] = s.linear_stderr(i, g_trace);

        const double f = fidelity(reference, rho, convention);
        s.fidelity[i] = f;
        Vector9 g;
        if (pure_ref) {
            g = linear_gradient(ref_vec * ref_vec.adjoint());
            if (convention == FidelityConvention::Root) {
                g = f > 0.0 ? Vector9(g / (2.0 * f)) : Vector9::Zero();
            }
        } else {
            const Vector9 x = density_coords(rho);
            const double d = 1e-6;
            for (int j = 0; j < 9; ++j) {
                const Vector9 up = x + d * Vector9::Unit(j);
                const Vector9 dn = x - d * Vector9::Unit(j);
                g(j) = (fidelity(reference, coords_density(up), convention) -
                        fidelity(reference, coords_density(dn), convention)) /
                       (2.0 * d);
            }
        }
        s.fidelity_stderr[i] = s.linear_stderr(i, g);

        s.min_eigenvalue[i] = min_eigenvalue(rho);
        if (s.min_eigenvalue[i] < -s.positivity_tol) {
            s.positivity_violations.push_back(i);
        }
    }
}

/// Moves rho and its covariance to the reporting frame and optionally
/// divides by the trace (plotting aid; stderrs scale by 1/trace).
inline void transform_series(DensitySeries &s, const PulseSchedule &schedule, Frame frame, bool normalize_trace) {
    const std::size_t n_out = s.size();
    if (frame == Frame::Lab) {
        for (std::size_t k = 0; k < n_out; ++k) {
            const Matrix3 V = pulse_frame(schedule, s.times[k]);
            const Matrix9 T = conjugation_map(V);
            s.rho[k] = coords_density(T * density_coords(s.rho[k]));
            s.covariance[k] = T * s.covariance[k] * T.transpose();
        }
    }
    if (normalize_trace) {
        for (std::size_t k = 0; k < n_out; ++k) {
            const double tr = s.rho[k].trace().real();
            if (tr > 0.0) {
                s.rho[k] /= tr;
                s.covariance[k] /= tr * tr;
            }
        }
    }
}

/// Series with zero covariance, e.g. from an oracle.
inline DensitySeries series_from_states(std::vector<double> times, std::vector<Matrix3> rho) {
    DensitySeries s;
    s.times = std::move(times);
    s.rho = std::move(rho);
    s.covariance.assign(s.size(), Matrix9::Zero());
    return s;
}

/// Monte Carlo average of |psi><psi| over independent noise streams. Mixed
/// initial states run one sub-ensemble of n trajectories per eigen-component;
/// component c, trajectory i draws stream c n + i.
inline DensitySeries run_ensemble(const ModelParams &params, const PulseSchedule &schedule,
                                  const InitialStateSpec &init, const EnsembleOptions &opt) {
    if (opt.trajectories < 2) {
        throw InvalidArgument("need at least two trajectories");
    }
    if (opt.chunk_size == 0) {
        throw InvalidArgument("chunk size must be positive");
    }
    const RunGrid grid = make_run_grid(params, schedule, opt);
    const CoefficientTables tables = solve_tables(params, schedule, grid.stages);
    const EvolutionPlan plan(params, schedule, grid.nodes, tables);
    const auto components = decompose_initial(init);
    const std::size_t n = opt.trajectories;
    const std::size_t n_out = grid.output_times.size();

    std::vector<detail::Task> tasks;
    for (std::size_t c = 0; c < components.size(); ++c) {
        for (std::size_t first = 0; first < n; first += opt.chunk_size) {
            tasks.push_back({c, first, std::min(opt.chunk_size, n - first)});
        }
    }
    std::vector<detail::MomentSeries> results(tasks.size(), detail::MomentSeries(n_out));

    std::atomic<std::size_t> next_task{0};
    std::atomic<bool> stop{false};
    std::mutex fault_mutex;
    std::uint64_t fault_stream = std::numeric_limits<std::uint64_t>::max();
    std::exception_ptr fault;

    auto worker = [&]() {
        for (;;) {
            if (stop.load()) {
                return;
            }
            const std::size_t t = next_task.fetch_add(1);
            if (t >= tasks.size()) {
                return;
            }
            const auto &task = tasks[t];
            const Vector3 &psi0 = components[task.component].psi;
            for (std::size_t i = task.first; i < task.first + task.count; ++i) {
                const std::uint64_t stream = task.component * n + i;
                try {
                    const NoisePath noise = sample_ou_path(grid.stages, params.gamma, opt.master_seed, stream);
                    const auto states = integrate_trajectory(plan, noise, psi0, grid.output_nodes);
                    for (std::size_t k = 0; k < n_out; ++k) {
                        results[t][k].add(outer_coords(states[k].psi));
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(fault_mutex);
                    if (stream < fault_stream) {
                        fault_stream = stream;
                        fault = std::current_exception();
                    }
                    stop.store(true);
                    break;
                }
            }
        }
    };

    unsigned threads = opt.deterministic ? 1u : opt.threads;
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, tasks.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < threads; ++i) {
            pool.emplace_back(worker);
        }
        for (auto &th : pool) {
            th.join();
        }
    }
    if (fault) {
        std::rethrow_exception(fault);
    }

    DensitySeries s;
    s.times = grid.output_times;
    s.trajectories = n;
    s.rho.assign(n_out, Matrix3::Zero());
    s.covariance.assign(n_out, Matrix9::Zero());
    std::size_t t0 = 0;
    for (std::size_t c = 0; c < components.size(); ++c) {
        std::vector<detail::MomentSeries> parts;
        while (t0 < tasks.size() && tasks[t0].component == c) {
            parts.push_back(std::move(results[t0]));
            ++t0;
        }
        const auto merged = detail::tree_merge(std::move(parts));
        const double w = components[c].weight;
        s.component_weights.push_back(w);
        for (std::size_t k = 0; k < n_out; ++k) {
            s.rho[k] += w * coords_density(merged[k].mean);
            s.covariance[k] += (w * w) * merged[k].mean_covariance();
        }
    }

    transform_series(s, schedule, opt.frame, opt.normalize_trace);
    s.positivity_tol = opt.positivity_tol >= 0.0 ? opt.positivity_tol : 1e-2 / std::sqrt(static_cast<double>(n));
    derive_observables(s, init.density(), opt.fidelity);
    return s;
}

}  // namespace nmqsd
