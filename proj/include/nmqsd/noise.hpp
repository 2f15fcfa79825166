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
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmqsd/csv.hpp"
#include "nmqsd/errors.hpp"

namespace nmqsd {

using Complex = std::complex<double>;

/// Two-time environment correlation alpha(t, s) = M[z_t z_s^*].
///
/// The exponential kind is the Ornstein-Uhlenbeck kernel
/// (gamma/2) exp(-gamma |t - s|). The tabulated kind is stationary,
/// alpha(t, s) = a(t - s), with a(tau) linearly interpolated from samples at
/// tau = k * lag_step for tau >= 0, a(-tau) = conj(a(tau)), and zero past the
/// last sample.
class NoiseKernel {
  public:
    enum class Kind { Exponential, Tabulated };

    static NoiseKernel ornstein_uhlenbeck(double gamma) {
        if (!(gamma > 0.0) || !std::isfinite(gamma)) {
            throw InvalidArgument("ornstein_uhlenbeck: gamma must be positive and finite");
        }
        NoiseKernel k;
        k.kind_ = Kind::Exponential;
        k.gamma_ = gamma;
        return k;
    }

    static NoiseKernel tabulated(double lag_step, std::vector<Complex> values) {
        if (!(lag_step > 0.0) || values.empty()) {
            throw InvalidArgument("tabulated kernel: need lag_step > 0 and at least one value");
        }
        if (std::abs(values.front().imag()) > 1e-12 * (1.0 + std::abs(values.front()))) {
            throw InvalidArgument("tabulated kernel: a(0) must be real");
        }
        NoiseKernel k;
        k.kind_ = Kind::Tabulated;
        k.lag_step_ = lag_step;
        k.table_ = std::move(values);
        return k;
    }

    Kind kind() const { return kind_; }
    double gamma() const { return gamma_; }

    Complex operator()(double t, double s) const {
        const double tau = t - s;
        if (kind_ == Kind::Exponential) {
            return {0.5 * gamma_ * std::exp(-gamma_ * std::abs(tau)), 0.0};
        }
        const Complex a = lookup(std::abs(tau));
        return tau >= 0.0 ? a : std::conj(a);
    }

  private:
    Complex lookup(double tau) const {
        const double x = tau / lag_step_;
        const double last = static_cast<double>(table_.size() - 1);
        if (x > last) {
            return {};
        }
        if (table_.size() == 1) {
            return table_.front();
        }
        const auto k = std::min(static_cast<std::size_t>(x), table_.size() - 2);
        const double w = x - static_cast<double>(k);
        return (1.0 - w) * table_[k] + w * table_[k + 1];
    }

    Kind kind_ = Kind::Exponential;
    double gamma_ = 1.0;
    double lag_step_ = 1.0;
    std::vector<Complex> table_;
};

/// One realization of the complex Gaussian process z_t on a time grid. The
/// QSD equations are driven by its conjugate z_t^*.
struct NoisePath {
    std::vector<double> grid;
    std::vector<Complex> z;
    std::uint64_t stream_id = 0;
};

/// Per-stream generator: the draw sequence is a pure function of
/// (master_seed, stream_id), whatever thread or order produces it.
class StreamRng {
  public:
    StreamRng(std::uint64_t master_seed, std::uint64_t stream_id) {
        std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                          static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                          0x51d7u};
        engine_.seed(seq);
    }

    double normal() { return normal_(engine_); }

    /// Circular complex normal with M[|xi|^2] = 1.
    Complex complex_normal() {
        const double re = normal();
        const double im = normal();
        return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
    }

  private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

inline void require_ascending(std::span<const double> grid, const char *who) {
    if (grid.empty()) {
        throw InvalidArgument(std::string(who) + ": empty grid");
    }
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (!(grid[i + 1] > grid[i])) {
            throw InvalidArgument(std::string(who) + ": grid must be strictly ascending");
        }
    }
}

/// Exact sampler for the Ornstein-Uhlenbeck kernel: z = x + i y with x, y
/// independent stationary OU processes of variance gamma/4 and rate gamma.
/// The start value is drawn from the stationary law and every step uses the
/// exact transition density, so the discrete samples carry no step-size bias.
inline NoisePath sample_ou_path(std::span<const double> grid, double gamma, std::uint64_t master_seed,
                                std::uint64_t stream_id) {
    require_ascending(grid, "sample_ou_path");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("sample_ou_path: gamma must be positive and finite");
    }
    NoisePath path;
    path.grid.assign(grid.begin(), grid.end());
    path.stream_id = stream_id;
    path.z.resize(grid.size());

    StreamRng rng(master_seed, stream_id);
    const double var = 0.25 * gamma;
    const double sd = std::sqrt(var);
    double x = sd * rng.normal();
    double y = sd * rng.normal();
    path.z[0] = {x, y};
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double h = grid[i] - grid[i - 1];
        const double decay = std::exp(-gamma * h);
        const double kick = std::sqrt(var * -std::expm1(-2.0 * gamma * h));
        x = x * decay + kick * rng.normal();
        y = y * decay + kick * rng.normal();
        path.z[i] = {x, y};
    }
    return path;
}

/// Samples a Gaussian process with an arbitrary Hermitian kernel by coloring
/// white noise with an LDL^* factor of the Gram matrix A_ij = alpha(t_i, t_j).
/// The factor is computed once; each sample costs O(n^2).
class GaussianProcessSampler {
  public:
    GaussianProcessSampler(std::span<const double> grid, const NoiseKernel &kernel, double pivot_tol = 1e-10)
        : grid_(grid.begin(), grid.end()) {
        require_ascending(grid, "sample_kernel_path");
        const auto n = static_cast<Eigen::Index>(grid.size());
        Eigen::MatrixXcd gram(n, n);
        double scale = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                gram(i, j) = kernel(grid_[static_cast<std::size_t>(i)], grid_[static_cast<std::size_t>(j)]);
            }
            scale = std::max(scale, std::abs(gram(i, i)));
        }
        const double herm = (gram - gram.adjoint()).cwiseAbs().maxCoeff();
        if (herm > pivot_tol * std::max(scale, 1.0)) {
            throw FactorizationFailure("kernel Gram matrix is not Hermitian");
        }
        if (scale == 0.0) {
            factor_ = Eigen::MatrixXcd::Zero(n, n);
            return;
        }
        Eigen::LDLT<Eigen::MatrixXcd> ldlt(gram);
        const Eigen::VectorXd d = ldlt.vectorD().real();
        if (d.minCoeff() < -pivot_tol * scale) {
            throw FactorizationFailure("kernel Gram matrix is not positive semidefinite (pivot " +
                                       std::to_string(d.minCoeff()) + ")");
        }
        Eigen::MatrixXcd l = ldlt.matrixL();
        for (Eigen::Index j = 0; j < n; ++j) {
            l.col(j) *= std::sqrt(std::max(d(j), 0.0));
        }
        // A = P^T L D L^* P  =>  z = P^T L sqrt(D) xi
        factor_ = ldlt.transpositionsP().transpose() * l;
    }

    NoisePath sample(std::uint64_t master_seed, std::uint64_t stream_id) const {
        const auto n = factor_.rows();
        Eigen::VectorXcd xi(n);
        StreamRng rng(master_seed, stream_id);
        for (Eigen::Index i = 0; i < n; ++i) {
            xi(i) = rng.complex_normal();
        }
        const Eigen::VectorXcd z = factor_ * xi;
        NoisePath path;
        path.grid = grid_;
        path.stream_id = stream_id;
        path.z.assign(z.data(), z.data() + n);
        return path;
    }

  private:
    std::vector<double> grid_;
    Eigen::MatrixXcd factor_;
};

inline NoisePath sample_kernel_path(std::span<const double> grid, const NoiseKernel &kernel,
                                    std::uint64_t master_seed, std::uint64_t stream_id) {
    return GaussianProcessSampler(grid, kernel).sample(master_seed, stream_id);
}

/// Worst normalized deviation of empirical noise moments from their targets.
/// A z-score is |empirical - target| / standard error, maximized over the real
/// and imaginary parts; a zero standard error with nonzero deviation is +inf.
struct NoiseStatisticsReport {
    std::size_t paths = 0;
    double covariance_z = 0.0;  ///< M[z_t z_s^*] against alpha(t, s)
    double pseudo_z = 0.0;      ///< M[z_t z_s] against 0
    double mean_z = 0.0;        ///< M[z_t] against 0
    struct LagRatio {
        std::size_t lag = 0;  ///< grid-index offset
        double max_z = 0.0;
    };
    /// M[z_t z_{t+tau}^*] / M[|z_t|^2] against alpha(t, t+tau) / alpha(t, t).
    std::vector<LagRatio> lag_ratio;

    double worst() const {
        double w = std::max({covariance_z, pseudo_z, mean_z});
        for (const auto &l : lag_ratio) {
            w = std::max(w, l.max_z);
        }
        return w;
    }
    bool passed(double threshold) const { return worst() < threshold; }
};

/// Streaming accumulator for validate_statistics: paths are folded in one at a
/// time so large ensembles never need to be held in memory. Moments are taken
/// over all index pairs (i, i + lag) for the configured lags.
class NoiseMomentAccumulator {
  public:
    NoiseMomentAccumulator(std::vector<double> grid, std::vector<std::size_t> lags)
        : grid_(std::move(grid)), lags_(std::move(lags)) {
        const std::size_t n = grid_.size();
        for (std::size_t lag : lags_) {
            if (lag >= n) {
                throw InvalidArgument("NoiseMomentAccumulator: lag exceeds grid");
            }
            pairs_.emplace_back(n - lag);
        }
        means_.resize(n);
    }

    const std::vector<double> &grid() const { return grid_; }
    std::size_t count() const { return count_; }

    void add(const NoisePath &path) {
        if (path.grid.size() != grid_.size() || path.grid != grid_) {
            throw InvalidArgument("validate_statistics: paths on mismatched grids");
        }
        const auto &z = path.z;
        for (std::size_t i = 0; i < z.size(); ++i) {
            means_[i].add(z[i]);
        }
        for (std::size_t l = 0; l < lags_.size(); ++l) {
            const std::size_t lag = lags_[l];
            auto &row = pairs_[l];
            for (std::size_t i = 0; i + lag < z.size(); ++i) {
                const Complex a = z[i];
                const Complex b = z[i + lag];
                row[i].add(a * std::conj(b), a * b, std::norm(a));
            }
        }
        ++count_;
    }

    NoiseStatisticsReport report(const NoiseKernel &kernel) const {
        NoiseStatisticsReport r;
        r.paths = count_;
        const double n = static_cast<double>(count_);
        for (const auto &m : means_) {
            r.mean_z = std::max(r.mean_z, m.zscore(n, Complex{}));
        }
        for (std::size_t l = 0; l < lags_.size(); ++l) {
            const std::size_t lag = lags_[l];
            NoiseStatisticsReport::LagRatio lr{lag, 0.0};
            for (std::size_t i = 0; i + lag < grid_.size(); ++i) {
                const auto &p = pairs_[l][i];
                const Complex target = kernel(grid_[i], grid_[i + lag]);
                r.covariance_z = std::max(r.covariance_z, p.cov.zscore(n, target));
                r.pseudo_z = std::max(r.pseudo_z, p.pseudo.zscore(n, Complex{}));
                const Complex equal = kernel(grid_[i], grid_[i]);
                if (lag > 0 && std::abs(equal) > 0.0) {
                    lr.max_z = std::max(lr.max_z, p.ratio_zscore(n, target / equal));
                }
            }
            if (lag > 0) {
                r.lag_ratio.push_back(lr);
            }
        }
        return r;
    }

  private:
    static double zscore_of(double diff, double var_of_mean) {
        if (var_of_mean <= 0.0) {
            return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        }
        return std::abs(diff) / std::sqrt(var_of_mean);
    }

    struct ComplexMoment {
        double sr = 0.0, si = 0.0, srr = 0.0, sii = 0.0;
        void add(Complex v) {
            sr += v.real();
            si += v.imag();
            srr += v.real() * v.real();
            sii += v.imag() * v.imag();
        }
        double zscore(double n, Complex target) const {
            const double mr = sr / n;
            const double mi = si / n;
            const double vr = std::max(srr / n - mr * mr, 0.0) * n / (n - 1.0);
            const double vi = std::max(sii / n - mi * mi, 0.0) * n / (n - 1.0);
            return std::max(zscore_of(mr - target.real(), vr / n), zscore_of(mi - target.imag(), vi / n));
        }
    };

    struct PairMoment {
        ComplexMoment cov;
        ComplexMoment pseudo;
        double sb = 0.0, sbb = 0.0, scrb = 0.0, scib = 0.0;
        void add(Complex c, Complex d, double b) {
            cov.add(c);
            pseudo.add(d);
            sb += b;
            sbb += b * b;
            scrb += c.real() * b;
            scib += c.imag() * b;
        }
        // delta-method error of R = M[c] / M[b]
        double ratio_zscore(double n, Complex target) const {
            const double mb = sb / n;
            if (!(mb > 0.0)) {
                return std::numeric_limits<double>::infinity();
            }
            const double mr = cov.sr / n;
            const double mi = cov.si / n;
            const double rr = mr / mb;
            const double ri = mi / mb;
            const double vb = sbb / n - mb * mb;
            const double vcr = cov.srr / n - mr * mr;
            const double vci = cov.sii / n - mi * mi;
            const double ccrb = scrb / n - mr * mb;
            const double ccib = scib / n - mi * mb;
            const double bessel = n / (n - 1.0);
            const double var_r = std::max(vcr - 2.0 * rr * ccrb + rr * rr * vb, 0.0) * bessel / (n * mb * mb);
            const double var_i = std::max(vci - 2.0 * ri * ccib + ri * ri * vb, 0.0) * bessel / (n * mb * mb);
            return std::max(zscore_of(rr - target.real(), var_r), zscore_of(ri - target.imag(), var_i));
        }
    };

    std::vector<double> grid_;
    std::vector<std::size_t> lags_;
    std::vector<std::vector<PairMoment>> pairs_;
    std::vector<ComplexMoment> means_;
    std::size_t count_ = 0;
};

/// Lags used when none are given: the full Gram matrix on small grids, a
/// spread of offsets otherwise.
inline std::vector<std::size_t> default_lags(std::size_t grid_size) {
    std::vector<std::size_t> lags;
    if (grid_size <= 64) {
        for (std::size_t k = 0; k < grid_size; ++k) {
            lags.push_back(k);
        }
        return lags;
    }
    for (std::size_t k : {0, 1, 2, 5, 10, 20, 50, 100, 200}) {
        if (k < grid_size) {
            lags.push_back(k);
        }
    }
    return lags;
}

inline NoiseStatisticsReport validate_statistics(std::span<const NoisePath> paths, const NoiseKernel &kernel,
                                                 std::vector<std::size_t> lags = {}) {
    if (paths.size() < 100) {
        throw InvalidArgument("validate_statistics: need at least 100 paths");
    }
    if (lags.empty()) {
        lags = default_lags(paths.front().grid.size());
    }
    NoiseMomentAccumulator acc(paths.front().grid, std::move(lags));
    for (const auto &p : paths) {
        acc.add(p);
    }
    return acc.report(kernel);
}

/// Debug dump: columns t, re_z, im_z.
inline void write_noise_csv(const NoisePath &path, const std::string &file) {
    CsvWriter csv(file, {"t", "re_z", "im_z"});
    for (std::size_t i = 0; i < path.z.size(); ++i) {
        csv.row({path.grid[i], path.z[i].real(), path.z[i].imag()});
    }
    csv.close();
}

}  // namespace nmqsd
