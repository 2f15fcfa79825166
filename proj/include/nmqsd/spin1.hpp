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
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmqsd/errors.hpp"

namespace nmqsd {

using Complex = std::complex<double>;
using Matrix3 = Eigen::Matrix3cd;
using Vector3 = Eigen::Vector3cd;

/// Spin-1 ladder operators and the two dynamical-decoupling controls.
///
/// Basis order is (|0>, |1>, |2>) with energies (-w, 0, +w), so jz is
/// diag(-1, 0, +1) and jminus lowers |2> -> |1> -> |0> with matrix elements
/// sqrt(2). p_op exchanges |0> and |2>; q_op = diag(1, -1, 1).
struct OperatorSet {
    Matrix3 jz;
    Matrix3 jplus;
    Matrix3 jminus;
    Matrix3 jx;
    Matrix3 jy;
    Matrix3 p_op;
    Matrix3 q_op;
    Matrix3 identity;
};

inline OperatorSet build_operator_set() {
    const double r2 = std::sqrt(2.0);
    OperatorSet ops;
    ops.identity = Matrix3::Identity();
    ops.jz = Matrix3::Zero();
    ops.jz(0, 0) = -1.0;
    ops.jz(2, 2) = 1.0;
    ops.jminus = Matrix3::Zero();
    ops.jminus(0, 1) = r2;
    ops.jminus(1, 2) = r2;
    ops.jplus = ops.jminus.adjoint();
    ops.jx = (ops.jplus + ops.jminus) / 2.0;
    ops.jy = (ops.jplus - ops.jminus) / Complex(0.0, 2.0);
    ops.p_op = Matrix3::Zero();
    ops.p_op(0, 2) = 1.0;
    ops.p_op(1, 1) = 1.0;
    ops.p_op(2, 0) = 1.0;
    ops.q_op = Matrix3::Zero();
    ops.q_op(0, 0) = 1.0;
    ops.q_op(1, 1) = -1.0;
    ops.q_op(2, 2) = 1.0;
    return ops;
}

/// Shared immutable instance; construction is cheap but callers on hot paths
/// should not rebuild it.
inline const OperatorSet &spin1_operators() {
    static const OperatorSet ops = build_operator_set();
    return ops;
}

inline Matrix3 commutator(const Matrix3 &a, const Matrix3 &b) { return a * b - b * a; }
inline Matrix3 anticommutator(const Matrix3 &a, const Matrix3 &b) { return a * b + b * a; }

/// Entrywise max-norm |m|_max.
inline double max_abs(const Matrix3 &m) { return m.cwiseAbs().maxCoeff(); }

struct AlgebraCheck {
    std::string identity;
    double deviation;
    bool passed;
};

struct AlgebraReport {
    std::vector<AlgebraCheck> checks;

    bool all_passed() const {
        for (const auto &c : checks) {
            if (!c.passed) {
                return false;
            }
        }
        return true;
    }

    const AlgebraCheck &find(const std::string &identity) const {
        for (const auto &c : checks) {
            if (c.identity == identity) {
                return c;
            }
        }
        throw InvalidArgument("no algebra check named " + identity);
    }
};

/// Evaluates the twelve control-algebra identities the toggling-frame
/// reduction relies on. A failing identity is a report entry, not an error.
/// tol = 0 demands exact equality.
inline AlgebraReport check_algebra(const OperatorSet &ops, double tol) {
    if (!(tol >= 0.0)) {
        throw InvalidArgument("check_algebra: tol must be non-negative");
    }
    const Matrix3 &I = ops.identity;
    const Matrix3 &P = ops.p_op;
    const Matrix3 &Q = ops.q_op;
    AlgebraReport report;
    auto add = [&](std::string name, const Matrix3 &residual) {
        const double dev = max_abs(residual);
        report.checks.push_back({std::move(name), dev, dev <= tol});
    };
    add("P^2=I", P * P - I);
    add("Q^2=I", Q * Q - I);
    add("{J_z,P}=0", anticommutator(ops.jz, P));
    add("{J_-,Q}=0", anticommutator(ops.jminus, Q));
    add("{J_+,Q}=0", anticommutator(ops.jplus, Q));
    add("[P,Q]=0", commutator(P, Q));
    add("[J_z,Q]=0", commutator(ops.jz, Q));
    add("[P,J_x]=0", commutator(P, ops.jx));
    add("[P,[P,J_y]]=4J_y", commutator(P, commutator(P, ops.jy)) - 4.0 * ops.jy);
    add("[P,[P,J_z]]=4J_z", commutator(P, commutator(P, ops.jz)) - 4.0 * ops.jz);
    add("[Q,[Q,J_x]]=4J_x", commutator(Q, commutator(Q, ops.jx)) - 4.0 * ops.jx);
    add("[Q,[Q,J_y]]=4J_y", commutator(Q, commutator(Q, ops.jy)) - 4.0 * ops.jy);
    return report;
}

}  // namespace nmqsd
