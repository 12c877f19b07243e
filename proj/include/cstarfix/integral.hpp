#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace cstarfix {

/// Discretized integral equation x(t) = integral over [lo, hi] of
/// k(t, s, x(s)) ds + g(t), sampled on m uniform nodes with the left-endpoint
/// rectangle rule. The kernel must be dominated by beta * |phi(t,s)| * |u - v|
/// in its third argument; affine kernels k = beta * phi(t,s) * u + c(t,s)
/// additionally admit a direct linear solve.
struct IntegralProblem {
    double lo = 0.0;
    double hi = 1.0;
    Eigen::Index m = 0;
    double p = 2.0;    ///< exponent of the ambient power metric
    double beta = 0.0; ///< kernel contraction scale
    std::function<double(double, double, double)> kernel;
    std::function<double(double, double)> phi;
    Eigen::VectorXd g;
    bool kernel_affine = false;
    std::function<double(double, double)> affine_offset; ///< c(t,s); null means zero
};

inline double quad_weight(const IntegralProblem& problem) {
    return (problem.hi - problem.lo) / static_cast<double>(problem.m);
}

inline Eigen::VectorXd grid_nodes(const IntegralProblem& problem) {
    Eigen::VectorXd nodes(problem.m);
    const double w = quad_weight(problem);
    for (Eigen::Index i = 0; i < problem.m; ++i)
        nodes[i] = problem.lo + w * static_cast<double>(i);
    return nodes;
}

inline void validate_integral_shapes(const IntegralProblem& problem) {
    if (!(problem.hi > problem.lo))
        throw PreconditionViolation("integral: interval must have positive length");
    if (problem.m < 1) throw DimensionMismatch("integral: need at least one grid node");
    if (!(problem.p >= 1.0)) throw PreconditionViolation("integral: exponent must be >= 1");
    if (!problem.kernel || !problem.phi)
        throw PreconditionViolation("integral: kernel and phi must be set");
    if (problem.g.size() != problem.m)
        throw DimensionMismatch("integral: inhomogeneity length does not match the grid");
}

/// Solvability gates: beta inside (0, 1/sqrt(2^p)), quadrature row sums of
/// |phi| at most 1, and a sampled check that the kernel really is dominated by
/// beta * |phi| * |u - v| in its third argument.
inline void validate_integral(const IntegralProblem& problem, std::mt19937_64& rng,
                              int lipschitz_samples = 256) {
    validate_integral_shapes(problem);
    const double beta_cap = 1.0 / std::sqrt(std::pow(2.0, problem.p));
    if (!(problem.beta > 0.0) || !(problem.beta < beta_cap))
        throw GateViolation("integral: beta " + std::to_string(problem.beta) +
                            " is outside (0, " + std::to_string(beta_cap) + ")");
    const Eigen::VectorXd nodes = grid_nodes(problem);
    const double w = quad_weight(problem);
    for (Eigen::Index i = 0; i < problem.m; ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < problem.m; ++j)
            row += std::abs(problem.phi(nodes[i], nodes[j]));
        if (w * row > 1.0 + 1e-9)
            throw GateViolation("integral: quadrature row sum of |phi| is " +
                                std::to_string(w * row) + " at node " + std::to_string(i) +
                                ", above 1");
    }
    std::uniform_int_distribution<Eigen::Index> pick_node(0, problem.m - 1);
    std::uniform_real_distribution<double> pick_value(-10.0, 10.0);
    for (int trial = 0; trial < lipschitz_samples; ++trial) {
        const double t = nodes[pick_node(rng)];
        const double s = nodes[pick_node(rng)];
        const double u = pick_value(rng);
        const double v = pick_value(rng);
        const double lhs = std::abs(problem.kernel(t, s, u) - problem.kernel(t, s, v));
        const double rhs = problem.beta * std::abs(problem.phi(t, s) * (u - v));
        if (lhs > rhs * (1.0 + 1e-9) + 1e-12)
            throw GateViolation("integral: kernel increment " + std::to_string(lhs) +
                                " exceeds its dominating bound " + std::to_string(rhs));
    }
}

/// One application of the quadrature operator T x = w * sum_s k(t, s, x(s)) + g.
inline Eigen::VectorXd integral_apply(const IntegralProblem& problem, const Eigen::VectorXd& x) {
    if (x.size() != problem.m)
        throw DimensionMismatch("integral_apply: operand length does not match the grid");
    const Eigen::VectorXd nodes = grid_nodes(problem);
    const double w = quad_weight(problem);
    Eigen::VectorXd out(problem.m);
    for (Eigen::Index i = 0; i < problem.m; ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < problem.m; ++j)
            acc += problem.kernel(nodes[i], nodes[j], x[j]);
        out[i] = w * acc + problem.g[i];
    }
    return out;
}

/// Successive substitution from x0 (the inhomogeneity by default) in the sup
/// norm. Gates are re-validated before iterating.
inline Eigen::VectorXd integral_solve(const IntegralProblem& problem, std::mt19937_64& rng,
                                      double tol = 1e-12, int max_iter = 10000,
                                      std::vector<Eigen::VectorXd>* iterates = nullptr,
                                      std::optional<Eigen::VectorXd> x0 = std::nullopt) {
    validate_integral(problem, rng);
    if (max_iter < 1) throw PreconditionViolation("integral_solve: max_iter must be at least 1");
    Eigen::VectorXd x = x0 ? *x0 : problem.g;
    if (x.size() != problem.m)
        throw DimensionMismatch("integral_solve: start length does not match the grid");
    if (iterates) iterates->push_back(x);
    for (int n = 0; n < max_iter; ++n) {
        const Eigen::VectorXd next = integral_apply(problem, x);
        if (iterates) iterates->push_back(next);
        const double step = (next - x).cwiseAbs().maxCoeff();
        x = next;
        if (step <= tol) return x;
    }
    throw NoConvergence("integral_solve: no convergence after " + std::to_string(max_iter) +
                        " iterations");
}

/// Direct solution for affine kernels: (I - beta w Phi) x = g + w c-row-sums,
/// with Phi_ij = phi(t_i, s_j). Independent of the iteration path.
inline Eigen::VectorXd integral_oracle(const IntegralProblem& problem) {
    validate_integral_shapes(problem);
    if (!problem.kernel_affine)
        throw NonlinearKernel("integral_oracle: only affine kernels admit a direct solve");
    const Eigen::VectorXd nodes = grid_nodes(problem);
    const double w = quad_weight(problem);
    const Eigen::Index m = problem.m;
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd rhs = problem.g;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            system(i, j) -= problem.beta * w * problem.phi(nodes[i], nodes[j]);
            if (problem.affine_offset) rhs[i] += w * problem.affine_offset(nodes[i], nodes[j]);
        }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible())
        throw SingularSystem("integral_oracle: discretized linear system is singular");
    return lu.solve(rhs);
}

} // namespace cstarfix
