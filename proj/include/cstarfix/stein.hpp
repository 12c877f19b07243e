#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "algebra.hpp"
#include "errors.hpp"

namespace cstarfix {

/// Operator equation X - sum_k B_k* X B_k = Q with Q positive.
struct SteinProblem {
    Eigen::Index dim = 0;
    std::vector<AlgebraElement> coefficients;
    AlgebraElement Q;
};

inline void validate_stein_shapes(const SteinProblem& problem) {
    if (problem.dim < 1)
        throw DimensionMismatch("stein: dimension must be >= 1");
    if (problem.coefficients.empty())
        throw PreconditionViolation("stein: at least one coefficient is required");
    for (const auto& B : problem.coefficients)
        if (B.rows() != problem.dim || B.cols() != problem.dim)
            throw DimensionMismatch("stein: coefficient dimension does not match the problem");
    if (problem.Q.rows() != problem.dim || problem.Q.cols() != problem.dim)
        throw DimensionMismatch("stein: right-hand side dimension does not match the problem");
}

/// Sum of squared spectral norms of the coefficients; the iteration contracts
/// exactly when this is below 1 and the certified theory asks for < 1/2.
inline double stein_beta(const SteinProblem& problem) {
    double beta = 0.0;
    for (const auto& B : problem.coefficients) {
        const double b = norm(B, NormMode::Spectral);
        beta += b * b;
    }
    return beta;
}

/// Sum of fourth powers of the coefficient norms, reported for reference
/// against the quartic solvability condition; not enforced.
inline double stein_quartic_sum(const SteinProblem& problem) {
    double sum = 0.0;
    for (const auto& B : problem.coefficients) {
        const double b = norm(B, NormMode::Spectral);
        sum += b * b * b * b;
    }
    return sum;
}

/// Full gate: shapes, positive right-hand side, squared-norm sum < 1/2.
inline void validate_stein(const SteinProblem& problem) {
    validate_stein_shapes(problem);
    if (!is_positive(problem.Q).is_positive)
        throw GateViolation("stein: right-hand side must be positive");
    const double beta = stein_beta(problem);
    if (!(beta < 0.5))
        throw GateViolation("stein: sum of squared coefficient norms is " +
                            std::to_string(beta) + ", not below 1/2");
}

/// One application of the map F(X) = sum_k B_k* X B_k + Q.
inline AlgebraElement stein_apply(const SteinProblem& problem, const AlgebraElement& X) {
    if (X.rows() != problem.dim || X.cols() != problem.dim)
        throw DimensionMismatch("stein_apply: operand dimension does not match the problem");
    AlgebraElement out = problem.Q;
    for (const auto& B : problem.coefficients) out += B.adjoint() * X * B;
    return out;
}

/// Successive substitution from X0 (zero element by default) until the update
/// norm drops to tol. Records the iterates if a sink is supplied.
inline AlgebraElement stein_iterate(const SteinProblem& problem, double tol = 1e-12,
                                    int max_iter = 10000,
                                    std::vector<AlgebraElement>* iterates = nullptr,
                                    std::optional<AlgebraElement> X0 = std::nullopt) {
    validate_stein(problem);
    if (max_iter < 1) throw PreconditionViolation("stein_iterate: max_iter must be at least 1");
    AlgebraElement X = X0 ? *X0 : zero_element(problem.dim);
    if (X.rows() != problem.dim || X.cols() != problem.dim)
        throw DimensionMismatch("stein_iterate: start dimension does not match the problem");
    if (iterates) iterates->push_back(X);
    for (int n = 0; n < max_iter; ++n) {
        const AlgebraElement next = stein_apply(problem, X);
        if (iterates) iterates->push_back(next);
        const double step = norm(AlgebraElement(next - X), NormMode::Spectral);
        X = next;
        if (step <= tol) return X;
    }
    throw NoConvergence("stein_iterate: no convergence after " + std::to_string(max_iter) +
                        " iterations");
}

/// Direct solution by vectorization: (I - sum_k B_k^T (x) B_k*) vec X = vec Q,
/// column-stacking convention. Independent of the iteration path.
inline AlgebraElement stein_oracle(const SteinProblem& problem) {
    validate_stein_shapes(problem);
    const Eigen::Index n = problem.dim;
    Eigen::MatrixXcd system = Eigen::MatrixXcd::Identity(n * n, n * n);
    for (const auto& B : problem.coefficients)
        system -= Eigen::kroneckerProduct(B.transpose(), B.adjoint()).eval();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(system);
    if (!lu.isInvertible())
        throw SingularSystem("stein_oracle: vectorized system is singular");
    Eigen::VectorXcd rhs(n * n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) rhs[j * n + i] = problem.Q(i, j);
    const Eigen::VectorXcd vec_x = lu.solve(rhs);
    AlgebraElement X(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) X(i, j) = vec_x[j * n + i];
    return X;
}

} // namespace cstarfix
