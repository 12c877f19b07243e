#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "errors.hpp"

namespace cstarfix {

/// Elements of the coefficient algebra are square complex matrices.
using AlgebraElement = Eigen::MatrixXcd;
using Complex = std::complex<double>;

enum class NormMode { Spectral, Frobenius };
enum class OrderMode { Loewner, Entrywise };

/// Relative tolerance used by positivity and order checks.
inline constexpr double kPositivityTol = 1e-10;

struct PositivityReport {
    bool is_hermitian = false;
    double min_eigenvalue = 0.0;
    bool is_positive = false;
    double tolerance_used = 0.0;
};

inline AlgebraElement identity_element(Eigen::Index n) {
    return AlgebraElement::Identity(n, n);
}

inline AlgebraElement zero_element(Eigen::Index n) {
    return AlgebraElement::Zero(n, n);
}

inline void require_square(const AlgebraElement& a, const char* what) {
    if (a.rows() == 0 || a.rows() != a.cols())
        throw DimensionMismatch(std::string(what) + ": expected a nonempty square matrix, got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

inline void require_same_dim(const AlgebraElement& a, const AlgebraElement& b, const char* what) {
    require_square(a, what);
    require_square(b, what);
    if (a.rows() != b.rows())
        throw DimensionMismatch(std::string(what) + ": operands have dimensions " +
                                std::to_string(a.rows()) + " and " + std::to_string(b.rows()));
}

inline AlgebraElement involution(const AlgebraElement& a) {
    require_square(a, "involution");
    return a.adjoint();
}

inline bool is_exactly_diagonal(const AlgebraElement& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (i != j && a(i, j) != Complex(0.0, 0.0)) return false;
    return true;
}

/// Spectral norm is the largest singular value; diagonal matrices take an
/// exact fast path so diagonal metrics report norms without eigensolver noise.
inline double norm(const AlgebraElement& a, NormMode mode = NormMode::Spectral) {
    require_square(a, "norm");
    if (mode == NormMode::Frobenius) return a.norm();
    if (is_exactly_diagonal(a)) return a.diagonal().cwiseAbs().maxCoeff();
    return a.operatorNorm();
}

inline AlgebraElement hermitian_part(const AlgebraElement& a) {
    return 0.5 * (a + a.adjoint());
}

/// Positivity test: Hermitian up to a scaled tolerance, spectrum bounded below
/// by minus the same tolerance. The tolerance scales with max(1, spectral norm).
inline PositivityReport is_positive(const AlgebraElement& a, double tol = kPositivityTol) {
    require_square(a, "is_positive");
    PositivityReport report;
    const double scale = std::max(1.0, norm(a, NormMode::Spectral));
    report.tolerance_used = tol * scale;
    report.is_hermitian = (a - a.adjoint()).cwiseAbs().maxCoeff() <= report.tolerance_used;
    Eigen::SelfAdjointEigenSolver<AlgebraElement> solver(hermitian_part(a), Eigen::EigenvaluesOnly);
    report.min_eigenvalue = solver.eigenvalues().minCoeff();
    report.is_positive = report.is_hermitian && report.min_eigenvalue >= -report.tolerance_used;
    return report;
}

/// Partial-order comparison a <= b.
/// Loewner: b - a is positive. Entrywise: real parts of a - b are <= tol and
/// imaginary parts of a - b vanish to tol (sensible for real diagonal metrics).
inline bool leq(const AlgebraElement& a, const AlgebraElement& b,
                OrderMode mode = OrderMode::Loewner, double tol = kPositivityTol) {
    require_same_dim(a, b, "leq");
    if (mode == OrderMode::Loewner) return is_positive(b - a, tol).is_positive;
    const AlgebraElement diff = a - b;
    for (Eigen::Index i = 0; i < diff.rows(); ++i)
        for (Eigen::Index j = 0; j < diff.cols(); ++j) {
            if (diff(i, j).real() > tol) return false;
            if (std::abs(diff(i, j).imag()) > tol) return false;
        }
    return true;
}

/// Unique positive square root via spectral calculus. Eigenvalues inside the
/// negative tolerance band are clamped to zero.
inline AlgebraElement sqrt_positive(const AlgebraElement& a, double tol = kPositivityTol) {
    const PositivityReport report = is_positive(a, tol);
    if (!report.is_positive)
        throw NotPositive("sqrt_positive: element is not positive (min eigenvalue " +
                          std::to_string(report.min_eigenvalue) + ")");
    Eigen::SelfAdjointEigenSolver<AlgebraElement> solver(hermitian_part(a));
    Eigen::VectorXd lambda = solver.eigenvalues().cwiseMax(0.0);
    return solver.eigenvectors() * lambda.cwiseSqrt().asDiagonal() *
           solver.eigenvectors().adjoint();
}

/// t = a (1 - a)^{-1}. For positive a with spectral norm < 1/2 this lies in
/// the open unit ball, which is what the iteration bounds rely on.
inline AlgebraElement resolvent_contraction(const AlgebraElement& a, double tol = kPositivityTol) {
    const PositivityReport report = is_positive(a, tol);
    if (!report.is_positive)
        throw PreconditionViolation("resolvent_contraction: element is not positive");
    const double a_norm = norm(a, NormMode::Spectral);
    if (a_norm >= 0.5)
        throw PreconditionViolation("resolvent_contraction: spectral norm " +
                                    std::to_string(a_norm) + " is not below 1/2");
    const AlgebraElement one = identity_element(a.rows());
    return a * (one - a).inverse();
}

/// Whether b is a scalar multiple of the identity (the center of the algebra).
inline bool in_center(const AlgebraElement& b, double tol = kPositivityTol) {
    require_square(b, "in_center");
    const Complex lambda = b.trace() / static_cast<double>(b.rows());
    const double scale = std::max(1.0, std::abs(lambda));
    AlgebraElement deviation = b;
    deviation.diagonal().array() -= lambda;
    return deviation.cwiseAbs().maxCoeff() <= tol * scale;
}

} // namespace cstarfix
