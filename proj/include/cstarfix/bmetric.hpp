#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "algebra.hpp"
#include "errors.hpp"

namespace cstarfix {

/// Absolute tolerance under which two points count as the same point.
inline constexpr double kPointTol = 1e-12;

inline bool points_close(double a, double b) { return std::abs(a - b) <= kPointTol; }

inline bool points_close(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) return false;
    if (a.size() == 0) return true;
    return (a - b).cwiseAbs().maxCoeff() <= kPointTol;
}

inline bool points_close(const AlgebraElement& a, const AlgebraElement& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (a.size() == 0) return true;
    return (a - b).cwiseAbs().maxCoeff() <= kPointTol;
}

/// A set of points carrying an algebra-valued distance with a relaxed
/// triangle inequality d(x,y) <= A (d(x,z) + d(z,y)), A >= identity.
template <typename Point>
struct BMetricSpace {
    using MetricFn = std::function<AlgebraElement(const Point&, const Point&)>;
    using SamePointFn = std::function<bool(const Point&, const Point&)>;
    using MemberFn = std::function<bool(const Point&)>;

    MetricFn metric;
    AlgebraElement coefficient;
    Eigen::Index algebra_dim = 0;
    SamePointFn same_point;
    MemberFn contains; ///< null means every value of Point belongs to the space
};

template <typename Point>
BMetricSpace<Point> make_bmetric_space(typename BMetricSpace<Point>::MetricFn metric,
                                       AlgebraElement coefficient,
                                       typename BMetricSpace<Point>::SamePointFn same_point,
                                       typename BMetricSpace<Point>::MemberFn contains = nullptr) {
    require_square(coefficient, "make_bmetric_space");
    if (!leq(identity_element(coefficient.rows()), coefficient, OrderMode::Loewner))
        throw PreconditionViolation(
            "make_bmetric_space: relaxation coefficient must dominate the identity");
    BMetricSpace<Point> space;
    space.metric = std::move(metric);
    space.coefficient = std::move(coefficient);
    space.algebra_dim = space.coefficient.rows();
    space.same_point = std::move(same_point);
    space.contains = std::move(contains);
    return space;
}

template <typename Point>
AlgebraElement eval_metric(const BMetricSpace<Point>& space, const Point& x, const Point& y) {
    if (space.contains && (!space.contains(x) || !space.contains(y)))
        throw UnknownPoint("eval_metric: point lies outside the space");
    return space.metric(x, y);
}

/// Distance between reals, |x-y|^p stretched onto a 2x2 scalar matrix.
/// Relaxation coefficient 2^p * identity.
inline BMetricSpace<double> make_scalar_power_space(double p = 2.0) {
    if (!(p >= 1.0))
        throw PreconditionViolation("make_scalar_power_space: exponent must be >= 1");
    auto metric = [p](const double& x, const double& y) -> AlgebraElement {
        return std::pow(std::abs(x - y), p) * identity_element(2);
    };
    return make_bmetric_space<double>(metric, std::pow(2.0, p) * identity_element(2),
                                      [](const double& a, const double& b) { return points_close(a, b); });
}

/// Distance between grid functions: diagonal matrix of |f_i - g_i|^p.
/// Relaxation coefficient 2^p * identity on the m-dimensional algebra.
inline BMetricSpace<Eigen::VectorXd> make_grid_function_space(Eigen::Index grid_size, double p) {
    if (grid_size < 1)
        throw PreconditionViolation("make_grid_function_space: grid size must be >= 1");
    if (!(p >= 1.0))
        throw PreconditionViolation("make_grid_function_space: exponent must be >= 1");
    auto metric = [grid_size, p](const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
        if (f.size() != grid_size || g.size() != grid_size)
            throw DimensionMismatch("grid function metric: vector length does not match grid");
        AlgebraElement d = zero_element(grid_size);
        for (Eigen::Index i = 0; i < grid_size; ++i)
            d(i, i) = std::pow(std::abs(f[i] - g[i]), p);
        return d;
    };
    return make_bmetric_space<Eigen::VectorXd>(
        metric, std::pow(2.0, p) * identity_element(grid_size),
        [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return points_close(a, b); });
}

/// Distance between algebra elements: squared spectral norm times the
/// identity. Squaring costs a relaxation coefficient of 4 * identity.
inline BMetricSpace<AlgebraElement> make_operator_norm_space(Eigen::Index dim) {
    if (dim < 1)
        throw PreconditionViolation("make_operator_norm_space: dimension must be >= 1");
    auto metric = [dim](const AlgebraElement& x, const AlgebraElement& y) -> AlgebraElement {
        if (x.rows() != dim || x.cols() != dim || y.rows() != dim || y.cols() != dim)
            throw DimensionMismatch("operator norm metric: operand dimension does not match space");
        const double value = norm(x - y, NormMode::Spectral);
        return (value * value) * identity_element(dim);
    };
    return make_bmetric_space<AlgebraElement>(
        metric, 4.0 * identity_element(dim),
        [](const AlgebraElement& a, const AlgebraElement& b) { return points_close(a, b); });
}

/// Finite space given by an explicit list of points and a distance table.
/// Points outside the list are rejected by eval_metric.
inline BMetricSpace<double> make_table_space(std::vector<double> points,
                                             std::vector<std::vector<AlgebraElement>> table,
                                             AlgebraElement coefficient) {
    const std::size_t n = points.size();
    if (n == 0) throw EmptySample("make_table_space: no points");
    if (table.size() != n)
        throw DimensionMismatch("make_table_space: table row count does not match point count");
    for (const auto& row : table) {
        if (row.size() != n)
            throw DimensionMismatch("make_table_space: table is not square");
        for (const auto& entry : row) require_same_dim(entry, coefficient, "make_table_space");
    }
    auto index_of = [points](const double& x) -> std::size_t {
        for (std::size_t i = 0; i < points.size(); ++i)
            if (points_close(points[i], x)) return i;
        throw UnknownPoint("table space: point " + std::to_string(x) + " is not listed");
    };
    auto metric = [table, index_of](const double& x, const double& y) {
        return table[index_of(x)][index_of(y)];
    };
    auto member = [index_of](const double& x) {
        try {
            index_of(x);
            return true;
        } catch (const UnknownPoint&) {
            return false;
        }
    };
    return make_bmetric_space<double>(
        metric, std::move(coefficient),
        [](const double& a, const double& b) { return points_close(a, b); }, member);
}

struct AxiomReport {
    std::size_t checked_triples = 0;
    bool symmetry_ok = false;
    bool identity_ok = false;
    bool triangle_ok = false;
    /// Smallest eigenvalue seen across all slack matrices A(d(x,z)+d(z,y)) - d(x,y);
    /// negative values beyond tolerance mean the relaxed triangle inequality failed.
    double worst_triangle_slack = 0.0;
    bool all_ok() const { return symmetry_ok && identity_ok && triangle_ok; }
};

/// Sample-based check of the three distance axioms over the given triples.
template <typename Point>
AxiomReport verify_axioms(const BMetricSpace<Point>& space,
                          const std::vector<std::array<Point, 3>>& sample,
                          double tol = kPositivityTol) {
    if (sample.empty()) throw EmptySample("verify_axioms: empty sample");
    AxiomReport report;
    report.symmetry_ok = report.identity_ok = report.triangle_ok = true;
    report.worst_triangle_slack = std::numeric_limits<double>::infinity();
    const AlgebraElement& A = space.coefficient;
    for (const auto& [x, y, z] : sample) {
        ++report.checked_triples;
        const std::array<std::pair<const Point*, const Point*>, 3> pairs = {
            std::make_pair(&x, &y), std::make_pair(&x, &z), std::make_pair(&z, &y)};
        for (const auto& [a, b] : pairs) {
            const AlgebraElement dab = eval_metric(space, *a, *b);
            const AlgebraElement dba = eval_metric(space, *b, *a);
            const double scale = std::max(1.0, norm(dab, NormMode::Spectral));
            if (!is_positive(dab, tol).is_positive) report.identity_ok = false;
            if (norm(dab - dba, NormMode::Spectral) > tol * scale) report.symmetry_ok = false;
            if (space.same_point(*a, *b)) {
                if (norm(dab, NormMode::Spectral) > tol * scale) report.identity_ok = false;
            } else if (norm(dab, NormMode::Spectral) == 0.0) {
                report.identity_ok = false;
            }
        }
        for (const Point* m : {&x, &y, &z})
            if (norm(eval_metric(space, *m, *m), NormMode::Spectral) > tol)
                report.identity_ok = false;
        const AlgebraElement slack =
            A * (eval_metric(space, x, z) + eval_metric(space, z, y)) - eval_metric(space, x, y);
        const PositivityReport pos = is_positive(slack, tol);
        report.worst_triangle_slack = std::min(report.worst_triangle_slack, pos.min_eigenvalue);
        if (!pos.is_positive) report.triangle_ok = false;
    }
    return report;
}

/// Sampled witness that |u-v|^p <= 2^p (|u-w|^p + |w-v|^p) for reals,
/// the scalar inequality behind the power-metric relaxation coefficient.
inline bool power_inequality_check(double p, const std::vector<std::array<double, 3>>& samples) {
    if (samples.empty()) throw EmptySample("power_inequality_check: empty sample");
    const double factor = std::pow(2.0, p);
    for (const auto& [u, v, w] : samples) {
        const double lhs = std::pow(std::abs(u - v), p);
        const double rhs = factor * (std::pow(std::abs(u - w), p) + std::pow(std::abs(w - v), p));
        if (lhs > rhs * (1.0 + 1e-12) + 1e-300) return false;
    }
    return true;
}

} // namespace cstarfix
