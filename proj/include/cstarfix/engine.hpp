#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "algebra.hpp"
#include "bmetric.hpp"
#include "errors.hpp"
#include "graph.hpp"

namespace cstarfix {

/// A pair of self-maps f, g with f-images inside the g-image, iterated as
/// g x_{n+1} = f x_n. g_preimage picks x with g x = y (any section works for
/// the theory; convergence statements concern the g-orbit).
template <typename Point>
struct MappingPair {
    std::function<Point(const Point&)> f;
    std::function<Point(const Point&)> g;
    std::function<std::optional<Point>(const Point&)> g_preimage;
    bool identity_g = false;
};

template <typename Point>
MappingPair<Point> identity_pair(std::function<Point(const Point&)> f) {
    MappingPair<Point> pair;
    pair.f = std::move(f);
    pair.g = [](const Point& x) { return x; };
    pair.g_preimage = [](const Point& y) { return std::optional<Point>(y); };
    pair.identity_g = true;
    return pair;
}

template <typename Point>
struct IterationTrace {
    /// g x_0, g x_1, ... (the sequence whose convergence the theory controls).
    std::vector<Point> orbit;
    /// step_norms[n] = spectral norm of d(g x_n, g x_{n+1}).
    std::vector<double> step_norms;
    /// Certified majorant for step_norms[n]; empty when no certificate was supplied.
    std::vector<double> bound_values;
    bool converged = false;
    std::optional<Point> limit;
};

/// Runs n_steps of the iteration without any convergence or graph logic.
template <typename Point>
IterationTrace<Point> jungck_orbit(const MappingPair<Point>& pair,
                                   const BMetricSpace<Point>& space, const Point& x0,
                                   std::size_t n_steps) {
    IterationTrace<Point> trace;
    Point x = x0;
    Point gx = pair.g(x0);
    trace.orbit.push_back(gx);
    for (std::size_t n = 0; n < n_steps; ++n) {
        const Point gx_next = pair.f(x);
        trace.step_norms.push_back(norm(eval_metric(space, gx, gx_next), NormMode::Spectral));
        trace.orbit.push_back(gx_next);
        if (n + 1 == n_steps) break;
        std::optional<Point> x_next =
            pair.identity_g ? std::optional<Point>(gx_next) : pair.g_preimage(gx_next);
        if (!x_next)
            throw PreimageFailure("jungck_orbit: no preimage under g at step " + std::to_string(n));
        x = *x_next;
        gx = gx_next;
    }
    return trace;
}

enum class ContractionFamily { BanachGraph, KannanGraph };

template <typename Point>
struct EdgeCheck {
    Point from;
    Point to;
    bool holds = false;
    /// Smallest eigenvalue of (right side - left side); negative means violated.
    double slack = 0.0;
};

/// Everything a convergence claim rests on: the contraction inequality checked
/// edge by edge, plus the norm constants feeding the a priori bounds.
template <typename Point>
struct ContractionCertificate {
    ContractionFamily family = ContractionFamily::BanachGraph;
    AlgebraElement B;
    NormMode mode = NormMode::Spectral;
    double coefficient_norm = 0.0; ///< norm of the space's relaxation coefficient
    double b_norm = 0.0;
    /// Contraction factor coefficient_norm * b_norm^2; must be < 1 for the
    /// first family. The product of norms is an upper bound for the norm of
    /// B* d B, which is the convention all bounds below use.
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double ba_norm = std::numeric_limits<double>::quiet_NaN(); ///< second family: norm of B*A
    AlgebraElement resolvent;                                  ///< second family: B (1-B)^{-1}
    double resolvent_norm = std::numeric_limits<double>::quiet_NaN();
    std::vector<EdgeCheck<Point>> edge_results;
    bool overall = false;
};

namespace detail {

template <typename Point>
std::pair<Point, Point> edge_preimages(const MappingPair<Point>& pair, const Point& gx,
                                       const Point& gy) {
    std::optional<Point> x = pair.identity_g ? std::optional<Point>(gx) : pair.g_preimage(gx);
    std::optional<Point> y = pair.identity_g ? std::optional<Point>(gy) : pair.g_preimage(gy);
    if (!x || !y) throw PreimageFailure("certify: edge endpoint has no preimage under g");
    return {*x, *y};
}

template <typename Point>
void require_edges_in_graph(const DirectedGraph<Point>& graph,
                            const std::vector<std::pair<Point, Point>>& edges) {
    for (const auto& [from, to] : edges)
        if (!graph.has_edge_symmetrized(from, to))
            throw PreconditionViolation("certify: sampled pair is not an edge of the graph");
}

} // namespace detail

/// Checks d(f x, f y) <= B* d(g x, g y) B over the sampled edges (endpoints in
/// g-image coordinates) and packages the constants. Inequality failures are
/// recorded per edge, never thrown.
template <typename Point>
ContractionCertificate<Point> certify_banach(const MappingPair<Point>& pair,
                                             const BMetricSpace<Point>& space,
                                             const DirectedGraph<Point>& graph,
                                             const AlgebraElement& B,
                                             const std::vector<std::pair<Point, Point>>& edge_sample,
                                             NormMode mode = NormMode::Spectral) {
    require_same_dim(B, space.coefficient, "certify_banach");
    detail::require_edges_in_graph(graph, edge_sample);
    ContractionCertificate<Point> cert;
    cert.family = ContractionFamily::BanachGraph;
    cert.B = B;
    cert.mode = mode;
    cert.coefficient_norm = norm(space.coefficient, mode);
    cert.b_norm = norm(B, mode);
    cert.lambda = cert.coefficient_norm * cert.b_norm * cert.b_norm;
    bool all_hold = true;
    for (const auto& [gx, gy] : edge_sample) {
        const auto [x, y] = detail::edge_preimages(pair, gx, gy);
        const AlgebraElement lhs = eval_metric(space, pair.f(x), pair.f(y));
        const AlgebraElement rhs = involution(B) * eval_metric(space, gx, gy) * B;
        const PositivityReport slack = is_positive(rhs - lhs);
        EdgeCheck<Point> check{gx, gy, slack.is_positive, slack.min_eigenvalue};
        all_hold = all_hold && check.holds;
        cert.edge_results.push_back(std::move(check));
    }
    cert.overall = all_hold && cert.lambda < 1.0;
    return cert;
}

/// Checks d(f x, f y) <= B (d(f x, g x) + d(f y, g y)) over the sampled edges.
/// B must be a positive central element with norm(B A) < 1/2; those are hard
/// preconditions, while inequality failures are recorded per edge.
template <typename Point>
ContractionCertificate<Point> certify_kannan(const MappingPair<Point>& pair,
                                             const BMetricSpace<Point>& space,
                                             const DirectedGraph<Point>& graph,
                                             const AlgebraElement& B,
                                             const std::vector<std::pair<Point, Point>>& edge_sample,
                                             NormMode mode = NormMode::Spectral) {
    require_same_dim(B, space.coefficient, "certify_kannan");
    if (!in_center(B)) throw PreconditionViolation("certify_kannan: B must be central");
    if (!is_positive(B).is_positive)
        throw PreconditionViolation("certify_kannan: B must be positive");
    detail::require_edges_in_graph(graph, edge_sample);
    ContractionCertificate<Point> cert;
    cert.family = ContractionFamily::KannanGraph;
    cert.B = B;
    cert.mode = mode;
    cert.coefficient_norm = norm(space.coefficient, mode);
    cert.b_norm = norm(B, mode);
    cert.ba_norm = norm(AlgebraElement(B * space.coefficient), mode);
    if (cert.ba_norm >= 0.5)
        throw PreconditionViolation("certify_kannan: norm of B * coefficient is " +
                                    std::to_string(cert.ba_norm) + ", not below 1/2");
    cert.resolvent = resolvent_contraction(B);
    cert.resolvent_norm = norm(cert.resolvent, mode);
    bool all_hold = true;
    for (const auto& [gx, gy] : edge_sample) {
        const auto [x, y] = detail::edge_preimages(pair, gx, gy);
        const Point fx = pair.f(x);
        const Point fy = pair.f(y);
        const AlgebraElement lhs = eval_metric(space, fx, fy);
        const AlgebraElement rhs =
            B * (eval_metric(space, fx, gx) + eval_metric(space, fy, gy));
        const PositivityReport slack = is_positive(rhs - lhs);
        EdgeCheck<Point> check{gx, gy, slack.is_positive, slack.min_eigenvalue};
        all_hold = all_hold && check.holds;
        cert.edge_results.push_back(std::move(check));
    }
    cert.overall = all_hold;
    return cert;
}

/// Certified majorant for the norm of d(g x_n, g x_{n+1}) given the norm of
/// the initial gap Q = d(g x_0, g x_1).
template <typename Point>
double apriori_step_bound(const ContractionCertificate<Point>& cert, const AlgebraElement& Q,
                          std::size_t n) {
    if (!cert.overall) throw CertificateInvalid("apriori_step_bound: certificate did not pass");
    const double q_norm = norm(Q, cert.mode);
    if (cert.family == ContractionFamily::BanachGraph)
        return std::pow(cert.b_norm, 2.0 * static_cast<double>(n)) * q_norm;
    return std::pow(cert.resolvent_norm, static_cast<double>(n)) * q_norm;
}

/// Certified majorant for the norm of d(g x_n, g x_m), n < m. Telescoping the
/// relaxed triangle inequality from the lower index n gives, with
/// A = coefficient norm, q = initial gap norm:
///   first family, r = A b^2:  A^{1-n} q sum_{j=n}^{m-2} r^j + A^{-n} q r^{m-1}
///   second family, t = resolvent norm:  A^{m-n} t^{n+1} q / (A - t) + A^{m-n-1} t^n q
template <typename Point>
double cauchy_tail_bound(const ContractionCertificate<Point>& cert, const AlgebraElement& Q,
                         std::size_t n, std::size_t m) {
    if (!cert.overall) throw CertificateInvalid("cauchy_tail_bound: certificate did not pass");
    if (m <= n) throw PreconditionViolation("cauchy_tail_bound: need n < m");
    const double A = cert.coefficient_norm;
    const double q_norm = norm(Q, cert.mode);
    if (cert.family == ContractionFamily::BanachGraph) {
        const double r = cert.lambda;
        if (r >= 1.0)
            throw DivergentParameters("cauchy_tail_bound: contraction factor >= 1");
        double sum = 0.0;
        for (std::size_t j = n; j + 2 <= m; ++j) sum += std::pow(r, static_cast<double>(j));
        return std::pow(A, 1.0 - static_cast<double>(n)) * q_norm * sum +
               std::pow(A, -static_cast<double>(n)) * q_norm *
                   std::pow(r, static_cast<double>(m) - 1.0);
    }
    const double t = cert.resolvent_norm;
    if (t >= A)
        throw DivergentParameters("cauchy_tail_bound: resolvent norm must stay below the "
                                  "coefficient norm");
    const double gap = static_cast<double>(m - n);
    return std::pow(A, gap) * std::pow(t, static_cast<double>(n) + 1.0) * q_norm / (A - t) +
           std::pow(A, gap - 1.0) * std::pow(t, static_cast<double>(n)) * q_norm;
}

struct SolveOptions {
    double tol = 1e-12;
    int max_iter = 1000;
    /// Orbit prefix length whose pairs are checked against the graph.
    std::size_t horizon = 64;
    /// When true, an orbit leaving the graph's edge relation is an error;
    /// when false it is only recorded in the report.
    bool require_orbit_membership = true;
};

template <typename Point>
struct CoincidenceResult {
    Point coincidence_point;      ///< v with f v = g v (up to tolerance)
    Point point_of_coincidence;   ///< u = f v = g v
    double residual = 0.0;        ///< norm of d(f v, g v)
    bool weakly_compatible = false;
    std::optional<Point> common_fixed_point;
    bool uniqueness_checked = false;
};

template <typename Point>
struct SolveReport {
    CoincidenceResult<Point> result;
    IterationTrace<Point> trace;
    bool orbit_in_graph = false;
};

/// Iterates g x_{n+1} = f x_n until the step distance drops below tol, then
/// extracts the coincidence data. Residual acceptance threshold is 10 * tol.
template <typename Point>
SolveReport<Point> solve_coincidence(const MappingPair<Point>& pair,
                                     const BMetricSpace<Point>& space,
                                     const DirectedGraph<Point>& graph,
                                     const ContractionCertificate<Point>& cert, const Point& x0,
                                     const SolveOptions& opts = {}) {
    if (!cert.overall) throw CertificateInvalid("solve_coincidence: certificate did not pass");
    if (opts.max_iter < 1)
        throw PreconditionViolation("solve_coincidence: max_iter must be at least 1");
    SolveReport<Point> report;
    IterationTrace<Point>& trace = report.trace;
    Point x = x0;
    Point gx = pair.g(x0);
    trace.orbit.push_back(gx);
    AlgebraElement Q;
    for (int n = 0; n < opts.max_iter; ++n) {
        const Point gx_next = pair.f(x);
        const double step = norm(eval_metric(space, gx, gx_next), NormMode::Spectral);
        trace.step_norms.push_back(step);
        if (n == 0) Q = eval_metric(space, gx, gx_next);
        trace.bound_values.push_back(apriori_step_bound(cert, Q, static_cast<std::size_t>(n)));
        trace.orbit.push_back(gx_next);
        if (step < opts.tol) {
            trace.converged = true;
            gx = gx_next;
            std::optional<Point> x_next =
                pair.identity_g ? std::optional<Point>(gx_next) : pair.g_preimage(gx_next);
            if (!x_next) throw PreimageFailure("solve_coincidence: no preimage under g");
            x = *x_next;
            break;
        }
        std::optional<Point> x_next =
            pair.identity_g ? std::optional<Point>(gx_next) : pair.g_preimage(gx_next);
        if (!x_next) throw PreimageFailure("solve_coincidence: no preimage under g");
        x = *x_next;
        gx = gx_next;
    }
    if (!trace.converged)
        throw NoConvergence("solve_coincidence: step norm still " +
                            std::to_string(trace.step_norms.back()) + " after " +
                            std::to_string(opts.max_iter) + " iterations");
    trace.limit = gx;
    report.orbit_in_graph = check_orbit_membership(
        graph, trace.orbit, std::min(opts.horizon, trace.orbit.size() - 1));
    if (opts.require_orbit_membership && !report.orbit_in_graph)
        throw OrbitNotInGraph("solve_coincidence: orbit pairs leave the graph's edge relation");

    const double tol_accept = 10.0 * opts.tol;
    CoincidenceResult<Point>& result = report.result;
    result.coincidence_point = x;
    result.residual = norm(eval_metric(space, pair.f(x), pair.g(x)), NormMode::Spectral);
    if (result.residual > tol_accept)
        throw NoConvergence("solve_coincidence: coincidence residual " +
                            std::to_string(result.residual) + " exceeds acceptance threshold");
    result.point_of_coincidence = pair.g(x);
    const Point fgv = pair.f(pair.g(x));
    const Point gfv = pair.g(pair.f(x));
    result.weakly_compatible =
        norm(eval_metric(space, fgv, gfv), NormMode::Spectral) <= tol_accept;
    if (result.weakly_compatible) {
        const Point& u = result.point_of_coincidence;
        const bool f_fixes = norm(eval_metric(space, pair.f(u), u), NormMode::Spectral) <= tol_accept;
        const bool g_fixes = norm(eval_metric(space, pair.g(u), u), NormMode::Spectral) <= tol_accept;
        if (f_fixes && g_fixes) result.common_fixed_point = u;
    }
    return report;
}

/// Fixed-point search for a single self-map (g = identity).
template <typename Point>
SolveReport<Point> solve_fixed_point(std::function<Point(const Point&)> f,
                                     const BMetricSpace<Point>& space,
                                     const DirectedGraph<Point>& graph,
                                     const ContractionCertificate<Point>& cert, const Point& x0,
                                     const SolveOptions& opts = {}) {
    return solve_coincidence(identity_pair<Point>(std::move(f)), space, graph, cert, x0, opts);
}

/// Cross-checks the points of coincidence reached from several seeds: two
/// distinct limits whose pair sits inside the (symmetrized) graph contradict
/// the uniqueness theory, so the certificate must have been violated off
/// sample. Returns false in that case; marks every report as cross-checked.
template <typename Point>
bool cross_check_uniqueness(std::vector<SolveReport<Point>>& reports,
                            const BMetricSpace<Point>& space, const DirectedGraph<Point>& graph,
                            double tol = 1e-12) {
    const double tol_accept = 10.0 * tol;
    bool consistent = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        for (std::size_t j = i + 1; j < reports.size(); ++j) {
            const Point& u = reports[i].result.point_of_coincidence;
            const Point& w = reports[j].result.point_of_coincidence;
            const bool distinct =
                norm(eval_metric(space, u, w), NormMode::Spectral) > tol_accept;
            if (distinct && pairwise_connected(graph, std::vector<Point>{u, w}))
                consistent = false;
        }
    }
    for (auto& report : reports) report.result.uniqueness_checked = true;
    return consistent;
}

} // namespace cstarfix
