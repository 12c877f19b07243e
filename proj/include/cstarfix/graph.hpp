#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "bmetric.hpp"
#include "errors.hpp"

namespace cstarfix {

/// Directed graph over an arbitrary point type. Vertices are a finite sample
/// (possibly of an infinite vertex set); edges come from an explicit list, an
/// optional predicate, or both. Every vertex carries an implicit loop.
template <typename Point>
class DirectedGraph {
public:
    using Edge = std::pair<Point, Point>;
    using EdgePredicate = std::function<bool(const Point&, const Point&)>;
    using Equality = std::function<bool(const Point&, const Point&)>;

    DirectedGraph(std::vector<Point> vertices, std::vector<Edge> edges, Equality eq)
        : vertices_(std::move(vertices)), edges_(std::move(edges)), eq_(std::move(eq)) {}

    DirectedGraph(std::vector<Point> vertices, EdgePredicate predicate, Equality eq)
        : vertices_(std::move(vertices)), predicate_(std::move(predicate)), eq_(std::move(eq)) {}

    DirectedGraph(std::vector<Point> vertices, std::vector<Edge> edges, EdgePredicate predicate,
                  Equality eq)
        : vertices_(std::move(vertices)),
          edges_(std::move(edges)),
          predicate_(std::move(predicate)),
          eq_(std::move(eq)) {}

    bool has_edge(const Point& x, const Point& y) const {
        if (eq_(x, y)) return true;
        for (const auto& [from, to] : edges_)
            if (eq_(from, x) && eq_(to, y)) return true;
        return predicate_ && predicate_(x, y);
    }

    bool has_edge_symmetrized(const Point& x, const Point& y) const {
        return has_edge(x, y) || has_edge(y, x);
    }

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<Edge>& explicit_edges() const { return edges_; }
    const EdgePredicate& predicate() const { return predicate_; }
    const Equality& equality() const { return eq_; }

private:
    std::vector<Point> vertices_;
    std::vector<Edge> edges_;
    EdgePredicate predicate_;
    Equality eq_;
};

/// Graph with every edge direction flipped. Loops are unaffected.
template <typename Point>
DirectedGraph<Point> reverse(const DirectedGraph<Point>& g) {
    std::vector<typename DirectedGraph<Point>::Edge> flipped;
    flipped.reserve(g.explicit_edges().size());
    for (const auto& [from, to] : g.explicit_edges()) flipped.emplace_back(to, from);
    typename DirectedGraph<Point>::EdgePredicate pred;
    if (g.predicate()) pred = [inner = g.predicate()](const Point& x, const Point& y) {
        return inner(y, x);
    };
    return DirectedGraph<Point>(g.vertices(), std::move(flipped), std::move(pred), g.equality());
}

/// Union of a graph with its reversal.
template <typename Point>
DirectedGraph<Point> symmetrize(const DirectedGraph<Point>& g) {
    std::vector<typename DirectedGraph<Point>::Edge> both = g.explicit_edges();
    both.reserve(both.size() * 2);
    for (const auto& [from, to] : g.explicit_edges()) both.emplace_back(to, from);
    typename DirectedGraph<Point>::EdgePredicate pred;
    if (g.predicate()) pred = [inner = g.predicate()](const Point& x, const Point& y) {
        return inner(x, y) || inner(y, x);
    };
    return DirectedGraph<Point>(g.vertices(), std::move(both), std::move(pred), g.equality());
}

template <typename Point>
struct PathQuery {
    Point source;
    Point target;
    /// Vertex sequence from source to target when one exists within the
    /// length budget, including both endpoints.
    std::optional<std::vector<Point>> path;
};

namespace detail {

/// Vertex universe for traversal: the graph's sample plus any extra points,
/// deduplicated under the graph's equality.
template <typename Point>
std::vector<Point> traversal_universe(const DirectedGraph<Point>& g,
                                      std::initializer_list<Point> extra) {
    std::vector<Point> universe = g.vertices();
    auto known = [&universe, &g](const Point& p) {
        for (const auto& q : universe)
            if (g.equality()(p, q)) return true;
        return false;
    };
    for (const auto& p : extra)
        if (!known(p)) universe.push_back(p);
    return universe;
}

} // namespace detail

/// Breadth-first search restricted to the graph's vertex sample (plus the two
/// endpoints). max_len bounds the number of edges in the returned path.
template <typename Point>
PathQuery<Point> find_path(const DirectedGraph<Point>& g, const Point& source, const Point& target,
                           std::size_t max_len = 64) {
    PathQuery<Point> query{source, target, std::nullopt};
    const std::vector<Point> universe = detail::traversal_universe(g, {source, target});
    const std::size_t n = universe.size();
    auto locate = [&universe, &g](const Point& p) {
        for (std::size_t i = 0; i < universe.size(); ++i)
            if (g.equality()(universe[i], p)) return i;
        return universe.size();
    };
    const std::size_t s = locate(source);
    const std::size_t t = locate(target);
    std::vector<std::size_t> parent(n, n);
    std::vector<std::size_t> depth(n, 0);
    std::vector<bool> seen(n, false);
    std::deque<std::size_t> queue{s};
    seen[s] = true;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        if (u == t) {
            std::vector<Point> path;
            for (std::size_t v = t;; v = parent[v]) {
                path.push_back(universe[v]);
                if (v == s) break;
            }
            std::reverse(path.begin(), path.end());
            query.path = std::move(path);
            return query;
        }
        if (depth[u] >= max_len) continue;
        for (std::size_t v = 0; v < n; ++v) {
            if (seen[v] || v == u) continue;
            if (g.has_edge(universe[u], universe[v])) {
                seen[v] = true;
                parent[v] = u;
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return query;
}

/// Whether the sample is connected when edge directions are ignored.
template <typename Point>
bool is_weakly_connected(const DirectedGraph<Point>& g, const std::vector<Point>& sample,
                         std::size_t max_len = 64) {
    if (sample.empty()) throw EmptySample("is_weakly_connected: empty sample");
    const DirectedGraph<Point> undirected = symmetrize(g);
    for (std::size_t i = 1; i < sample.size(); ++i)
        if (!find_path(undirected, sample[0], sample[i], max_len).path) return false;
    return true;
}

/// Whether every ordered pair drawn from the first `horizon + 1` orbit entries
/// is an edge of the symmetrized graph. This is the orbit condition the
/// convergence theory asks of a starting point.
template <typename Point>
bool check_orbit_membership(const DirectedGraph<Point>& g, const std::vector<Point>& orbit,
                            std::size_t horizon = 64) {
    if (orbit.empty()) throw EmptySample("check_orbit_membership: empty orbit");
    const std::size_t count = std::min(orbit.size(), horizon + 1);
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < count; ++j)
            if (i != j && !g.has_edge_symmetrized(orbit[i], orbit[j])) return false;
    return true;
}

/// Looks for a family of indices i with (sequence[i], limit) an edge of the
/// symmetrized graph. Returns all such indices when they make up at least half
/// of the tail (second half) of the sequence, otherwise nothing: a sparse
/// handful of hits is no witness that a subsequence converges along edges.
template <typename Point>
std::optional<std::vector<std::size_t>> subsequence_linked_to_limit(
    const DirectedGraph<Point>& g, const std::vector<Point>& sequence, const Point& limit) {
    if (sequence.empty()) throw EmptySample("subsequence_linked_to_limit: empty sequence");
    for (std::size_t i = 0; i + 1 < sequence.size(); ++i)
        if (!g.has_edge_symmetrized(sequence[i], sequence[i + 1]))
            throw PreconditionViolation(
                "subsequence_linked_to_limit: consecutive entries must be linked by edges");
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < sequence.size(); ++i)
        if (g.has_edge_symmetrized(sequence[i], limit)) hits.push_back(i);
    const std::size_t tail_start = sequence.size() / 2;
    const std::size_t tail_size = sequence.size() - tail_start;
    std::size_t tail_hits = 0;
    for (std::size_t i : hits)
        if (i >= tail_start) ++tail_hits;
    if (2 * tail_hits < tail_size) return std::nullopt;
    return hits;
}

/// Whether every ordered pair of candidates is an edge of the symmetrized
/// graph; the hypothesis under which limits are unique.
template <typename Point>
bool pairwise_connected(const DirectedGraph<Point>& g, const std::vector<Point>& candidates) {
    if (candidates.empty()) throw EmptySample("pairwise_connected: empty candidate set");
    for (std::size_t i = 0; i < candidates.size(); ++i)
        for (std::size_t j = 0; j < candidates.size(); ++j)
            if (i != j && !g.has_edge_symmetrized(candidates[i], candidates[j])) return false;
    return true;
}

/// An infinite edge family over the reals, addressable by index for
/// deterministic sampling and by a random draw for fuzzing.
struct EdgeFamily {
    std::string name;
    std::function<bool(double, double)> contains;
    std::function<std::pair<double, double>(std::size_t)> enumerate;
    std::function<std::pair<double, double>(std::mt19937_64&)> sample;
};

/// Edges (0, base^-n) for n = 0, 1, 2, ... plus loops.
inline EdgeFamily zero_to_powers_family(double base = 3.0) {
    if (!(base > 1.0))
        throw PreconditionViolation("zero_to_powers_family: base must exceed 1");
    EdgeFamily family;
    family.name = "zero_to_powers";
    family.contains = [base](double x, double y) {
        if (std::abs(x) > kPointTol) return false;
        if (!(y > 0.0)) return false;
        const double n = std::round(-std::log(y) / std::log(base));
        if (n < 0.0) return false;
        return std::abs(y - std::pow(base, -n)) <= kPointTol;
    };
    family.enumerate = [base](std::size_t k) {
        return std::make_pair(0.0, std::pow(base, -static_cast<double>(k)));
    };
    family.sample = [base](std::mt19937_64& rng) {
        std::uniform_int_distribution<int> pick(0, 200);
        return std::make_pair(0.0, std::pow(base, -pick(rng)));
    };
    return family;
}

/// Edges (base^t * z, base^t * (z + 1)) for integer t >= 0 and real z >= min_z,
/// plus loops.
inline EdgeFamily power_scaled_successor_family(double base = 3.0, double min_z = 2.0) {
    if (!(base > 1.0))
        throw PreconditionViolation("power_scaled_successor_family: base must exceed 1");
    EdgeFamily family;
    family.name = "power_scaled_successor";
    family.contains = [base, min_z](double x, double y) {
        for (int t = 0; t < 512; ++t) {
            const double scale = std::pow(base, t);
            const double z = x / scale;
            if (z < min_z - kPointTol) return false;
            if (std::abs(y - scale * (z + 1.0)) <= kPointTol * std::max(1.0, std::abs(y)))
                return true;
        }
        return false;
    };
    family.enumerate = [base, min_z](std::size_t k) {
        const double t = static_cast<double>(k / 8);
        const double z = min_z + static_cast<double>(k % 8);
        const double scale = std::pow(base, t);
        return std::make_pair(scale * z, scale * (z + 1.0));
    };
    family.sample = [base, min_z](std::mt19937_64& rng) {
        std::uniform_int_distribution<int> pick_t(0, 12);
        std::uniform_real_distribution<double> pick_z(min_z, min_z + 50.0);
        const double scale = std::pow(base, pick_t(rng));
        const double z = pick_z(rng);
        return std::make_pair(scale * z, scale * (z + 1.0));
    };
    return family;
}

struct EdgeSampleSpec {
    std::size_t enumerated = 32;
    std::size_t random = 32;
};

/// Deterministic prefix of the family plus random draws.
inline std::vector<std::pair<double, double>> sample_edges(const EdgeFamily& family,
                                                           const EdgeSampleSpec& spec,
                                                           std::mt19937_64& rng) {
    std::vector<std::pair<double, double>> edges;
    edges.reserve(spec.enumerated + spec.random);
    for (std::size_t k = 0; k < spec.enumerated; ++k) edges.push_back(family.enumerate(k));
    for (std::size_t k = 0; k < spec.random; ++k) edges.push_back(family.sample(rng));
    return edges;
}

/// Graph whose edge relation is the family plus loops, carrying a finite
/// vertex sample for traversal queries.
inline DirectedGraph<double> graph_from_family(const EdgeFamily& family,
                                               std::vector<double> vertex_sample) {
    return DirectedGraph<double>(
        std::move(vertex_sample),
        [contains = family.contains](const double& x, const double& y) { return contains(x, y); },
        [](const double& a, const double& b) { return points_close(a, b); });
}

} // namespace cstarfix
