#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <cstarfix/graph.hpp>

using namespace cstarfix;

namespace {

bool eq(const double& a, const double& b) { return points_close(a, b); }

DirectedGraph<double> chain_graph() {
    return DirectedGraph<double>({0.0, 1.0, 2.0, 3.0}, {{0.0, 1.0}, {1.0, 2.0}, {2.0, 3.0}}, eq);
}

} // namespace

TEST_CASE("edges include implicit loops") {
    const auto g = chain_graph();
    REQUIRE(g.has_edge(0.0, 0.0));
    REQUIRE(g.has_edge(7.0, 7.0));
    REQUIRE(g.has_edge(0.0, 1.0));
    REQUIRE_FALSE(g.has_edge(1.0, 0.0));
    REQUIRE_FALSE(g.has_edge(0.0, 2.0));
}

TEST_CASE("reverse flips every edge and symmetrize keeps both directions") {
    const auto g = chain_graph();
    const auto rev = reverse(g);
    REQUIRE(rev.has_edge(1.0, 0.0));
    REQUIRE_FALSE(rev.has_edge(0.0, 1.0));
    REQUIRE(rev.has_edge(5.0, 5.0));
    const auto sym = symmetrize(g);
    REQUIRE(sym.has_edge(0.0, 1.0));
    REQUIRE(sym.has_edge(1.0, 0.0));
    REQUIRE_FALSE(sym.has_edge(0.0, 2.0));
    REQUIRE(g.has_edge_symmetrized(1.0, 0.0));
}

TEST_CASE("reverse of a predicate graph flips the predicate") {
    const DirectedGraph<double> g({1.0, 2.0},
                                  [](const double& x, const double& y) { return y == x + 1.0; },
                                  eq);
    REQUIRE(g.has_edge(1.0, 2.0));
    const auto rev = reverse(g);
    REQUIRE(rev.has_edge(2.0, 1.0));
    REQUIRE_FALSE(rev.has_edge(1.0, 2.0));
}

TEST_CASE("breadth-first search returns a shortest path") {
    const auto g = chain_graph();
    const auto q = find_path(g, 0.0, 3.0);
    REQUIRE(q.path.has_value());
    REQUIRE(q.path->size() == 4);
    REQUIRE((*q.path)[0] == 0.0);
    REQUIRE((*q.path)[3] == 3.0);
    REQUIRE_FALSE(find_path(g, 3.0, 0.0).path.has_value());
    REQUIRE_FALSE(find_path(g, 0.0, 3.0, 2).path.has_value());
    const auto loop = find_path(g, 2.0, 2.0);
    REQUIRE(loop.path.has_value());
    REQUIRE(loop.path->size() == 1);
}

TEST_CASE("path through the zero hub connects two powers") {
    const auto family = zero_to_powers_family(3.0);
    std::vector<double> vertices{0.0};
    for (int n = 0; n < 8; ++n) vertices.push_back(std::pow(3.0, -n));
    const auto g = graph_from_family(family, vertices);
    const auto sym = symmetrize(g);
    const auto q = find_path(sym, 1.0 / 3.0, 1.0 / 9.0);
    REQUIRE(q.path.has_value());
    REQUIRE(q.path->size() == 3);
    REQUIRE((*q.path)[1] == 0.0);
}

TEST_CASE("weak connectivity finds the isolated vertex") {
    const auto family = zero_to_powers_family(3.0);
    std::vector<double> vertices{0.0, 7.0};
    for (int n = 0; n < 6; ++n) vertices.push_back(std::pow(3.0, -n));
    const auto g = graph_from_family(family, vertices);
    std::vector<double> connected{0.0, 1.0, 1.0 / 3.0, 1.0 / 9.0};
    REQUIRE(is_weakly_connected(g, connected));
    std::vector<double> with_outsider{0.0, 1.0, 7.0};
    REQUIRE_FALSE(is_weakly_connected(g, with_outsider));
    REQUIRE_THROWS_AS(is_weakly_connected(g, std::vector<double>{}), EmptySample);
}

TEST_CASE("orbit membership checks all pairs up to the horizon") {
    const auto family = zero_to_powers_family(3.0);
    const auto g = graph_from_family(family, {0.0});
    std::vector<double> good{0.0, 1.0 / 27.0, 0.0, 1.0 / 27.0, 0.0};
    REQUIRE(check_orbit_membership(g, good));
    // two distinct powers both touch the hub, but the pair between them is
    // not an edge, and the condition quantifies over all pairs
    std::vector<double> two_powers{0.0, 1.0, 1.0 / 3.0};
    REQUIRE_FALSE(check_orbit_membership(g, two_powers));
    std::vector<double> bad{0.0, 1.0 / 3.0, 7.0};
    REQUIRE_FALSE(check_orbit_membership(g, bad));
    std::vector<double> late_break{0.0, 1.0 / 3.0, 0.0, 7.0};
    REQUIRE(check_orbit_membership(g, late_break, 2));
    REQUIRE_FALSE(check_orbit_membership(g, late_break, 3));
    REQUIRE_THROWS_AS(check_orbit_membership(g, std::vector<double>{}), EmptySample);
}

TEST_CASE("constant orbits are always inside via loops") {
    const DirectedGraph<double> empty({5.0}, std::vector<std::pair<double, double>>{}, eq);
    std::vector<double> orbit(10, 5.0);
    REQUIRE(check_orbit_membership(empty, orbit));
}

TEST_CASE("alternating sequence is linked to its limit") {
    const auto family = zero_to_powers_family(3.0);
    const auto g = graph_from_family(family, {0.0});
    std::vector<double> sequence;
    for (int n = 0; n < 12; ++n) sequence.push_back(n % 2 == 1 ? 0.0 : std::pow(3.0, -n));
    const auto hits = subsequence_linked_to_limit(g, sequence, 0.0);
    REQUIRE(hits.has_value());
    for (std::size_t i = 1; i < sequence.size(); i += 2)
        REQUIRE(std::find(hits->begin(), hits->end(), i) != hits->end());
}

TEST_CASE("sequence without edge links to the limit reports absence") {
    const DirectedGraph<double> g({0.0, 1.0, 2.0},
                                  {{0.0, 1.0}, {1.0, 2.0}, {2.0, 1.0}, {1.0, 0.0}}, eq);
    std::vector<double> sequence{0.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0};
    const auto hits = subsequence_linked_to_limit(g, sequence, 7.0);
    REQUIRE_FALSE(hits.has_value());
}

TEST_CASE("subsequence check requires consecutive edges") {
    const DirectedGraph<double> g({0.0, 1.0}, {{0.0, 1.0}}, eq);
    std::vector<double> sequence{0.0, 1.0, 5.0};
    REQUIRE_THROWS_AS(subsequence_linked_to_limit(g, sequence, 0.0), PreconditionViolation);
}

TEST_CASE("pairwise connectivity over candidate sets") {
    const DirectedGraph<double> g({0.0, 1.0, 2.0}, {{0.0, 1.0}, {1.0, 2.0}}, eq);
    REQUIRE(pairwise_connected(g, {0.0, 1.0}));
    REQUIRE(pairwise_connected(g, {0.0}));
    REQUIRE_FALSE(pairwise_connected(g, {0.0, 1.0, 2.0}));
    REQUIRE_THROWS_AS(pairwise_connected(g, std::vector<double>{}), EmptySample);
}

TEST_CASE("zero_to_powers family recognizes exactly its edges") {
    const auto family = zero_to_powers_family(3.0);
    REQUIRE(family.contains(0.0, 1.0));
    REQUIRE(family.contains(0.0, 1.0 / 3.0));
    REQUIRE(family.contains(0.0, std::pow(3.0, -40)));
    REQUIRE_FALSE(family.contains(0.0, 0.5));
    REQUIRE_FALSE(family.contains(0.0, 3.0));
    REQUIRE_FALSE(family.contains(1.0, 1.0 / 3.0));
    REQUIRE_FALSE(family.contains(0.0, -1.0 / 3.0));
    for (std::size_t k = 0; k < 32; ++k) {
        const auto [from, to] = family.enumerate(k);
        REQUIRE(family.contains(from, to));
    }
}

TEST_CASE("power_scaled_successor family recognizes exactly its edges") {
    const auto family = power_scaled_successor_family(3.0, 2.0);
    REQUIRE(family.contains(2.0, 3.0));
    REQUIRE(family.contains(2.5, 3.5));
    REQUIRE(family.contains(6.0, 9.0));
    REQUIRE(family.contains(9.0 * 2.7, 9.0 * 3.7));
    REQUIRE_FALSE(family.contains(1.0, 2.0));
    REQUIRE_FALSE(family.contains(2.0, 3.5));
    REQUIRE_FALSE(family.contains(5.9, 6.9 + 3.0));
    std::mt19937_64 rng(301);
    for (std::size_t k = 0; k < 32; ++k) {
        const auto [from, to] = family.enumerate(k);
        REQUIRE(family.contains(from, to));
    }
    for (int k = 0; k < 64; ++k) {
        const auto [from, to] = family.sample(rng);
        REQUIRE(family.contains(from, to));
    }
    const auto [f0, t0] = family.enumerate(0);
    REQUIRE(f0 == 2.0);
    REQUIRE(t0 == 3.0);
}

TEST_CASE("edge sampling is deterministic for a fixed seed") {
    const auto family = zero_to_powers_family(3.0);
    std::mt19937_64 rng_a(42), rng_b(42);
    const auto sample_a = sample_edges(family, {16, 16}, rng_a);
    const auto sample_b = sample_edges(family, {16, 16}, rng_b);
    REQUIRE(sample_a == sample_b);
    REQUIRE(sample_a.size() == 32);
    for (std::size_t k = 0; k < 16; ++k) REQUIRE(sample_a[k] == family.enumerate(k));
}
