#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <cstarfix/integral.hpp>
#include <cstarfix/io.hpp>
#include <cstarfix/stein.hpp>

using namespace cstarfix;

namespace {

SteinProblem halving_problem() {
    SteinProblem problem;
    problem.dim = 2;
    problem.coefficients.push_back(0.5 * identity_element(2));
    problem.Q = identity_element(2);
    return problem;
}

double max_abs_diff(const AlgebraElement& a, const AlgebraElement& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

IntegralProblem constant_problem(Eigen::Index m) {
    IntegralProblem problem;
    problem.lo = 0.0;
    problem.hi = 1.0;
    problem.m = m;
    problem.p = 1.0;
    problem.beta = 0.2;
    problem.phi = [](double, double) { return 1.0; };
    problem.kernel = [](double, double, double u) { return 0.2 * u; };
    problem.kernel_affine = true;
    problem.g = Eigen::VectorXd::Ones(m);
    return problem;
}

IntegralProblem product_problem(Eigen::Index m, double beta, double p) {
    IntegralProblem problem;
    problem.lo = 0.0;
    problem.hi = 1.0;
    problem.m = m;
    problem.p = p;
    problem.beta = beta;
    problem.phi = [](double t, double s) { return t * s; };
    problem.kernel = [beta](double t, double s, double u) { return beta * t * s * u; };
    problem.kernel_affine = true;
    problem.g = Eigen::VectorXd::Ones(m);
    return problem;
}

} // namespace

TEST_CASE("operator iteration solves the halving instance exactly") {
    const SteinProblem problem = halving_problem();
    REQUIRE(stein_beta(problem) == 0.25);
    REQUIRE(stein_quartic_sum(problem) == 0.0625);
    REQUIRE(max_abs_diff(stein_apply(problem, identity_element(2)),
                         AlgebraElement(1.25 * identity_element(2))) == 0.0);
    const AlgebraElement X = stein_iterate(problem, 1e-13, 200);
    REQUIRE(max_abs_diff(X, AlgebraElement((4.0 / 3.0) * identity_element(2))) < 1e-12);
    const AlgebraElement direct = stein_oracle(problem);
    REQUIRE(max_abs_diff(direct, AlgebraElement((4.0 / 3.0) * identity_element(2))) < 1e-14);
}

TEST_CASE("operator iteration matches the entrywise analytic solution") {
    SteinProblem problem;
    problem.dim = 2;
    AlgebraElement B = zero_element(2);
    B(0, 0) = 0.5;
    B(1, 1) = 1.0 / 3.0;
    problem.coefficients.push_back(B);
    problem.Q = AlgebraElement(2, 2);
    problem.Q << Complex(1.0), Complex(1.0), Complex(1.0), Complex(2.0);
    REQUIRE(stein_beta(problem) == Catch::Approx(0.25).epsilon(1e-14));

    AlgebraElement expected(2, 2);
    expected << Complex(4.0 / 3.0), Complex(6.0 / 5.0), Complex(6.0 / 5.0), Complex(9.0 / 4.0);
    REQUIRE(max_abs_diff(stein_iterate(problem, 1e-14, 500), expected) < 1e-12);
    REQUIRE(max_abs_diff(stein_oracle(problem), expected) < 1e-13);
}

TEST_CASE("operator iteration and the vectorized solve agree on random instances") {
    const struct {
        Eigen::Index dim;
        std::size_t terms;
        double beta;
        std::uint64_t seed;
    } cases[] = {{2, 1, 0.3, 11}, {3, 2, 0.45, 12}, {4, 3, 0.2, 13}, {6, 4, 0.4, 14},
                 {5, 2, 0.49, 15}};
    for (const auto& c : cases) {
        const SteinProblem problem = generate_stein(c.dim, c.terms, c.beta, c.seed);
        REQUIRE(stein_beta(problem) == Catch::Approx(c.beta).epsilon(1e-12));
        std::vector<AlgebraElement> iterates;
        const AlgebraElement X = stein_iterate(problem, 1e-12, 10000, &iterates);
        const AlgebraElement direct = stein_oracle(problem);
        REQUIRE(max_abs_diff(X, direct) < 1e-9);
        REQUIRE((X - X.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
        REQUIRE(is_positive(X).is_positive);
        for (std::size_t n = 2; n < iterates.size(); ++n) {
            const double prev = norm(AlgebraElement(iterates[n - 1] - iterates[n - 2]));
            const double cur = norm(AlgebraElement(iterates[n] - iterates[n - 1]));
            REQUIRE(cur <= c.beta * prev * (1.0 + 1e-9) + 1e-15);
        }
    }
}

TEST_CASE("operator gates reject out-of-range instances") {
    SECTION("coefficient mass at or above one half") {
        SteinProblem problem = halving_problem();
        problem.coefficients[0] = 0.8 * identity_element(2);
        REQUIRE(stein_beta(problem) == Catch::Approx(0.64).epsilon(1e-14));
        REQUIRE_THROWS_AS(validate_stein(problem), GateViolation);
        REQUIRE_THROWS_AS(stein_iterate(problem), GateViolation);
    }
    SECTION("right-hand side must be positive") {
        SteinProblem problem = halving_problem();
        problem.Q = -identity_element(2);
        REQUIRE_THROWS_AS(validate_stein(problem), GateViolation);
    }
    SECTION("shape mismatches") {
        SteinProblem problem = halving_problem();
        problem.coefficients[0] = 0.5 * identity_element(3);
        REQUIRE_THROWS_AS(validate_stein_shapes(problem), DimensionMismatch);
        problem = halving_problem();
        problem.Q = identity_element(3);
        REQUIRE_THROWS_AS(validate_stein_shapes(problem), DimensionMismatch);
        problem = halving_problem();
        problem.coefficients.clear();
        REQUIRE_THROWS_AS(validate_stein_shapes(problem), PreconditionViolation);
        REQUIRE_THROWS_AS(stein_apply(halving_problem(), identity_element(3)),
                          DimensionMismatch);
    }
    SECTION("iteration budget") {
        REQUIRE_THROWS_AS(stein_iterate(halving_problem(), 1e-12, 1), NoConvergence);
    }
}

TEST_CASE("vectorized solve works beyond the certified range but the iteration refuses") {
    SteinProblem problem;
    problem.dim = 2;
    problem.coefficients.push_back(0.9 * identity_element(2));
    problem.Q = identity_element(2);
    REQUIRE_THROWS_AS(stein_iterate(problem), GateViolation);
    const AlgebraElement X = stein_oracle(problem);
    REQUIRE(max_abs_diff(X, AlgebraElement((1.0 / 0.19) * identity_element(2))) < 1e-12);
}

TEST_CASE("vectorized solve reports a singular system") {
    SteinProblem problem;
    problem.dim = 2;
    problem.coefficients.push_back(identity_element(2));
    problem.Q = identity_element(2);
    REQUIRE_THROWS_AS(stein_oracle(problem), SingularSystem);
}

TEST_CASE("constant-kernel quadrature equation has the closed-form value") {
    std::mt19937_64 rng(21);
    const IntegralProblem problem = constant_problem(16);
    const Eigen::VectorXd x = integral_solve(problem, rng, 1e-13, 1000);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        REQUIRE(x[i] == Catch::Approx(1.25).margin(1e-12));
    const Eigen::VectorXd direct = integral_oracle(problem);
    for (Eigen::Index i = 0; i < direct.size(); ++i)
        REQUIRE(direct[i] == Catch::Approx(1.25).margin(1e-13));
}

TEST_CASE("product-kernel quadrature iteration matches the dense solve") {
    std::mt19937_64 rng(22);
    const IntegralProblem problem = product_problem(64, 0.2, 1.0);
    const Eigen::VectorXd x = integral_solve(problem, rng, 1e-12);
    const Eigen::VectorXd direct = integral_oracle(problem);
    REQUIRE((x - direct).cwiseAbs().maxCoeff() < 1e-8);
    const Eigen::VectorXd residual = integral_apply(problem, x) - x;
    REQUIRE(residual.cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("affine offset kernels agree between iteration and dense solve") {
    std::mt19937_64 rng(23);
    IntegralProblem problem = product_problem(32, 0.3, 1.0);
    problem.kernel = [](double t, double s, double u) { return 0.3 * t * s * u + 0.5; };
    problem.affine_offset = [](double, double) { return 0.5; };
    const Eigen::VectorXd x = integral_solve(problem, rng, 1e-13);
    const Eigen::VectorXd direct = integral_oracle(problem);
    REQUIRE((x - direct).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("quadrature gates reject out-of-range instances") {
    std::mt19937_64 rng(24);
    SECTION("beta above the exponent cap") {
        IntegralProblem problem = product_problem(16, 0.8, 1.0);
        REQUIRE_THROWS_AS(validate_integral(problem, rng), GateViolation);
        problem = product_problem(16, 0.6, 2.0);
        REQUIRE_THROWS_AS(validate_integral(problem, rng), GateViolation);
        problem = product_problem(16, 0.0, 1.0);
        REQUIRE_THROWS_AS(validate_integral(problem, rng), GateViolation);
    }
    SECTION("beta below the stricter cap still passes") {
        IntegralProblem problem = product_problem(16, 0.45, 2.0);
        problem.kernel = [](double t, double s, double u) { return 0.45 * t * s * u; };
        REQUIRE_NOTHROW(validate_integral(problem, rng));
    }
    SECTION("quadrature row sums above one") {
        IntegralProblem problem = constant_problem(16);
        problem.phi = [](double, double) { return 2.0; };
        problem.kernel = [](double, double, double u) { return 0.4 * u; };
        REQUIRE_THROWS_AS(validate_integral(problem, rng), GateViolation);
    }
    SECTION("kernel not dominated in its third argument") {
        IntegralProblem problem = constant_problem(16);
        problem.kernel = [](double, double, double u) { return 0.2 * u * u; };
        problem.kernel_affine = false;
        REQUIRE_THROWS_AS(validate_integral(problem, rng), GateViolation);
    }
    SECTION("shape violations") {
        IntegralProblem problem = constant_problem(16);
        problem.m = 0;
        REQUIRE_THROWS_AS(validate_integral_shapes(problem), DimensionMismatch);
        problem = constant_problem(16);
        problem.hi = problem.lo;
        REQUIRE_THROWS_AS(validate_integral_shapes(problem), PreconditionViolation);
        problem = constant_problem(16);
        problem.p = 0.5;
        REQUIRE_THROWS_AS(validate_integral_shapes(problem), PreconditionViolation);
        problem = constant_problem(16);
        problem.g = Eigen::VectorXd::Ones(4);
        REQUIRE_THROWS_AS(validate_integral_shapes(problem), DimensionMismatch);
        problem = constant_problem(16);
        problem.kernel = nullptr;
        REQUIRE_THROWS_AS(validate_integral_shapes(problem), PreconditionViolation);
    }
    SECTION("iteration budget") {
        IntegralProblem problem = constant_problem(16);
        Eigen::VectorXd far = Eigen::VectorXd::Constant(16, 1e6);
        REQUIRE_THROWS_AS(
            integral_solve(problem, rng, 1e-13, 1, nullptr, std::optional<Eigen::VectorXd>(far)),
            NoConvergence);
    }
}

TEST_CASE("dense solve refuses kernels without affine structure") {
    IntegralProblem problem = constant_problem(8);
    problem.kernel = [](double, double, double u) { return 0.2 * std::sin(u); };
    problem.kernel_affine = false;
    REQUIRE_THROWS_AS(integral_oracle(problem), NonlinearKernel);
}

TEST_CASE("bounded-slope kernels pass the gates and converge") {
    std::mt19937_64 rng(25);
    const auto shapes = {"sin", "tanh", "atan"};
    for (const auto* name : shapes) {
        const auto shape = io::lipschitz_shape(name, "test");
        IntegralProblem problem = product_problem(48, 0.25, 2.0);
        problem.kernel = [shape](double t, double s, double u) { return 0.25 * t * s * shape(u); };
        problem.kernel_affine = false;
        REQUIRE_NOTHROW(validate_integral(problem, rng));
        const Eigen::VectorXd x = integral_solve(problem, rng, 1e-12);
        const Eigen::VectorXd residual = integral_apply(problem, x) - x;
        REQUIRE(residual.cwiseAbs().maxCoeff() < 1e-11);
    }
}

TEST_CASE("quadrature iterates contract at the advertised rate") {
    std::mt19937_64 rng(26);
    const IntegralProblem problem = product_problem(32, 0.2, 1.0);
    std::vector<Eigen::VectorXd> iterates;
    integral_solve(problem, rng, 1e-12, 10000, &iterates);
    REQUIRE(iterates.size() >= 3);
    for (std::size_t n = 2; n < iterates.size(); ++n) {
        const double prev = (iterates[n - 1] - iterates[n - 2]).cwiseAbs().maxCoeff();
        const double cur = (iterates[n] - iterates[n - 1]).cwiseAbs().maxCoeff();
        REQUIRE(cur <= problem.beta * prev * (1.0 + 1e-9) + 1e-15);
    }
}

TEST_CASE("random instance generator hits its target mass") {
    REQUIRE_THROWS_AS(generate_stein(0, 1, 0.3, 1), ConfigError);
    REQUIRE_THROWS_AS(generate_stein(2, 0, 0.3, 1), ConfigError);
    REQUIRE_THROWS_AS(generate_stein(2, 1, 0.5, 1), ConfigError);
    REQUIRE_THROWS_AS(generate_stein(2, 1, 0.0, 1), ConfigError);
    const SteinProblem a = generate_stein(3, 2, 0.4, 99);
    const SteinProblem b = generate_stein(3, 2, 0.4, 99);
    REQUIRE(max_abs_diff(a.Q, b.Q) == 0.0);
    for (std::size_t k = 0; k < a.coefficients.size(); ++k)
        REQUIRE(max_abs_diff(a.coefficients[k], b.coefficients[k]) == 0.0);
    REQUIRE(is_positive(a.Q).is_positive);
    REQUIRE_NOTHROW(validate_stein(a));
}
