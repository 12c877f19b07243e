#pragma once

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "algebra.hpp"
#include "errors.hpp"
#include "integral.hpp"
#include "stein.hpp"

namespace cstarfix {

using Json = nlohmann::json;

namespace io {

inline void require_object(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

/// Strict key policy: unknown fields are rejected so typos never pass silently.
inline void reject_unknown_keys(const Json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
    require_object(j, where);
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError(where + ": unknown field \"" + key + "\"");
}

inline const Json& require_field(const Json& j, const std::string& key,
                                 const std::string& where) {
    require_object(j, where);
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing field \"" + key + "\"");
    return *it;
}

inline double require_number(const Json& j, const std::string& key, const std::string& where) {
    const Json& field = require_field(j, key, where);
    if (!field.is_number()) throw ConfigError(where + ": field \"" + key + "\" must be a number");
    return field.get<double>();
}

inline Eigen::Index require_integer(const Json& j, const std::string& key,
                                    const std::string& where) {
    const Json& field = require_field(j, key, where);
    if (!field.is_number_integer())
        throw ConfigError(where + ": field \"" + key + "\" must be an integer");
    return field.get<Eigen::Index>();
}

inline std::string require_string(const Json& j, const std::string& key,
                                  const std::string& where) {
    const Json& field = require_field(j, key, where);
    if (!field.is_string()) throw ConfigError(where + ": field \"" + key + "\" must be a string");
    return field.get<std::string>();
}

inline std::vector<std::vector<double>> require_grid(const Json& field, Eigen::Index dim,
                                                     const std::string& where) {
    if (!field.is_array() || field.size() != static_cast<std::size_t>(dim))
        throw ConfigError(where + ": expected " + std::to_string(dim) + " rows");
    std::vector<std::vector<double>> rows;
    for (const auto& row : field) {
        if (!row.is_array() || row.size() != static_cast<std::size_t>(dim))
            throw ConfigError(where + ": expected square rows of length " + std::to_string(dim));
        std::vector<double> values;
        for (const auto& entry : row) {
            if (!entry.is_number())
                throw ConfigError(where + ": matrix entries must be numbers");
            values.push_back(entry.get<double>());
        }
        rows.push_back(std::move(values));
    }
    return rows;
}

} // namespace io

/// Matrix wire format: {"dim": n, "re": [[...]], "im": [[...]]}, row-major.
/// "im" may be omitted for real matrices.
inline Json matrix_to_json(const AlgebraElement& a) {
    require_square(a, "matrix_to_json");
    Json re = Json::array();
    Json im = Json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        Json re_row = Json::array();
        Json im_row = Json::array();
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            re_row.push_back(a(i, j).real());
            im_row.push_back(a(i, j).imag());
        }
        re.push_back(std::move(re_row));
        im.push_back(std::move(im_row));
    }
    return Json{{"dim", a.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

inline AlgebraElement matrix_from_json(const Json& j, const std::string& where = "matrix") {
    io::reject_unknown_keys(j, {"dim", "re", "im"}, where);
    const Eigen::Index dim = io::require_integer(j, "dim", where);
    if (dim < 1) throw ConfigError(where + ": dim must be >= 1");
    const auto re = io::require_grid(io::require_field(j, "re", where), dim, where + ".re");
    std::vector<std::vector<double>> im;
    if (j.contains("im")) im = io::require_grid(j.at("im"), dim, where + ".im");
    AlgebraElement a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index k = 0; k < dim; ++k)
            a(i, k) = Complex(re[i][k], im.empty() ? 0.0 : im[i][k]);
    return a;
}

inline Json vector_to_json(const Eigen::VectorXd& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline Eigen::VectorXd vector_from_json(const Json& j, const std::string& where = "vector") {
    if (!j.is_array()) throw ConfigError(where + ": expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const auto& entry : j) {
        if (!entry.is_number()) throw ConfigError(where + ": entries must be numbers");
        v[i++] = entry.get<double>();
    }
    return v;
}

/// Operator problem wire format:
/// {"dim": n, "coefficients": [matrix...], "Q": matrix}.
inline Json stein_to_json(const SteinProblem& problem) {
    Json coefficients = Json::array();
    for (const auto& B : problem.coefficients) coefficients.push_back(matrix_to_json(B));
    return Json{{"dim", problem.dim},
                {"coefficients", std::move(coefficients)},
                {"Q", matrix_to_json(problem.Q)}};
}

inline SteinProblem stein_from_json(const Json& j, const std::string& where = "stein problem") {
    io::reject_unknown_keys(j, {"dim", "coefficients", "Q"}, where);
    SteinProblem problem;
    problem.dim = io::require_integer(j, "dim", where);
    const Json& coefficients = io::require_field(j, "coefficients", where);
    if (!coefficients.is_array() || coefficients.empty())
        throw ConfigError(where + ": \"coefficients\" must be a nonempty array");
    for (std::size_t k = 0; k < coefficients.size(); ++k)
        problem.coefficients.push_back(
            matrix_from_json(coefficients[k], where + ".coefficients[" + std::to_string(k) + "]"));
    problem.Q = matrix_from_json(io::require_field(j, "Q", where), where + ".Q");
    validate_stein_shapes(problem);
    return problem;
}

/// Deterministic random instance: `terms` coefficients scaled so the sum of
/// squared spectral norms hits beta_target, Q = R R* + identity.
inline SteinProblem generate_stein(Eigen::Index dim, std::size_t terms, double beta_target,
                                   std::uint64_t seed) {
    if (dim < 1 || terms < 1)
        throw ConfigError("generate_stein: dim and terms must be >= 1");
    if (!(beta_target > 0.0 && beta_target < 0.5))
        throw ConfigError("generate_stein: beta_target must lie in (0, 1/2)");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_matrix = [&] {
        AlgebraElement a(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i)
            for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
        return a;
    };
    SteinProblem problem;
    problem.dim = dim;
    for (std::size_t k = 0; k < terms; ++k) problem.coefficients.push_back(random_matrix());
    double raw = 0.0;
    for (const auto& B : problem.coefficients) {
        const double b = norm(B, NormMode::Spectral);
        raw += b * b;
    }
    const double scale = std::sqrt(beta_target / raw);
    for (auto& B : problem.coefficients) B *= scale;
    const AlgebraElement R = random_matrix();
    problem.Q = R * R.adjoint() + identity_element(dim);
    return problem;
}

namespace io {

/// Named 1-Lipschitz shapes for genuinely nonlinear kernels; each yields
/// k(t,s,u) = beta * phi(t,s) * shape(u), which satisfies the domination gate
/// by construction.
inline std::function<double(double)> lipschitz_shape(const std::string& name,
                                                     const std::string& where) {
    if (name == "sin") return [](double u) { return std::sin(u); };
    if (name == "tanh") return [](double u) { return std::tanh(u); };
    if (name == "atan") return [](double u) { return std::atan(u); };
    throw ConfigError(where + ": unknown kernel expression \"" + name +
                      "\" (known: sin, tanh, atan)");
}

inline std::function<double(double, double)> phi_from_json(const Json& j,
                                                           const std::string& where) {
    const std::string kind = require_string(j, "kind", where);
    if (kind == "product") {
        reject_unknown_keys(j, {"kind"}, where);
        return [](double t, double s) { return t * s; };
    }
    if (kind == "constant") {
        reject_unknown_keys(j, {"kind", "value"}, where);
        const double value = require_number(j, "value", where);
        return [value](double, double) { return value; };
    }
    throw ConfigError(where + ": unknown phi kind \"" + kind + "\" (known: product, constant)");
}

} // namespace io

/// Integral problem wire format:
/// {"lo":0,"hi":1,"m":64,"p":2,"beta":0.2,
///  "kernel":{"kind":"linear_phi","phi":{...},"offset":c?} |
///           {"kind":"custom","phi":{...},"expr":"sin"},
///  "g":[...] | {"kind":"constant","value":v}}.
inline IntegralProblem integral_from_json(const Json& j,
                                          const std::string& where = "integral problem") {
    io::reject_unknown_keys(j, {"lo", "hi", "m", "p", "beta", "kernel", "g"}, where);
    IntegralProblem problem;
    problem.lo = io::require_number(j, "lo", where);
    problem.hi = io::require_number(j, "hi", where);
    problem.m = io::require_integer(j, "m", where);
    problem.p = io::require_number(j, "p", where);
    problem.beta = io::require_number(j, "beta", where);

    const Json& kernel = io::require_field(j, "kernel", where);
    const std::string kind = io::require_string(kernel, "kind", where + ".kernel");
    const double beta = problem.beta;
    if (kind == "linear_phi") {
        io::reject_unknown_keys(kernel, {"kind", "phi", "offset"}, where + ".kernel");
        problem.phi = io::phi_from_json(io::require_field(kernel, "phi", where + ".kernel"),
                                        where + ".kernel.phi");
        double offset = 0.0;
        if (kernel.contains("offset")) {
            if (!kernel.at("offset").is_number())
                throw ConfigError(where + ".kernel: \"offset\" must be a number");
            offset = kernel.at("offset").get<double>();
        }
        const auto phi = problem.phi;
        problem.kernel = [beta, phi, offset](double t, double s, double u) {
            return beta * phi(t, s) * u + offset;
        };
        problem.kernel_affine = true;
        problem.affine_offset = [offset](double, double) { return offset; };
    } else if (kind == "custom") {
        io::reject_unknown_keys(kernel, {"kind", "phi", "expr"}, where + ".kernel");
        problem.phi = io::phi_from_json(io::require_field(kernel, "phi", where + ".kernel"),
                                        where + ".kernel.phi");
        const auto shape = io::lipschitz_shape(
            io::require_string(kernel, "expr", where + ".kernel"), where + ".kernel");
        const auto phi = problem.phi;
        problem.kernel = [beta, phi, shape](double t, double s, double u) {
            return beta * phi(t, s) * shape(u);
        };
        problem.kernel_affine = false;
    } else {
        throw ConfigError(where + ".kernel: unknown kind \"" + kind +
                          "\" (known: linear_phi, custom)");
    }

    const Json& g = io::require_field(j, "g", where);
    if (g.is_array()) {
        problem.g = vector_from_json(g, where + ".g");
    } else if (g.is_object()) {
        io::reject_unknown_keys(g, {"kind", "value"}, where + ".g");
        if (io::require_string(g, "kind", where + ".g") != "constant")
            throw ConfigError(where + ".g: unknown kind");
        problem.g =
            Eigen::VectorXd::Constant(problem.m, io::require_number(g, "value", where + ".g"));
    } else {
        throw ConfigError(where + ".g: expected an array or a constant spec");
    }
    validate_integral_shapes(problem);
    return problem;
}

} // namespace cstarfix
