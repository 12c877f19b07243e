#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "engine.hpp"
#include "errors.hpp"
#include "integral.hpp"
#include "io.hpp"
#include "stein.hpp"

namespace cstarfix {

enum class ScenarioKind { Jungck, Stein, Integral };

struct JungckScenario {
    BMetricSpace<double> space;
    std::optional<DirectedGraph<double>> graph;
    std::optional<EdgeFamily> family;
    std::vector<std::pair<double, double>> explicit_edges;
    MappingPair<double> pair;
    std::vector<double> seeds;
    ContractionFamily cert_family = ContractionFamily::BanachGraph;
    AlgebraElement B;
    NormMode mode = NormMode::Spectral;
    EdgeSampleSpec edge_spec;
    SolveOptions solver;
    std::size_t axiom_triples = 256;
    bool table_space = false;
    std::vector<double> table_points;
};

struct SteinScenario {
    SteinProblem problem;
    double tol = 1e-12;
    int max_iter = 10000;
};

struct IntegralScenario {
    IntegralProblem problem;
    double tol = 1e-12;
    int max_iter = 10000;
};

struct Scenario {
    std::string name;
    ScenarioKind kind = ScenarioKind::Jungck;
    std::optional<JungckScenario> jungck;
    std::optional<SteinScenario> stein;
    std::optional<IntegralScenario> integral;
};

namespace io {

/// Numbers may be written exactly as {"num": a, "den": b} where decimal
/// literals would lose the intended value.
inline double number_or_ratio(const Json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_object()) {
        reject_unknown_keys(j, {"num", "den"}, where);
        const double num = require_number(j, "num", where);
        const double den = require_number(j, "den", where);
        if (den == 0.0) throw ConfigError(where + ": zero denominator");
        return num / den;
    }
    throw ConfigError(where + ": expected a number or {num, den}");
}

inline AlgebraElement b_element_from_json(const Json& j, const std::string& where) {
    if (j.is_object() && j.contains("kind")) {
        reject_unknown_keys(j, {"kind", "value", "dim"}, where);
        if (require_string(j, "kind", where) != "scalar_identity")
            throw ConfigError(where + ": unknown kind");
        const Eigen::Index dim = require_integer(j, "dim", where);
        if (dim < 1) throw ConfigError(where + ": dim must be >= 1");
        return number_or_ratio(require_field(j, "value", where), where + ".value") *
               identity_element(dim);
    }
    return matrix_from_json(j, where);
}

struct MappingFns {
    std::function<double(double)> apply;
    std::function<std::optional<double>(double)> invert; ///< null when not invertible
    bool is_identity = false;
};

inline MappingFns mapping_from_json(const Json& j, const std::string& where, bool must_invert) {
    const std::string kind = require_string(j, "kind", where);
    MappingFns fns;
    if (kind == "identity") {
        reject_unknown_keys(j, {"kind"}, where);
        fns.apply = [](double x) { return x; };
        fns.invert = [](double y) { return std::optional<double>(y); };
        fns.is_identity = true;
        return fns;
    }
    if (kind == "affine") {
        reject_unknown_keys(j, {"kind", "scale", "offset"}, where);
        const double scale = number_or_ratio(require_field(j, "scale", where), where + ".scale");
        double offset = 0.0;
        if (j.contains("offset")) offset = number_or_ratio(j.at("offset"), where + ".offset");
        if (must_invert && scale == 0.0)
            throw ConfigError(where + ": a constant map cannot be inverted");
        fns.apply = [scale, offset](double x) { return scale * x + offset; };
        if (scale != 0.0)
            fns.invert = [scale, offset](double y) {
                return std::optional<double>((y - offset) / scale);
            };
        return fns;
    }
    if (kind == "scale_except_point") {
        if (must_invert)
            throw ConfigError(where + ": scale_except_point is not invertible");
        reject_unknown_keys(j, {"kind", "scale", "at", "value"}, where);
        const double scale = number_or_ratio(require_field(j, "scale", where), where + ".scale");
        const double at = number_or_ratio(require_field(j, "at", where), where + ".at");
        const double value = number_or_ratio(require_field(j, "value", where), where + ".value");
        fns.apply = [scale, at, value](double x) {
            return points_close(x, at) ? value : scale * x;
        };
        return fns;
    }
    throw ConfigError(where + ": unknown mapping kind \"" + kind +
                      "\" (known: identity, affine, scale_except_point)");
}

} // namespace io

inline BMetricSpace<double> scalar_space_from_json(const Json& j, JungckScenario& out,
                                                   const std::string& where) {
    const std::string kind = io::require_string(j, "kind", where);
    if (kind == "scalar_power") {
        io::reject_unknown_keys(j, {"kind", "p"}, where);
        return make_scalar_power_space(io::require_number(j, "p", where));
    }
    if (kind == "custom_table") {
        io::reject_unknown_keys(j, {"kind", "points", "table", "coefficient"}, where);
        const Json& points_json = io::require_field(j, "points", where);
        if (!points_json.is_array() || points_json.empty())
            throw ConfigError(where + ": \"points\" must be a nonempty array");
        std::vector<double> points;
        for (std::size_t i = 0; i < points_json.size(); ++i)
            points.push_back(io::number_or_ratio(points_json[i],
                                                 where + ".points[" + std::to_string(i) + "]"));
        const Json& table_json = io::require_field(j, "table", where);
        if (!table_json.is_array() || table_json.size() != points.size())
            throw ConfigError(where + ": \"table\" must have one row per point");
        std::vector<std::vector<AlgebraElement>> table;
        for (const auto& row_json : table_json) {
            if (!row_json.is_array() || row_json.size() != points.size())
                throw ConfigError(where + ": \"table\" must be square");
            std::vector<AlgebraElement> row;
            for (const auto& entry : row_json)
                row.push_back(matrix_from_json(entry, where + ".table entry"));
            table.push_back(std::move(row));
        }
        AlgebraElement coefficient =
            matrix_from_json(io::require_field(j, "coefficient", where), where + ".coefficient");
        out.table_space = true;
        out.table_points = points;
        try {
            return make_table_space(std::move(points), std::move(table), std::move(coefficient));
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    if (kind == "grid_function")
        throw ConfigError(where + ": grid_function spaces carry vector points and cannot host "
                          "scalar mappings; they arise inside integral scenarios");
    throw ConfigError(where + ": unknown space kind \"" + kind +
                      "\" (known: scalar_power, grid_function, custom_table)");
}

inline void graph_from_json(const Json& j, JungckScenario& out, const std::string& where) {
    io::require_object(j, where);
    if (j.contains("family")) {
        io::reject_unknown_keys(j, {"family", "base", "min_z"}, where);
        const std::string family = io::require_string(j, "family", where);
        double base = 3.0;
        if (j.contains("base")) base = io::require_number(j, "base", where);
        if (family == "zero_to_powers") {
            if (j.contains("min_z"))
                throw ConfigError(where + ": min_z does not apply to zero_to_powers");
            out.family = zero_to_powers_family(base);
        } else if (family == "power_scaled_successor") {
            double min_z = 2.0;
            if (j.contains("min_z")) min_z = io::require_number(j, "min_z", where);
            out.family = power_scaled_successor_family(base, min_z);
        } else {
            throw ConfigError(where + ": unknown family \"" + family +
                              "\" (known: zero_to_powers, power_scaled_successor)");
        }
        std::vector<double> vertices = out.seeds;
        for (std::size_t k = 0; k < 12; ++k) {
            const auto [from, to] = out.family->enumerate(k);
            vertices.push_back(from);
            vertices.push_back(to);
        }
        out.graph = graph_from_family(*out.family, std::move(vertices));
        return;
    }
    if (j.contains("edges")) {
        io::reject_unknown_keys(j, {"edges", "vertices"}, where);
        const Json& edges_json = j.at("edges");
        if (!edges_json.is_array())
            throw ConfigError(where + ": \"edges\" must be an array of pairs");
        std::vector<std::pair<double, double>> edges;
        std::vector<double> vertices;
        for (const auto& edge : edges_json) {
            if (!edge.is_array() || edge.size() != 2)
                throw ConfigError(where + ": each edge must be a [from, to] pair");
            const double from = io::number_or_ratio(edge[0], where + ".edges");
            const double to = io::number_or_ratio(edge[1], where + ".edges");
            edges.emplace_back(from, to);
            vertices.push_back(from);
            vertices.push_back(to);
        }
        if (j.contains("vertices")) {
            const Json& extra = j.at("vertices");
            if (!extra.is_array()) throw ConfigError(where + ": \"vertices\" must be an array");
            for (const auto& v : extra)
                vertices.push_back(io::number_or_ratio(v, where + ".vertices"));
        }
        out.explicit_edges = edges;
        out.graph = DirectedGraph<double>(
            std::move(vertices), std::move(edges),
            [](const double& a, const double& b) { return points_close(a, b); });
        return;
    }
    throw ConfigError(where + ": expected either \"family\" or \"edges\"");
}

inline void solver_from_json(const Json& j, JungckScenario& out, const std::string& where) {
    io::reject_unknown_keys(j, {"tol", "max_iter", "horizon", "orbit_policy", "axiom_triples"},
                            where);
    if (j.contains("tol")) out.solver.tol = io::require_number(j, "tol", where);
    if (j.contains("max_iter"))
        out.solver.max_iter = static_cast<int>(io::require_integer(j, "max_iter", where));
    if (j.contains("horizon"))
        out.solver.horizon = static_cast<std::size_t>(io::require_integer(j, "horizon", where));
    if (j.contains("orbit_policy")) {
        const std::string policy = io::require_string(j, "orbit_policy", where);
        if (policy == "require")
            out.solver.require_orbit_membership = true;
        else if (policy == "observe")
            out.solver.require_orbit_membership = false;
        else
            throw ConfigError(where + ": orbit_policy must be \"require\" or \"observe\"");
    }
    if (j.contains("axiom_triples"))
        out.axiom_triples =
            static_cast<std::size_t>(io::require_integer(j, "axiom_triples", where));
}

inline Scenario scenario_from_json(const Json& j) {
    const std::string where = "scenario";
    io::require_object(j, where);
    if (io::require_integer(j, "schema", where) != 1)
        throw ConfigError(where + ": unsupported schema version");
    Scenario scenario;
    scenario.name = io::require_string(j, "name", where);
    if (scenario.name.empty() ||
        scenario.name.find_first_not_of(
            "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
            std::string::npos)
        throw ConfigError(where + ": name must be nonempty and filesystem-safe");
    const std::string kind = io::require_string(j, "kind", where);

    if (kind == "jungck") {
        io::reject_unknown_keys(j,
                                {"schema", "name", "kind", "space", "graph", "mapping", "seeds",
                                 "certificate", "solver", "edge_sample"},
                                where);
        scenario.kind = ScenarioKind::Jungck;
        JungckScenario jungck;

        const Json& seeds_json = io::require_field(j, "seeds", where);
        if (!seeds_json.is_array() || seeds_json.empty())
            throw ConfigError(where + ": \"seeds\" must be a nonempty array");
        for (std::size_t i = 0; i < seeds_json.size(); ++i)
            jungck.seeds.push_back(
                io::number_or_ratio(seeds_json[i], where + ".seeds[" + std::to_string(i) + "]"));

        jungck.space = scalar_space_from_json(io::require_field(j, "space", where), jungck,
                                              where + ".space");
        graph_from_json(io::require_field(j, "graph", where), jungck, where + ".graph");

        const Json& mapping = io::require_field(j, "mapping", where);
        io::reject_unknown_keys(mapping, {"f", "g"}, where + ".mapping");
        const io::MappingFns f = io::mapping_from_json(io::require_field(mapping, "f", where),
                                                       where + ".mapping.f", false);
        const io::MappingFns g = io::mapping_from_json(io::require_field(mapping, "g", where),
                                                       where + ".mapping.g", true);
        jungck.pair.f = f.apply;
        jungck.pair.g = g.apply;
        jungck.pair.g_preimage = g.invert;
        jungck.pair.identity_g = g.is_identity;

        const Json& cert = io::require_field(j, "certificate", where);
        io::reject_unknown_keys(cert, {"family", "B", "norm_mode"}, where + ".certificate");
        const std::string family = io::require_string(cert, "family", where + ".certificate");
        if (family == "banach")
            jungck.cert_family = ContractionFamily::BanachGraph;
        else if (family == "kannan")
            jungck.cert_family = ContractionFamily::KannanGraph;
        else
            throw ConfigError(where + ".certificate: unknown family \"" + family +
                              "\" (known: banach, kannan)");
        jungck.B = io::b_element_from_json(io::require_field(cert, "B", where + ".certificate"),
                                           where + ".certificate.B");
        if (cert.contains("norm_mode")) {
            const std::string mode = io::require_string(cert, "norm_mode", where + ".certificate");
            if (mode == "spectral")
                jungck.mode = NormMode::Spectral;
            else if (mode == "frobenius")
                jungck.mode = NormMode::Frobenius;
            else
                throw ConfigError(where + ".certificate: unknown norm_mode \"" + mode + "\"");
        }
        if (jungck.B.rows() != jungck.space.algebra_dim)
            throw ConfigError(where + ".certificate: B dimension does not match the space");

        if (j.contains("solver")) solver_from_json(j.at("solver"), jungck, where + ".solver");
        if (j.contains("edge_sample")) {
            const Json& spec = j.at("edge_sample");
            io::reject_unknown_keys(spec, {"enumerated", "random"}, where + ".edge_sample");
            if (spec.contains("enumerated"))
                jungck.edge_spec.enumerated = static_cast<std::size_t>(
                    io::require_integer(spec, "enumerated", where + ".edge_sample"));
            if (spec.contains("random"))
                jungck.edge_spec.random = static_cast<std::size_t>(
                    io::require_integer(spec, "random", where + ".edge_sample"));
        }
        scenario.jungck = std::move(jungck);
        return scenario;
    }

    if (kind == "stein") {
        io::reject_unknown_keys(j, {"schema", "name", "kind", "problem", "solver"}, where);
        scenario.kind = ScenarioKind::Stein;
        SteinScenario stein;
        const Json& problem = io::require_field(j, "problem", where);
        io::require_object(problem, where + ".problem");
        if (problem.contains("generate")) {
            io::reject_unknown_keys(problem, {"generate"}, where + ".problem");
            const Json& gen = problem.at("generate");
            io::reject_unknown_keys(gen, {"dim", "terms", "beta", "seed"},
                                    where + ".problem.generate");
            stein.problem = generate_stein(
                io::require_integer(gen, "dim", where),
                static_cast<std::size_t>(io::require_integer(gen, "terms", where)),
                io::require_number(gen, "beta", where),
                static_cast<std::uint64_t>(io::require_integer(gen, "seed", where)));
        } else if (problem.contains("file")) {
            io::reject_unknown_keys(problem, {"file"}, where + ".problem");
            const std::string path = io::require_string(problem, "file", where + ".problem");
            std::ifstream in(path);
            if (!in) throw ConfigError(where + ": cannot open problem file " + path);
            Json pj;
            try {
                in >> pj;
            } catch (const Json::exception& e) {
                throw ConfigError(where + ": problem file " + path + " is not valid JSON: " +
                                  e.what());
            }
            stein.problem = stein_from_json(pj, where + ".problem");
        } else {
            stein.problem = stein_from_json(problem, where + ".problem");
        }
        if (j.contains("solver")) {
            const Json& solver = j.at("solver");
            io::reject_unknown_keys(solver, {"tol", "max_iter"}, where + ".solver");
            if (solver.contains("tol")) stein.tol = io::require_number(solver, "tol", where);
            if (solver.contains("max_iter"))
                stein.max_iter = static_cast<int>(io::require_integer(solver, "max_iter", where));
        }
        scenario.stein = std::move(stein);
        return scenario;
    }

    if (kind == "integral") {
        io::reject_unknown_keys(j, {"schema", "name", "kind", "problem", "solver"}, where);
        scenario.kind = ScenarioKind::Integral;
        IntegralScenario integral;
        const Json& problem = io::require_field(j, "problem", where);
        io::require_object(problem, where + ".problem");
        if (problem.contains("file")) {
            io::reject_unknown_keys(problem, {"file"}, where + ".problem");
            const std::string path = io::require_string(problem, "file", where + ".problem");
            std::ifstream in(path);
            if (!in) throw ConfigError(where + ": cannot open problem file " + path);
            Json pj;
            try {
                in >> pj;
            } catch (const Json::exception& e) {
                throw ConfigError(where + ": problem file " + path + " is not valid JSON: " +
                                  e.what());
            }
            integral.problem = integral_from_json(pj, where + ".problem");
        } else {
            integral.problem = integral_from_json(problem, where + ".problem");
        }
        if (j.contains("solver")) {
            const Json& solver = j.at("solver");
            io::reject_unknown_keys(solver, {"tol", "max_iter"}, where + ".solver");
            if (solver.contains("tol")) integral.tol = io::require_number(solver, "tol", where);
            if (solver.contains("max_iter"))
                integral.max_iter =
                    static_cast<int>(io::require_integer(solver, "max_iter", where));
        }
        scenario.integral = std::move(integral);
        return scenario;
    }

    throw ConfigError(where + ": unknown kind \"" + kind +
                      "\" (known: jungck, stein, integral)");
}

/// Bundled scenarios, keyed by name; `verify` and `solve` accept these names
/// in place of a file path.
inline const std::map<std::string, std::string>& builtin_scenarios() {
    static const std::map<std::string, std::string> scenarios = {
        {"example_3_2", R"json({
  "schema": 1,
  "name": "example_3_2",
  "kind": "jungck",
  "space": {"kind": "scalar_power", "p": 2},
  "graph": {"family": "zero_to_powers", "base": 3},
  "mapping": {
    "f": {"kind": "scale_except_point", "scale": {"num": 1, "den": 3}, "at": {"num": 1, "den": 3}, "value": 1},
    "g": {"kind": "affine", "scale": 2, "offset": 0}
  },
  "seeds": [0, {"num": 1, "den": 6}, {"num": 1, "den": 486}],
  "certificate": {"family": "banach", "B": {"kind": "scalar_identity", "value": {"num": 1, "den": 4}, "dim": 2}, "norm_mode": "spectral"},
  "solver": {"tol": 1e-12, "max_iter": 200, "orbit_policy": "observe"},
  "edge_sample": {"enumerated": 32, "random": 32}
})json"},
        {"remark_3_3", R"json({
  "schema": 1,
  "name": "remark_3_3",
  "kind": "jungck",
  "space": {"kind": "scalar_power", "p": 2},
  "graph": {"family": "zero_to_powers", "base": 3},
  "mapping": {
    "f": {"kind": "scale_except_point", "scale": {"num": 1, "den": 3}, "at": {"num": 1, "den": 3}, "value": 1},
    "g": {"kind": "affine", "scale": 2, "offset": -5}
  },
  "seeds": [3],
  "certificate": {"family": "banach", "B": {"kind": "scalar_identity", "value": {"num": 1, "den": 4}, "dim": 2}, "norm_mode": "spectral"},
  "solver": {"tol": 1e-12, "max_iter": 200, "orbit_policy": "require"},
  "edge_sample": {"enumerated": 32, "random": 32}
})json"},
        {"example_3_6", R"json({
  "schema": 1,
  "name": "example_3_6",
  "kind": "jungck",
  "space": {"kind": "scalar_power", "p": 2},
  "graph": {"family": "power_scaled_successor", "base": 3, "min_z": 2},
  "mapping": {
    "f": {"kind": "affine", "scale": 3, "offset": 0},
    "g": {"kind": "affine", "scale": 9, "offset": 0}
  },
  "seeds": [0],
  "certificate": {"family": "kannan", "B": {"kind": "scalar_identity", "value": {"num": 1, "den": 52}, "dim": 2}, "norm_mode": "spectral"},
  "solver": {"tol": 1e-12, "max_iter": 200, "orbit_policy": "require"},
  "edge_sample": {"enumerated": 32, "random": 32}
})json"},
        {"stein_demo", R"json({
  "schema": 1,
  "name": "stein_demo",
  "kind": "stein",
  "problem": {"generate": {"dim": 6, "terms": 4, "beta": 0.4, "seed": 7}},
  "solver": {"tol": 1e-18, "max_iter": 10000}
})json"},
        {"integral_demo", R"json({
  "schema": 1,
  "name": "integral_demo",
  "kind": "integral",
  "problem": {
    "lo": 0, "hi": 1, "m": 64, "p": 1, "beta": 0.2,
    "kernel": {"kind": "linear_phi", "phi": {"kind": "product"}},
    "g": {"kind": "constant", "value": 1}
  },
  "solver": {"tol": 1e-12, "max_iter": 10000}
})json"}};
    return scenarios;
}

/// Accepts a builtin scenario name or a path to a scenario file.
inline Scenario load_scenario(const std::string& ref) {
    std::string text;
    const auto& builtins = builtin_scenarios();
    if (auto it = builtins.find(ref); it != builtins.end()) {
        text = it->second;
    } else {
        std::ifstream in(ref);
        if (!in)
            throw ConfigError("cannot open scenario \"" + ref +
                              "\" (not a builtin name and not a readable file)");
        std::ostringstream buffer;
        buffer << in.rdbuf();
        text = buffer.str();
    }
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigError("scenario \"" + ref + "\" is not valid JSON: " + e.what());
    }
    return scenario_from_json(j);
}

struct RunOptions {
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string format = "csv"; ///< "csv" or "jsonl"
};

struct RunResult {
    int code = 0;
    Json report;
};

namespace detail {

inline std::string fmt_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

inline std::string trace_rows_csv(const std::vector<double>& steps,
                                  const std::vector<double>& bounds) {
    std::string out = "n,step_norm,apriori_bound\n";
    for (std::size_t n = 0; n < steps.size(); ++n) {
        out += std::to_string(n);
        out += ',';
        out += fmt_double(steps[n]);
        out += ',';
        out += fmt_double(n < bounds.size() ? bounds[n] : 0.0);
        out += '\n';
    }
    return out;
}

inline std::string trace_rows_jsonl(const std::vector<double>& steps,
                                    const std::vector<double>& bounds) {
    std::string out;
    for (std::size_t n = 0; n < steps.size(); ++n) {
        Json row{{"n", n},
                 {"step_norm", steps[n]},
                 {"apriori_bound", n < bounds.size() ? bounds[n] : 0.0}};
        out += row.dump();
        out += '\n';
    }
    return out;
}

inline void write_file(const std::string& dir, const std::string& filename,
                       const std::string& content, std::ostream& log) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path path = fs::path(dir) / filename;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
    log << "wrote " << path.string() << "\n";
}

inline void write_trace(const RunOptions& opts, const std::string& filename_stem,
                        const std::vector<double>& steps, const std::vector<double>& bounds,
                        std::ostream& log) {
    if (opts.out_dir.empty()) return;
    if (opts.format == "jsonl")
        write_file(opts.out_dir, filename_stem + ".jsonl", trace_rows_jsonl(steps, bounds), log);
    else
        write_file(opts.out_dir, filename_stem + ".csv", trace_rows_csv(steps, bounds), log);
}

inline std::vector<std::array<double, 3>> random_scalar_triples(std::mt19937_64& rng,
                                                                std::size_t count) {
    std::uniform_real_distribution<double> pick(-10.0, 10.0);
    std::vector<std::array<double, 3>> triples;
    triples.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        triples.push_back({pick(rng), pick(rng), pick(rng)});
    return triples;
}

inline std::vector<std::array<double, 3>> table_triples(const std::vector<double>& points,
                                                        std::mt19937_64& rng, std::size_t count) {
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    std::vector<std::array<double, 3>> triples;
    triples.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        triples.push_back({points[pick(rng)], points[pick(rng)], points[pick(rng)]});
    return triples;
}

inline std::vector<std::pair<double, double>> jungck_edge_sample(const JungckScenario& s,
                                                                 std::mt19937_64& rng) {
    if (s.family) return sample_edges(*s.family, s.edge_spec, rng);
    return s.explicit_edges;
}

template <typename Point>
ContractionCertificate<Point> certify_scenario(const JungckScenario& s,
                                               const std::vector<std::pair<Point, Point>>& edges) {
    if (s.cert_family == ContractionFamily::BanachGraph)
        return certify_banach(s.pair, s.space, *s.graph, s.B, edges, s.mode);
    return certify_kannan(s.pair, s.space, *s.graph, s.B, edges, s.mode);
}

template <typename Point>
Json certificate_to_json(const ContractionCertificate<Point>& cert) {
    std::size_t failed = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    for (const auto& edge : cert.edge_results) {
        if (!edge.holds) ++failed;
        min_slack = std::min(min_slack, edge.slack);
    }
    Json out{{"family", cert.family == ContractionFamily::BanachGraph ? "banach" : "kannan"},
             {"norm_mode", cert.mode == NormMode::Spectral ? "spectral" : "frobenius"},
             {"coefficient_norm", cert.coefficient_norm},
             {"b_norm", cert.b_norm},
             {"edges_checked", cert.edge_results.size()},
             {"edges_failed", failed},
             {"min_slack", cert.edge_results.empty() ? 0.0 : min_slack},
             {"overall", cert.overall},
             {"bound_convention", "normB_squared"}};
    if (cert.family == ContractionFamily::BanachGraph) {
        out["lambda"] = cert.lambda;
    } else {
        out["ba_norm"] = cert.ba_norm;
        out["resolvent_norm"] = cert.resolvent_norm;
    }
    return out;
}

inline Json axioms_to_json(const AxiomReport& axioms) {
    return Json{{"checked_triples", axioms.checked_triples},
                {"symmetry_ok", axioms.symmetry_ok},
                {"identity_ok", axioms.identity_ok},
                {"triangle_ok", axioms.triangle_ok},
                {"worst_triangle_slack", axioms.worst_triangle_slack}};
}

} // namespace detail

inline double integral_row_sum_max(const IntegralProblem& problem) {
    const Eigen::VectorXd nodes = grid_nodes(problem);
    const double w = quad_weight(problem);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < problem.m; ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < problem.m; ++j)
            row += std::abs(problem.phi(nodes[i], nodes[j]));
        worst = std::max(worst, w * row);
    }
    return worst;
}

/// Axioms plus contraction certificate for iteration scenarios; solvability
/// gates for the application scenarios. Returns 0 when everything holds,
/// 1 otherwise. Configuration problems still throw ConfigError.
inline RunResult run_verify(const Scenario& scenario, const RunOptions& opts, std::ostream& log) {
    RunResult result;
    result.report["scenario"] = scenario.name;
    std::mt19937_64 rng(opts.seed);
    try {
        if (scenario.kind == ScenarioKind::Jungck) {
            const JungckScenario& s = *scenario.jungck;
            result.report["kind"] = "jungck";
            const auto triples =
                s.table_space ? detail::table_triples(s.table_points, rng, s.axiom_triples)
                              : detail::random_scalar_triples(rng, s.axiom_triples);
            const AxiomReport axioms = verify_axioms(s.space, triples);
            result.report["axioms"] = detail::axioms_to_json(axioms);
            const auto edges = detail::jungck_edge_sample(s, rng);
            const auto cert = detail::certify_scenario<double>(s, edges);
            result.report["certificate"] = detail::certificate_to_json(cert);
            const bool passed = axioms.all_ok() && cert.overall;
            result.report["passed"] = passed;
            result.code = passed ? 0 : 1;
        } else if (scenario.kind == ScenarioKind::Stein) {
            const SteinScenario& s = *scenario.stein;
            result.report["kind"] = "stein";
            result.report["dim"] = s.problem.dim;
            result.report["terms"] = s.problem.coefficients.size();
            result.report["beta"] = stein_beta(s.problem);
            result.report["quartic_sum"] = stein_quartic_sum(s.problem);
            result.report["quartic_condition_met"] = stein_quartic_sum(s.problem) < 0.25;
            validate_stein(s.problem);
            result.report["passed"] = true;
            result.code = 0;
        } else {
            const IntegralScenario& s = *scenario.integral;
            result.report["kind"] = "integral";
            result.report["beta"] = s.problem.beta;
            result.report["beta_cap"] = 1.0 / std::sqrt(std::pow(2.0, s.problem.p));
            result.report["row_sum_max"] = integral_row_sum_max(s.problem);
            result.report["kernel_affine"] = s.problem.kernel_affine;
            validate_integral(s.problem, rng);
            const auto grid_space = make_grid_function_space(s.problem.m, s.problem.p);
            std::uniform_real_distribution<double> pick(-10.0, 10.0);
            std::vector<std::array<Eigen::VectorXd, 3>> triples;
            for (std::size_t i = 0; i < 128; ++i) {
                std::array<Eigen::VectorXd, 3> triple;
                for (auto& v : triple) {
                    v.resize(s.problem.m);
                    for (Eigen::Index k = 0; k < s.problem.m; ++k) v[k] = pick(rng);
                }
                triples.push_back(std::move(triple));
            }
            const AxiomReport axioms = verify_axioms(grid_space, triples);
            result.report["axioms"] = detail::axioms_to_json(axioms);
            result.report["passed"] = axioms.all_ok();
            result.code = axioms.all_ok() ? 0 : 1;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        result.report["passed"] = false;
        result.report["error"] = e.what();
        result.code = 1;
    }
    if (!opts.out_dir.empty())
        detail::write_file(opts.out_dir, scenario.name + "_verify.json",
                           result.report.dump(2) + "\n", log);
    log << (result.code == 0 ? "verify passed: " : "verify FAILED: ") << scenario.name << "\n";
    return result;
}

namespace detail {

inline RunResult solve_jungck(const Scenario& scenario, const RunOptions& opts,
                              std::ostream& log) {
    const JungckScenario& s = *scenario.jungck;
    RunResult result;
    result.report["scenario"] = scenario.name;
    result.report["kind"] = "jungck";

    RunOptions verify_opts = opts;
    verify_opts.out_dir.clear();
    std::ostringstream quiet;
    const RunResult verified = run_verify(scenario, verify_opts, quiet);
    result.report["verify"] = verified.report;
    if (verified.code != 0) {
        result.report["error"] = "verification failed; not solving";
        result.code = 1;
        return result;
    }

    std::mt19937_64 rng(opts.seed);
    const auto edges = jungck_edge_sample(s, rng);
    const auto cert = certify_scenario<double>(s, edges);

    SolveOptions solve_opts = s.solver;
    if (opts.tol) solve_opts.tol = *opts.tol;
    if (opts.max_iter) solve_opts.max_iter = *opts.max_iter;

    std::vector<SolveReport<double>> reports;
    Json seeds_json = Json::array();
    bool all_converged = true;
    for (std::size_t i = 0; i < s.seeds.size(); ++i) {
        Json record{{"seed", s.seeds[i]}};
        try {
            SolveReport<double> report =
                solve_coincidence(s.pair, s.space, *s.graph, cert, s.seeds[i], solve_opts);
            record["converged"] = report.trace.converged;
            record["iterations"] = report.trace.step_norms.size();
            record["limit"] = *report.trace.limit;
            record["residual"] = report.result.residual;
            record["coincidence_point"] = report.result.coincidence_point;
            record["point_of_coincidence"] = report.result.point_of_coincidence;
            record["weakly_compatible"] = report.result.weakly_compatible;
            const double wc_gap = norm(
                eval_metric(s.space, s.pair.f(s.pair.g(report.result.coincidence_point)),
                            s.pair.g(s.pair.f(report.result.coincidence_point))),
                NormMode::Spectral);
            record["weak_compat_gap"] = wc_gap;
            record["has_common_fixed_point"] = report.result.common_fixed_point.has_value();
            if (report.result.common_fixed_point)
                record["common_fixed_point"] = *report.result.common_fixed_point;
            record["orbit_in_graph"] = report.orbit_in_graph;
            write_trace(opts, scenario.name + "_seed" + std::to_string(i),
                        report.trace.step_norms, report.trace.bound_values, log);
            reports.push_back(std::move(report));
        } catch (const Error& e) {
            record["converged"] = false;
            record["error"] = e.what();
            all_converged = false;
        }
        seeds_json.push_back(std::move(record));
    }
    bool uniqueness_consistent = true;
    if (reports.size() > 1)
        uniqueness_consistent = cross_check_uniqueness(reports, s.space, *s.graph, solve_opts.tol);
    for (std::size_t i = 0, r = 0; i < seeds_json.size(); ++i)
        if (seeds_json[i].contains("iterations"))
            seeds_json[i]["uniqueness_checked"] = reports[r++].result.uniqueness_checked;
    result.report["seeds"] = std::move(seeds_json);
    result.report["uniqueness_consistent"] = uniqueness_consistent;
    result.code = (all_converged && uniqueness_consistent) ? 0 : 1;
    result.report["exit"] = result.code;
    return result;
}

inline RunResult solve_stein(const Scenario& scenario, const RunOptions& opts,
                             std::ostream& log) {
    const SteinScenario& s = *scenario.stein;
    RunResult result;
    result.report["scenario"] = scenario.name;
    result.report["kind"] = "stein";
    const double tol = opts.tol ? *opts.tol : s.tol;
    const int max_iter = opts.max_iter ? *opts.max_iter : s.max_iter;

    validate_stein(s.problem);
    const double beta = stein_beta(s.problem);
    result.report["beta"] = beta;
    result.report["quartic_sum"] = stein_quartic_sum(s.problem);
    result.report["quartic_condition_met"] = stein_quartic_sum(s.problem) < 0.25;

    const Eigen::Index dim = s.problem.dim;
    const auto space = make_operator_norm_space(dim);
    const DirectedGraph<AlgebraElement> graph(
        std::vector<AlgebraElement>{zero_element(dim), s.problem.Q},
        [](const AlgebraElement&, const AlgebraElement&) { return true; },
        [](const AlgebraElement& a, const AlgebraElement& b) { return points_close(a, b); });

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_matrix = [&] {
        AlgebraElement a(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i)
            for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
        return a;
    };
    std::vector<std::pair<AlgebraElement, AlgebraElement>> pairs;
    for (int k = 0; k < 16; ++k) pairs.emplace_back(random_matrix(), random_matrix());

    const std::function<AlgebraElement(const AlgebraElement&)> apply =
        [&s](const AlgebraElement& X) { return stein_apply(s.problem, X); };
    const auto cert = certify_banach(identity_pair<AlgebraElement>(apply), space, graph,
                                     AlgebraElement(beta * identity_element(dim)), pairs,
                                     NormMode::Spectral);
    result.report["certificate"] = certificate_to_json(cert);
    if (!cert.overall) {
        result.report["error"] = "operator contraction certificate failed";
        result.code = 1;
        return result;
    }

    SolveOptions solve_opts;
    solve_opts.tol = tol;
    solve_opts.max_iter = max_iter;
    try {
        const SolveReport<AlgebraElement> report =
            solve_fixed_point<AlgebraElement>(apply, space, graph, cert, zero_element(dim),
                                              solve_opts);
        const AlgebraElement& X = *report.trace.limit;
        result.report["converged"] = true;
        result.report["iterations"] = report.trace.step_norms.size();
        result.report["residual_metric"] = report.result.residual;
        const AlgebraElement oracle = stein_oracle(s.problem);
        result.report["oracle_delta"] = (X - oracle).cwiseAbs().maxCoeff();
        result.report["hermitian_deviation"] = (X - X.adjoint().eval()).cwiseAbs().maxCoeff();
        result.report["solution_positive"] = is_positive(X).is_positive;
        write_trace(opts, scenario.name + "_trace", report.trace.step_norms,
                    report.trace.bound_values, log);
        if (!opts.out_dir.empty())
            write_file(opts.out_dir, scenario.name + "_solution.json",
                       matrix_to_json(X).dump(2) + "\n", log);
        result.code = 0;
    } catch (const Error& e) {
        result.report["converged"] = false;
        result.report["error"] = e.what();
        result.code = 1;
    }
    result.report["exit"] = result.code;
    return result;
}

inline RunResult solve_integral(const Scenario& scenario, const RunOptions& opts,
                                std::ostream& log) {
    const IntegralScenario& s = *scenario.integral;
    RunResult result;
    result.report["scenario"] = scenario.name;
    result.report["kind"] = "integral";
    const double tol = opts.tol ? *opts.tol : s.tol;
    const int max_iter = opts.max_iter ? *opts.max_iter : s.max_iter;
    result.report["beta"] = s.problem.beta;
    result.report["kernel_affine"] = s.problem.kernel_affine;
    result.report["certificate"] = "norm_gate_only";

    std::mt19937_64 rng(opts.seed);
    try {
        std::vector<Eigen::VectorXd> iterates;
        const Eigen::VectorXd x = integral_solve(s.problem, rng, tol, max_iter, &iterates);
        const auto space = make_grid_function_space(s.problem.m, s.problem.p);
        std::vector<double> steps;
        for (std::size_t n = 0; n + 1 < iterates.size(); ++n)
            steps.push_back(
                norm(eval_metric(space, iterates[n], iterates[n + 1]), NormMode::Spectral));
        std::vector<double> bounds;
        const double q = steps.empty() ? 0.0 : steps[0];
        for (std::size_t n = 0; n < steps.size(); ++n)
            bounds.push_back(std::pow(s.problem.beta, s.problem.p * static_cast<double>(n)) * q);
        result.report["converged"] = true;
        result.report["iterations"] = steps.size();
        result.report["residual_sup"] =
            (integral_apply(s.problem, x) - x).cwiseAbs().maxCoeff();
        if (s.problem.kernel_affine) {
            const Eigen::VectorXd oracle = integral_oracle(s.problem);
            result.report["oracle_delta"] = (x - oracle).cwiseAbs().maxCoeff();
        }
        write_trace(opts, scenario.name + "_trace", steps, bounds, log);
        if (!opts.out_dir.empty())
            write_file(opts.out_dir, scenario.name + "_solution.json",
                       vector_to_json(x).dump(2) + "\n", log);
        result.code = 0;
    } catch (const Error& e) {
        result.report["converged"] = false;
        result.report["error"] = e.what();
        result.code = 1;
    }
    result.report["exit"] = result.code;
    return result;
}

} // namespace detail

/// Runs the iteration (after re-verifying) and writes traces, solutions, and a
/// summary. Returns 0 only when every requested start converged.
inline RunResult run_solve(const Scenario& scenario, const RunOptions& opts, std::ostream& log) {
    RunResult result;
    if (scenario.kind == ScenarioKind::Jungck)
        result = detail::solve_jungck(scenario, opts, log);
    else if (scenario.kind == ScenarioKind::Stein)
        result = detail::solve_stein(scenario, opts, log);
    else
        result = detail::solve_integral(scenario, opts, log);
    if (!opts.out_dir.empty())
        detail::write_file(opts.out_dir, scenario.name + "_summary.json",
                           result.report.dump(2) + "\n", log);
    log << (result.code == 0 ? "solve finished: " : "solve FAILED: ") << scenario.name << "\n";
    return result;
}

/// Direct linear-algebra solution of a problem file (no iteration): the
/// vectorized solve for operator problems, the dense quadrature solve for
/// integral problems. The file kind is detected from its fields.
inline RunResult run_oracle(const std::string& path, const RunOptions& opts, std::ostream& log) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open problem file " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw ConfigError("problem file " + path + " is not valid JSON: " + e.what());
    }
    io::require_object(j, "problem");
    RunResult result;
    if (j.contains("coefficients")) {
        const SteinProblem problem = stein_from_json(j, "problem");
        const AlgebraElement X = stein_oracle(problem);
        result.report = Json{{"kind", "stein"}, {"solution", matrix_to_json(X)}};
    } else if (j.contains("kernel")) {
        const IntegralProblem problem = integral_from_json(j, "problem");
        const Eigen::VectorXd x = integral_oracle(problem);
        result.report = Json{{"kind", "integral"}, {"solution", vector_to_json(x)}};
    } else {
        throw ConfigError("problem file " + path +
                          " is neither an operator problem (\"coefficients\") nor an integral "
                          "problem (\"kernel\")");
    }
    log << result.report.dump(2) << "\n";
    if (!opts.out_dir.empty())
        detail::write_file(opts.out_dir, "oracle_solution.json", result.report.dump(2) + "\n",
                           log);
    return result;
}

/// Replays every bundled scenario and checks the published outcomes, printing
/// one PASS/FAIL line each. Returns 0 only when all of them hold.
inline int run_paper_examples(const RunOptions& opts, std::ostream& log) {
    struct Outcome {
        std::string name;
        std::string detail;
        bool ok = false;
    };
    std::vector<Outcome> outcomes;
    std::ostringstream quiet;

    auto check = [&](const std::string& name, auto&& fn) {
        Outcome outcome;
        outcome.name = name;
        try {
            outcome.detail = fn();
            outcome.ok = true;
        } catch (const Error& e) {
            outcome.detail = e.what();
        } catch (const std::exception& e) {
            outcome.detail = std::string("unexpected: ") + e.what();
        }
        outcomes.push_back(std::move(outcome));
    };

    check("example_3_2", [&]() -> std::string {
        const Scenario scenario = load_scenario("example_3_2");
        const RunResult verified = run_verify(scenario, opts, quiet);
        if (verified.code != 0) throw Error("verification failed");
        const double lambda = verified.report["certificate"]["lambda"].get<double>();
        const RunResult solved = run_solve(scenario, opts, quiet);
        if (solved.code != 0) throw Error("solve failed");
        for (const auto& seed : solved.report["seeds"]) {
            if (!seed["converged"].get<bool>()) throw Error("a seed did not converge");
            if (seed["iterations"].get<std::size_t>() >= 200) throw Error("too many iterations");
            if (seed["residual"].get<double>() >= 1e-12) throw Error("residual too large");
            const double limit = seed["limit"].get<double>();
            if (limit * limit > 1e-10) throw Error("limit is metrically far from 0");
            if (!seed["weakly_compatible"].get<bool>()) throw Error("weak compatibility lost");
            if (!seed["has_common_fixed_point"].get<bool>())
                throw Error("common fixed point missing");
        }
        return "three seeds reach the common fixed point 0, contraction factor " +
               detail::fmt_double(lambda);
    });

    check("remark_3_3", [&]() -> std::string {
        const Scenario scenario = load_scenario("remark_3_3");
        const RunResult solved = run_solve(scenario, opts, quiet);
        if (solved.code != 0) throw Error("solve failed");
        const Json& seed = solved.report["seeds"][0];
        if (std::abs(seed["point_of_coincidence"].get<double>() - 1.0) > 1e-9)
            throw Error("point of coincidence is not 1");
        if (std::abs(seed["coincidence_point"].get<double>() - 3.0) > 1e-9)
            throw Error("coincidence point is not 3");
        if (seed["weakly_compatible"].get<bool>()) throw Error("pair must not be weakly compatible");
        if (seed["has_common_fixed_point"].get<bool>())
            throw Error("no common fixed point should be promoted");
        if (seed["weak_compat_gap"].get<double>() <= 1.0)
            throw Error("maps should visibly disagree after swapping");
        return "coincidence at 3 with value 1; weak compatibility fails, no promotion";
    });

    check("example_3_6", [&]() -> std::string {
        const Scenario scenario = load_scenario("example_3_6");
        const RunResult verified = run_verify(scenario, opts, quiet);
        if (verified.code != 0) throw Error("verification failed");
        const double min_slack = verified.report["certificate"]["min_slack"].get<double>();
        if (min_slack < -1e-12) throw Error("negative slack in certificate");
        const RunResult solved = run_solve(scenario, opts, quiet);
        if (solved.code != 0) throw Error("solve failed");
        const Json& seed = solved.report["seeds"][0];
        if (!seed["has_common_fixed_point"].get<bool>()) throw Error("missing common fixed point");
        if (std::abs(seed["common_fixed_point"].get<double>()) > 1e-15)
            throw Error("common fixed point is not 0");
        return "tight edge inequality (slack " + detail::fmt_double(min_slack) +
               "), common fixed point 0";
    });

    check("stein_demo", [&]() -> std::string {
        const Scenario scenario = load_scenario("stein_demo");
        const RunResult solved = run_solve(scenario, opts, quiet);
        if (solved.code != 0) throw Error("solve failed");
        if (solved.report["oracle_delta"].get<double>() > 1e-8)
            throw Error("iterate disagrees with the direct solve");
        if (solved.report["hermitian_deviation"].get<double>() > 1e-10)
            throw Error("solution is not Hermitian");
        if (!solved.report["solution_positive"].get<bool>())
            throw Error("solution is not positive");
        return "iteration matches the vectorized solve to " +
               detail::fmt_double(solved.report["oracle_delta"].get<double>());
    });

    check("integral_demo", [&]() -> std::string {
        const Scenario scenario = load_scenario("integral_demo");
        const RunResult solved = run_solve(scenario, opts, quiet);
        if (solved.code != 0) throw Error("solve failed");
        if (solved.report["oracle_delta"].get<double>() > 1e-8)
            throw Error("iterate disagrees with the dense solve");
        return "successive substitution matches the dense solve to " +
               detail::fmt_double(solved.report["oracle_delta"].get<double>());
    });

    int failures = 0;
    for (const auto& outcome : outcomes) {
        log << (outcome.ok ? "PASS " : "FAIL ") << outcome.name << ": " << outcome.detail << "\n";
        if (!outcome.ok) ++failures;
    }
    log << (failures == 0 ? "all bundled scenarios hold\n"
                          : std::to_string(failures) + " bundled scenario(s) failed\n");
    return failures == 0 ? 0 : 1;
}

} // namespace cstarfix
