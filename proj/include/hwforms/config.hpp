#pragma once

// Line-based `key = value` run configuration, '#' comments, strict keys.

#include "errors.hpp"

#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace hwforms {

struct RunConfig {
    int dim = 0;
    std::string mesh;         // path or "box:NXxNY[xNZ]"
    std::string material;     // svk | neohookean
    double lambda = 0.0;
    double mu = 0.0;
    std::string mode;         // monolithic | condensed
    double tol_rel = 1e-10;
    double tol_abs = 0.0;
    int max_iter = 50;
    std::string dirichlet;    // "markers:A|b" clauses, ';'-separated
    std::string neumann;      // "marker:vector" clauses, ';'-separated
    std::string body_force;   // comma-separated vector
    std::string out_prefix;
    std::vector<double> box_lo, box_hi;  // optional box bounds, default [0,1]^n
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& s, int line) {
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw parse_error("expected a number, got '" + s + "'", line);
    }
    if (pos != s.size()) throw parse_error("trailing characters in number '" + s + "'", line);
    return v;
}

inline int to_int(const std::string& s, int line) {
    const double v = to_double(s, line);
    const int i = static_cast<int>(v);
    if (i != v) throw parse_error("expected an integer, got '" + s + "'", line);
    return i;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

inline std::vector<double> parse_vector(const std::string& s, int expected, int line) {
    const auto parts = split(s, ',');
    if (static_cast<int>(parts.size()) != expected)
        throw parse_error("expected " + std::to_string(expected) + " comma-separated values", line);
    std::vector<double> v;
    for (const auto& p : parts) v.push_back(to_double(p, line));
    return v;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
    static const std::set<std::string> known = {
        "dim",      "mesh",     "material",  "lambda",     "mu",        "mode",
        "tol_rel",  "tol_abs",  "max_iter",  "dirichlet",  "neumann",   "body_force",
        "out_prefix", "box_lo", "box_hi"};

    RunConfig cfg;
    std::map<std::string, int> seen;  // key -> line, for required-key errors
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw parse_error("expected 'key = value'", line_no);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (!known.count(key)) throw parse_error("unknown key '" + key + "'", line_no);
        if (seen.count(key)) throw parse_error("duplicate key '" + key + "'", line_no);
        seen[key] = line_no;

        if (key == "dim") cfg.dim = detail::to_int(value, line_no);
        else if (key == "mesh") cfg.mesh = value;
        else if (key == "material") cfg.material = value;
        else if (key == "lambda") cfg.lambda = detail::to_double(value, line_no);
        else if (key == "mu") cfg.mu = detail::to_double(value, line_no);
        else if (key == "mode") cfg.mode = value;
        else if (key == "tol_rel") cfg.tol_rel = detail::to_double(value, line_no);
        else if (key == "tol_abs") cfg.tol_abs = detail::to_double(value, line_no);
        else if (key == "max_iter") cfg.max_iter = detail::to_int(value, line_no);
        else if (key == "dirichlet") cfg.dirichlet = value;
        else if (key == "neumann") cfg.neumann = value;
        else if (key == "body_force") cfg.body_force = value;
        else if (key == "out_prefix") cfg.out_prefix = value;
        else if (key == "box_lo" || key == "box_hi") {
            auto parts = detail::split(value, ',');
            std::vector<double> v;
            for (const auto& p : parts) v.push_back(detail::to_double(p, line_no));
            (key == "box_lo" ? cfg.box_lo : cfg.box_hi) = v;
        }
    }

    for (const char* req : {"dim", "mesh", "material", "lambda", "mu", "mode", "tol_rel",
                            "max_iter", "dirichlet", "out_prefix"})
        if (!seen.count(req)) throw parse_error(std::string("missing required key '") + req + "'", line_no);

    if (cfg.dim != 2 && cfg.dim != 3) throw parse_error("dim must be 2 or 3", seen["dim"]);
    if (cfg.mode != "monolithic" && cfg.mode != "condensed")
        throw parse_error("mode must be monolithic or condensed", seen["mode"]);
    if (cfg.material != "svk" && cfg.material != "neohookean")
        throw parse_error("material must be svk or neohookean", seen["material"]);
    if (cfg.mu <= 0.0) throw parse_error("mu must be positive", seen["mu"]);
    if (cfg.tol_rel <= 0.0) throw parse_error("tol_rel must be positive", seen["tol_rel"]);
    if (seen.count("tol_abs") && cfg.tol_abs <= 0.0)
        throw parse_error("tol_abs must be positive", seen["tol_abs"]);
    if (cfg.max_iter < 1) throw parse_error("max_iter must be >= 1", seen["max_iter"]);
    for (const char* k : {"box_lo", "box_hi"})
        if (seen.count(k)) {
            const auto& v = (std::string(k) == "box_lo") ? cfg.box_lo : cfg.box_hi;
            if (static_cast<int>(v.size()) != cfg.dim)
                throw parse_error(std::string(k) + " must have dim entries", seen[k]);
        }
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    return parse_config(in);
}

/// One "markers:A|b" clause of the dirichlet key.
struct DirichletClause {
    bool all_markers = false;
    std::vector<int> markers;
    std::vector<double> A;  // row-major dim x dim
    std::vector<double> b;  // dim
};

inline std::vector<DirichletClause> parse_dirichlet(const std::string& value, int dim) {
    std::vector<DirichletClause> out;
    for (const auto& clause : detail::split(value, ';')) {
        if (clause.empty()) continue;
        const auto colon = clause.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("dirichlet clause '" + clause + "' missing ':'");
        DirichletClause c;
        const std::string markers = detail::trim(clause.substr(0, colon));
        if (markers == "all") {
            c.all_markers = true;
        } else {
            for (const auto& m : detail::split(markers, ','))
                c.markers.push_back(detail::to_int(m, 0));
        }
        const std::string map = clause.substr(colon + 1);
        const auto bar = map.find('|');
        if (bar == std::string::npos)
            throw std::invalid_argument("dirichlet map '" + map + "' missing '|'");
        c.A = detail::parse_vector(detail::trim(map.substr(0, bar)), dim * dim, 0);
        c.b = detail::parse_vector(detail::trim(map.substr(bar + 1)), dim, 0);
        out.push_back(c);
    }
    if (out.empty()) throw std::invalid_argument("dirichlet key has no clauses");
    return out;
}

/// One "marker:vector" clause of the neumann key.
inline std::vector<std::pair<int, std::vector<double>>> parse_neumann(const std::string& value,
                                                                      int dim) {
    std::vector<std::pair<int, std::vector<double>>> out;
    for (const auto& clause : detail::split(value, ';')) {
        if (clause.empty()) continue;
        const auto colon = clause.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("neumann clause '" + clause + "' missing ':'");
        out.emplace_back(detail::to_int(detail::trim(clause.substr(0, colon)), 0),
                         detail::parse_vector(detail::trim(clause.substr(colon + 1)), dim, 0));
    }
    return out;
}

}  // namespace hwforms
