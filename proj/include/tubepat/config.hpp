#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tubepat {

// Run configuration.  Zero means "choose automatically" for delta, dt and
// glue.n; everything else must be explicit or defaulted.
struct Config {
    // profile
    double a = 1.0;
    double amplitude = 0.5; // A
    double l = 1.0;
    std::string spline_file; // nonempty: load Psi samples instead of the cosine
    // pattern
    int p = 2;
    double beta = 1.0;
    double beta_min = 0.5; // scan bounds used when the first member is unstable
    double beta_max = 2.0;
    int beta_steps = 7;
    // grid
    int ns = 128;
    int ntheta = 64;
    // continuation
    double kappa_target = 0.6;
    int steps = 16;
    int max_halvings = 3;
    // glue
    int n = 0; // 0: smallest n with pi/(n l) <= 0.8 kappa0
    // eigen
    double eig_tol = 1e-9;
    // dynamics
    double delta = 0.0; // 0: 1e-2 * sup|U|
    double T = 50.0;
    double dt = 0.0;    // 0: min(1e-2, 0.5 / max f'_+)
    int trials = 3;
    unsigned seed = 12345;
    // critical
    double tol_rel = 1e-4;
    // output
    std::string directory = ".";
    std::string formats = "json,csv,obj";
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace detail

// Parse a line-oriented "section.key = value" configuration.  Comments
// start with '#'; unknown keys and malformed lines are errors reported
// with their line number.
inline Config parse_config(std::istream& in) {
    Config c;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw std::runtime_error("config: line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) fail("expected 'section.key = value'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));
        if (val.empty()) fail("missing value for '" + key + "'");

        auto as_double = [&]() {
            try {
                size_t pos = 0;
                double v = std::stod(val, &pos);
                if (pos != val.size()) throw std::invalid_argument(val);
                return v;
            } catch (...) {
                fail("invalid number '" + val + "' for '" + key + "'");
                return 0.0;
            }
        };
        auto as_int = [&]() {
            try {
                size_t pos = 0;
                long v = std::stol(val, &pos);
                if (pos != val.size()) throw std::invalid_argument(val);
                return static_cast<int>(v);
            } catch (...) {
                fail("invalid integer '" + val + "' for '" + key + "'");
                return 0;
            }
        };

        if (key == "profile.a") c.a = as_double();
        else if (key == "profile.A") c.amplitude = as_double();
        else if (key == "profile.l") c.l = as_double();
        else if (key == "profile.spline_file") c.spline_file = val;
        else if (key == "pattern.p") c.p = as_int();
        else if (key == "pattern.beta") c.beta = as_double();
        else if (key == "pattern.beta_min") c.beta_min = as_double();
        else if (key == "pattern.beta_max") c.beta_max = as_double();
        else if (key == "pattern.beta_steps") c.beta_steps = as_int();
        else if (key == "grid.ns") c.ns = as_int();
        else if (key == "grid.ntheta") c.ntheta = as_int();
        else if (key == "continuation.kappa_target") c.kappa_target = as_double();
        else if (key == "continuation.steps") c.steps = as_int();
        else if (key == "continuation.max_halvings") c.max_halvings = as_int();
        else if (key == "glue.n") {
            c.n = as_int();
            if (c.n < 2) fail("n >= 2 required");
        }
        else if (key == "eigen.tol") c.eig_tol = as_double();
        else if (key == "dynamics.delta") c.delta = as_double();
        else if (key == "dynamics.T") c.T = as_double();
        else if (key == "dynamics.dt") c.dt = as_double();
        else if (key == "dynamics.trials") c.trials = as_int();
        else if (key == "dynamics.seed") c.seed = static_cast<unsigned>(as_int());
        else if (key == "critical.tol_rel") c.tol_rel = as_double();
        else if (key == "output.directory") c.directory = val;
        else if (key == "output.formats") c.formats = val;
        else fail("unknown key '" + key + "'");
    }

    // Cross-field validation.
    if (c.a <= c.amplitude) throw std::runtime_error("config: profile requires a > A");
    if (c.amplitude < 0.0) throw std::runtime_error("config: profile.A must be >= 0");
    if (c.l <= 0.0) throw std::runtime_error("config: profile.l must be positive");
    if (c.p != 2 && c.p != 3) throw std::runtime_error("config: pattern.p must be 2 or 3");
    if (c.beta <= 0.0) throw std::runtime_error("config: pattern.beta must be positive");
    if (c.ns < 8) throw std::runtime_error("config: grid.ns >= 8 required");
    if (c.ntheta != 1 && c.ntheta < 8)
        throw std::runtime_error("config: grid.ntheta >= 8 (or == 1) required");
    if (c.kappa_target <= 0.0)
        throw std::runtime_error("config: continuation.kappa_target must be positive");
    if (c.steps < 1) throw std::runtime_error("config: continuation.steps >= 1 required");
    if (c.max_halvings < 0)
        throw std::runtime_error("config: continuation.max_halvings >= 0 required");
    if (c.T <= 0.0) throw std::runtime_error("config: dynamics.T must be positive");
    if (c.trials < 2) throw std::runtime_error("config: dynamics.trials >= 2 required");
    if (c.tol_rel <= 0.0) throw std::runtime_error("config: critical.tol_rel must be positive");
    if (!(c.beta_min > 0.0) || c.beta_max < c.beta_min || c.beta_steps < 1)
        throw std::runtime_error("config: pattern beta scan bounds invalid");
    return c;
}

inline Config parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    return parse_config(in);
}

inline std::string serialize_config(const Config& c) {
    std::ostringstream out;
    out.precision(17);
    out << "profile.a = " << c.a << "\n"
        << "profile.A = " << c.amplitude << "\n"
        << "profile.l = " << c.l << "\n";
    if (!c.spline_file.empty()) out << "profile.spline_file = " << c.spline_file << "\n";
    out << "pattern.p = " << c.p << "\n"
        << "pattern.beta = " << c.beta << "\n"
        << "pattern.beta_min = " << c.beta_min << "\n"
        << "pattern.beta_max = " << c.beta_max << "\n"
        << "pattern.beta_steps = " << c.beta_steps << "\n"
        << "grid.ns = " << c.ns << "\n"
        << "grid.ntheta = " << c.ntheta << "\n"
        << "continuation.kappa_target = " << c.kappa_target << "\n"
        << "continuation.steps = " << c.steps << "\n"
        << "continuation.max_halvings = " << c.max_halvings << "\n";
    if (c.n != 0) out << "glue.n = " << c.n << "\n";
    out << "eigen.tol = " << c.eig_tol << "\n"
        << "dynamics.delta = " << c.delta << "\n"
        << "dynamics.T = " << c.T << "\n"
        << "dynamics.dt = " << c.dt << "\n"
        << "dynamics.trials = " << c.trials << "\n"
        << "dynamics.seed = " << c.seed << "\n"
        << "critical.tol_rel = " << c.tol_rel << "\n"
        << "output.directory = " << c.directory << "\n"
        << "output.formats = " << c.formats << "\n";
    return out.str();
}

} // namespace tubepat
