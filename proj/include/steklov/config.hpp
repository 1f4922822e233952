#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "steklov/geometry.hpp"
#include "steklov/util.hpp"

namespace steklov {

using json = nlohmann::json;

struct RunConfig {
    std::string subcommand;
    int n = 3;
    double omega = 0.0;
    int m_max = 60;
    int threads = 0;
    std::uint64_t seed = 1234;
    std::string out_dir = ".";
    bool json_output = false;

    FactorSpec factor;
    FactorSpec factor_tilde;
    bool has_tilde = false;

    // compare
    double eps = 1e-6;
    bool rate_fit = false;
    int rate_branch = -1;
    int rate_m_lo = 4, rate_m_hi = 20;

    // stability
    std::string mode = "steklov";
    std::vector<double> deltas;
    FactorSpec bump;
    bool has_bump = false;

    // kernel / ode
    int kernel_grid = 512;
    double kernel_tol = 1e-10;
    double rtol = 1e-11;

    // muntz-table
    int muntz_m0 = -1;  // -1: default per n
    int muntz_mmax = 40;

    json raw;
};

inline FactorSpec parse_factor(const json& j) {
    FactorSpec spec;
    if (!j.contains("kind")) throw ConfigError("factor spec needs a 'kind'");
    spec.kind = j.at("kind").get<std::string>();
    if (j.contains("parameters")) spec.params = j.at("parameters").get<std::vector<double>>();
    if (j.contains("degree")) spec.degree = j.at("degree").get<int>();
    return spec;
}

inline RunConfig parse_config(const json& j) {
    RunConfig cfg;
    cfg.raw = j;
    try {
        if (j.contains("n")) cfg.n = j.at("n").get<int>();
        if (j.contains("omega")) cfg.omega = j.at("omega").get<double>();
        if (j.contains("m_max")) cfg.m_max = j.at("m_max").get<int>();
        if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("factor")) cfg.factor = parse_factor(j.at("factor"));
        if (j.contains("factor_tilde")) {
            cfg.factor_tilde = parse_factor(j.at("factor_tilde"));
            cfg.has_tilde = true;
        }
        if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
        if (j.contains("rate_fit")) {
            cfg.rate_fit = true;
            const json& r = j.at("rate_fit");
            if (r.contains("branch")) cfg.rate_branch = r.at("branch").get<int>();
            if (r.contains("m_lo")) cfg.rate_m_lo = r.at("m_lo").get<int>();
            if (r.contains("m_hi")) cfg.rate_m_hi = r.at("m_hi").get<int>();
        }
        if (j.contains("mode")) cfg.mode = j.at("mode").get<std::string>();
        if (j.contains("deltas")) cfg.deltas = j.at("deltas").get<std::vector<double>>();
        if (j.contains("bump")) {
            cfg.bump = parse_factor(j.at("bump"));
            cfg.has_bump = true;
        }
        if (j.contains("kernel")) {
            const json& k = j.at("kernel");
            if (k.contains("grid_n")) cfg.kernel_grid = k.at("grid_n").get<int>();
            if (k.contains("tol")) cfg.kernel_tol = k.at("tol").get<double>();
        }
        if (j.contains("rtol")) cfg.rtol = j.at("rtol").get<double>();
        if (j.contains("muntz")) {
            const json& m = j.at("muntz");
            if (m.contains("m0")) cfg.muntz_m0 = m.at("m0").get<int>();
            if (m.contains("m_max")) cfg.muntz_mmax = m.at("m_max").get<int>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config JSON: ") + e.what());
    }
    return parse_config(j);
}

inline std::uint64_t config_hash(const RunConfig& cfg) {
    return fnv1a_hash(cfg.raw.dump() + "|" + cfg.subcommand);
}

// bump evaluators for the delta families: symmetric polynomial bump with
// pinned endpoint derivatives, optionally skewed (Calderon pairs)
inline std::function<double(double)> bump_evaluator(const FactorSpec& spec) {
    if (spec.kind == "poly-bump") {
        double p = spec.params.empty() ? 4.0 : spec.params[0];
        double skew = spec.params.size() > 1 ? spec.params[1] : 0.0;
        return [p, skew](double x) {
            double b = std::pow(4.0 * x * (1.0 - x), p);
            return b * (1.0 + skew * (x - 0.5));
        };
    }
    return factor_evaluator(spec);
}

// ---- output helpers --------------------------------------------------------

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const json& metadata) : out_(path) {
        if (!out_) throw ConfigError("cannot open output file: " + path);
        out_ << "# " << metadata.dump() << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ",";
            out_ << cells[i];
        }
        out_ << "\n";
    }

    static std::string num(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

  private:
    std::ofstream out_;
};

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace steklov
