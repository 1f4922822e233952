// steklov-lab: command line driver for the Steklov spectrum / inverse problem
// pipelines.  Subcommands: spectrum | compare | stability | kernel | muntz-table.
// Outputs are CSV with one '#'-prefixed JSON metadata line (carrying the
// config hash) or JSON records; exit codes: 0 ok / holds, 1 semantic failure
// (closeness fails, diverging operator norm), 2 config error, 3 numerical
// error with the stage name on stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "steklov/steklov.hpp"

namespace fs = std::filesystem;
using namespace steklov;

namespace {

json meta_for(const RunConfig& cfg) {
    json m;
    m["config_hash"] = config_hash(cfg);
    m["subcommand"] = cfg.subcommand;
    m["n"] = cfg.n;
    m["omega"] = cfg.omega;
    return m;
}

int cmd_spectrum(RunConfig cfg) {
    ConformalFactor f = make_factor(cfg.factor);
    OdeOptions opt;
    opt.rtol = cfg.rtol;
    SteklovSpectrum spec = steklov_spectrum(f, cfg.n, cfg.omega, cfg.m_max, opt, cfg.threads);

    fs::create_directories(cfg.out_dir);
    std::string path = (fs::path(cfg.out_dir) / "spectrum.csv").string();
    CsvWriter csv(path, meta_for(cfg));
    csv.row({"m", "kappa", "mult", "lambda_minus", "lambda_plus"});
    for (const auto& r : spec.rows)
        csv.row({std::to_string(r.m), CsvWriter::num(r.kappa), std::to_string(r.multiplicity),
                 CsvWriter::num(r.lambda_minus), CsvWriter::num(r.lambda_plus)});

    // expansion coefficients report: (j, beta_j(0), gamma_j(0))
    {
        Potential q = potential_from_factor(f, cfg.n, cfg.omega);
        ExpansionCoefficients e = weyl_expansion_coefficients(q, 6);
        CsvWriter bcsv((fs::path(cfg.out_dir) / "expansion.csv").string(), meta_for(cfg));
        bcsv.row({"j", "beta_j_0", "gamma_j_0"});
        for (int j = 0; j <= 6; ++j)
            bcsv.row({std::to_string(j), CsvWriter::num(e.betas[j](0.0)),
                      CsvWriter::num(e.gammas[j](0.0))});
    }

    if (cfg.json_output) {
        json j;
        j["meta"] = meta_for(cfg);
        j["factor"] = cfg.factor.kind;
        json rows = json::array();
        for (const auto& r : spec.rows)
            rows.push_back({{"m", r.m},
                            {"kappa", r.kappa},
                            {"mult", r.multiplicity},
                            {"lambda_minus", r.lambda_minus},
                            {"lambda_plus", r.lambda_plus}});
        j["rows"] = rows;
        write_json_file((fs::path(cfg.out_dir) / "spectrum.json").string(), j);
    }

    std::printf("spectrum: n=%d omega=%g m_max=%d -> %s\n", cfg.n, cfg.omega, cfg.m_max,
                path.c_str());
    int shown = 0;
    for (const auto& r : spec.rows) {
        if (shown++ >= 5) break;
        double res_m = 0, res_p = 0;
        if (r.m >= 1) {
            res_m = r.lambda_minus - eigenvalue_asymptote(f, cfg.n, r.m, -1);
            res_p = r.lambda_plus - eigenvalue_asymptote(f, cfg.n, r.m, +1);
        }
        std::printf("  m=%2d kappa=%8.1f mult=%llu  lambda-=% .8f lambda+=% .8f  "
                    "asymptote residuals % .2e % .2e\n",
                    r.m, r.kappa, static_cast<unsigned long long>(r.multiplicity),
                    r.lambda_minus, r.lambda_plus, res_m, res_p);
    }
    return 0;
}

int cmd_compare(RunConfig cfg) {
    if (!cfg.has_tilde) throw ConfigError("compare needs factor and factor_tilde");
    ConformalFactor f = make_factor(cfg.factor);
    ConformalFactor ft = make_factor(cfg.factor_tilde);
    OdeOptions opt;
    opt.rtol = cfg.rtol;
    SteklovSpectrum S = steklov_spectrum(f, cfg.n, cfg.omega, cfg.m_max, opt, cfg.threads);
    SteklovSpectrum St = steklov_spectrum(ft, cfg.n, cfg.omega, cfg.m_max, opt, cfg.threads);
    ClosenessReport rep = spectra_close(S, St, cfg.eps);

    json j;
    j["meta"] = meta_for(cfg);
    j["eps"] = cfg.eps;
    j["holds"] = rep.holds;
    j["crossed_pairing_blocks"] = rep.crossed_pairing_blocks;
    json rows = json::array();
    for (const auto& r : rep.per_eigenvalue)
        rows.push_back({{"m", r.m},
                        {"value", r.value},
                        {"matched", r.matched_value},
                        {"gap", r.gap},
                        {"cardinality_ok", r.cardinality_ok}});
    j["per_eigenvalue"] = rows;

    if (cfg.rate_fit) {
        try {
            RateFit rf = exponential_rate_fit(S, St, cfg.rate_branch, cfg.rate_m_lo,
                                              cfg.rate_m_hi);
            j["rate_fit"] = {{"rate", rf.rate},
                             {"r_squared", rf.r_squared},
                             {"points", rf.points_used}};
        } catch (const NumericalError& e) {
            j["rate_fit"] = {{"invalid", e.what()}};
        }
    }

    fs::create_directories(cfg.out_dir);
    write_json_file((fs::path(cfg.out_dir) / "closeness.json").string(), j);
    std::printf("compare: eps=%g holds=%s\n", cfg.eps, rep.holds ? "true" : "false");
    return rep.holds ? 0 : 1;
}

json record_to_json(const ExperimentRecord& r) {
    json j;
    j["mode"] = r.mode;
    j["delta"] = r.delta;
    j["eps"] = r.eps;
    j["closeness_holds"] = r.closeness_holds;
    j["pairing_k0_first_m"] = r.pairing_k0_first_m;
    j["q_gap_L2_chain"] = r.q_gap_L2;
    j["q_gap_L2_direct"] = r.q_gap_L2_direct;
    j["q_gap_sup"] = r.q_gap_sup;
    j["q_gap_H1"] = r.q_gap_H1;
    j["f_gap_sup"] = r.f_gap_sup;
    j["f_gap_pathway"] = r.f_gap_pathway;
    j["bound_product"] = r.bound_product;
    j["h_norm_direct"] = r.h_norm_direct;
    j["h_norm_bound"] = r.h_norm_bound;
    j["measured_moment_const"] = r.measured_moment_const;
    j["modulus_slope"] = r.modulus_slope;
    j["jackson_ratio"] = r.jackson_ratio;
    j["muntz_m"] = r.muntz_m;
    j["eps2_at_m"] = r.eps2_at_m;
    j["b_inv_norm_bound"] = r.b_inv_norm_bound;
    j["bl_norm_bound"] = r.bl_norm_bound;
    j["bl_norm_direct"] = r.bl_norm_direct;
    j["diverging"] = r.diverging;
    j["calderon_slope"] = r.calderon_slope;
    json gaps = json::array();
    for (const auto& g : r.trace_det_gaps)
        gaps.push_back({{"m", g.m}, {"trace_gap", g.trace_gap}, {"det_gap", g.det_combination_gap}});
    j["trace_det_gaps"] = gaps;
    return j;
}

int cmd_stability(RunConfig cfg) {
    if (!cfg.has_tilde && !cfg.has_bump)
        throw ConfigError("stability needs factor_tilde or a bump + deltas family");
    if (cfg.has_bump && cfg.deltas.empty())
        throw ConfigError("stability family needs a non-empty deltas list");

    ConformalFactor f = make_factor(cfg.factor);
    StabilityConfig scfg;
    scfg.m_max = cfg.m_max;
    scfg.kernel_grid = cfg.kernel_grid;
    scfg.kernel_tol = cfg.kernel_tol;
    scfg.ode.rtol = cfg.rtol;
    scfg.threads = cfg.threads;

    fs::create_directories(cfg.out_dir);

    // endpoint gate for Calderon mode: mismatched endpoints are reported as a
    // diverging diagnostic, not a crash
    if (cfg.mode == "calderon") {
        ConformalFactor probe = cfg.has_tilde
                                    ? make_factor(cfg.factor_tilde)
                                    : ConformalFactor::from_function(
                                          [&](double x) {
                                              return f(x) + cfg.deltas.front() *
                                                                bump_evaluator(cfg.bump)(x);
                                          },
                                          std::max(f.degree(), 64));
        double e0 = std::fabs(f(0.0) - probe(0.0));
        double e1 = std::fabs(f(1.0) - probe(1.0));
        if (e0 > 1e-9 * (1 + f(0.0)) || e1 > 1e-9 * (1 + f(1.0))) {
            CalderonNorm cn = calderon_norm_difference(f, probe, cfg.n, cfg.omega, cfg.m_max,
                                                       scfg.ode, cfg.threads);
            json j;
            j["meta"] = meta_for(cfg);
            j["diverging"] = cn.diverging;
            j["slope"] = cn.slope;
            j["reason"] = "endpoint values differ: operator difference unbounded";
            write_json_file((fs::path(cfg.out_dir) / "stability_diverging.json").string(), j);
            std::printf("stability: diverging (endpoint mismatch), slope=%.6g\n", cn.slope);
            return 1;
        }
    }

    std::vector<ExperimentRecord> records;
    if (cfg.has_bump) {
        FamilyResult fam = run_delta_family(f, bump_evaluator(cfg.bump), cfg.deltas, cfg.n,
                                            cfg.omega, scfg, cfg.mode);
        records = std::move(fam.records);
    } else {
        ConformalFactor ft = make_factor(cfg.factor_tilde);
        records.push_back(cfg.mode == "calderon"
                              ? run_calderon_stability(f, ft, cfg.n, cfg.omega, scfg)
                              : run_steklov_stability(f, ft, cfg.n, cfg.omega, scfg));
    }

    CsvWriter csv((fs::path(cfg.out_dir) / "stability.csv").string(), meta_for(cfg));
    csv.row({"delta", "eps", "q_gap_L2_chain", "q_gap_L2_direct", "bound_product", "f_gap_sup"});
    bool ok = true;
    json recs = json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        csv.row({CsvWriter::num(r.delta), CsvWriter::num(r.eps), CsvWriter::num(r.q_gap_L2),
                 CsvWriter::num(r.q_gap_L2_direct), CsvWriter::num(r.bound_product),
                 CsvWriter::num(r.f_gap_sup)});
        recs.push_back(record_to_json(r));
        write_json_file((fs::path(cfg.out_dir) / ("record_" + std::to_string(i) + ".json")).string(),
                        record_to_json(r));
        if (r.q_gap_L2_direct > r.q_gap_L2 + 1e-12) ok = false;  // chain must bound truth
        if (r.diverging) ok = false;
    }
    json all;
    all["meta"] = meta_for(cfg);
    all["records"] = recs;
    write_json_file((fs::path(cfg.out_dir) / "stability.json").string(), all);
    std::printf("stability: %zu record(s), invariants %s\n", records.size(),
                ok ? "passed" : "FAILED");
    return ok ? 0 : 1;
}

int cmd_kernel(RunConfig cfg) {
    ConformalFactor f = make_factor(cfg.factor);
    Potential q = potential_from_factor(f, cfg.n, cfg.omega);
    KernelGrid kg(q, cfg.kernel_grid, cfg.kernel_tol);

    fs::create_directories(cfg.out_dir);
    // flat binary of K over the triangle |t| <= x <= 1 at spacing 1/grid_n,
    // row-major in (i = x index, j = t index from -i..i)
    std::string bin_path = (fs::path(cfg.out_dir) / "kernel.bin").string();
    std::ofstream bin(bin_path, std::ios::binary);
    int gn = kg.grid_n();
    std::size_t count = 0;
    for (int i = 0; i <= gn; ++i)
        for (int j = -i; j <= i; ++j) {
            double v = kg.K(static_cast<double>(i) / gn, static_cast<double>(j) / gn);
            bin.write(reinterpret_cast<const char*>(&v), sizeof(v));
            ++count;
        }
    bin.close();

    json meta = meta_for(cfg);
    meta["grid_n"] = gn;
    meta["spacing"] = kg.spacing();
    meta["values"] = count;
    meta["potential_tag"] = cfg.factor.kind;
    meta["iterations"] = kg.iterations();
    meta["residual"] = kg.residual();
    write_json_file((fs::path(cfg.out_dir) / "kernel_meta.json").string(), meta);

    CsvWriter csv((fs::path(cfg.out_dir) / "kernel_residuals.csv").string(), meta_for(cfg));
    csv.row({"kappa", "x", "s0_residual", "c0_residual"});
    OdeOptions opt;
    opt.rtol = cfg.rtol;
    for (double kappa : {1.0, 25.0, 400.0})
        for (double x : {0.25, 0.5, 1.0}) {
            RepresentationResiduals r = representation_check(kg, kappa, x, opt);
            csv.row({CsvWriter::num(kappa), CsvWriter::num(x), CsvWriter::num(r.s0),
                     CsvWriter::num(r.c0)});
        }
    std::printf("kernel: grid_n=%d iterations=%d residual=%.3e -> %s\n", gn, kg.iterations(),
                kg.residual(), bin_path.c_str());
    return 0;
}

int cmd_muntz_table(RunConfig cfg) {
    int m0 = cfg.muntz_m0 >= 0 ? cfg.muntz_m0 : (cfg.n == 2 ? 0 : 1);
    MuntzSystem sys = muntz_sequence(cfg.n, m0, m0 + cfg.muntz_mmax);
    fs::create_directories(cfg.out_dir);
    CsvWriter csv((fs::path(cfg.out_dir) / "muntz_table.csv").string(), meta_for(cfg));
    csv.row({"k", "lambda", "gap", "eps2_up_to_k", "log_row_abs_sum"});
    double logp = 0.0;
    for (int k = 0; k < sys.size(); ++k) {
        logp += std::log(std::fabs(sys.lambda(k) - 0.5) / (sys.lambda(k) + 1.5));
        double gap = k + 1 < sys.size() ? sys.lambda(k + 1) - sys.lambda(k) : 0.0;
        csv.row({std::to_string(k), CsvWriter::num(sys.lambda(k)), CsvWriter::num(gap),
                 CsvWriter::num(std::exp(logp)), CsvWriter::num(sys.log_row_abs_sum(k))});
    }
    std::printf("muntz-table: n=%d m0=%d size=%d\n", cfg.n, m0, sys.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steklov spectrum laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    int m_max_override = -1, threads = 0;
    bool json_out = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config path")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--m-max", m_max_override, "override m_max");
        sub->add_option("--threads", threads, "worker threads (STEKLOV_LAB_THREADS overrides)");
        sub->add_flag("--json", json_out, "also write JSON outputs");
    };

    CLI::App* c_spec = app.add_subcommand("spectrum", "compute a Steklov spectrum");
    CLI::App* c_cmp = app.add_subcommand("compare", "closeness of two spectra");
    CLI::App* c_stab = app.add_subcommand("stability", "stability experiment chain");
    CLI::App* c_ker = app.add_subcommand("kernel", "transformation kernel dump");
    CLI::App* c_mz = app.add_subcommand("muntz-table", "Muntz exponent/coefficient table");
    for (CLI::App* s : {c_spec, c_cmp, c_stab, c_ker, c_mz}) add_common(s);

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        cfg.out_dir = out_dir;
        cfg.json_output = json_out;
        if (m_max_override >= 0) cfg.m_max = m_max_override;
        if (threads > 0) cfg.threads = threads;
        if (const char* env = std::getenv("STEKLOV_LAB_THREADS")) {
            int v = std::atoi(env);
            if (v > 0) cfg.threads = v;
        }

        if (c_spec->parsed()) {
            cfg.subcommand = "spectrum";
            return cmd_spectrum(cfg);
        }
        if (c_cmp->parsed()) {
            cfg.subcommand = "compare";
            return cmd_compare(cfg);
        }
        if (c_stab->parsed()) {
            cfg.subcommand = "stability";
            return cmd_stability(cfg);
        }
        if (c_ker->parsed()) {
            cfg.subcommand = "kernel";
            return cmd_kernel(cfg);
        }
        if (c_mz->parsed()) {
            cfg.subcommand = "muntz-table";
            return cmd_muntz_table(cfg);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error [" << e.stage_name << "]: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
