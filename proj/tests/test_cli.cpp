#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifndef STEKLOV_LAB_BIN
#define STEKLOV_LAB_BIN "steklov-lab"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string stdout_text;
};

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    std::string log = (fs::temp_directory_path() / ("cli_out_" + std::to_string(counter++))).string();
    std::string cmd = std::string(STEKLOV_LAB_BIN) + " " + args + " > " + log + " 2>&1";
    int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(rc);
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.stdout_text = ss.str();
    fs::remove(log);
    return r;
}

std::string write_config(const json& j, const std::string& name) {
    fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << j.dump(2);
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("spectrum subcommand writes closed-form-matching rows") {
    fs::path out = fs::temp_directory_path() / "cli_spec";
    fs::remove_all(out);
    json cfg = {{"n", 3},
                {"omega", 0.0},
                {"m_max", 4},
                {"factor", {{"kind", "constant"}, {"parameters", {1.0}}}}};
    std::string cpath = write_config(cfg, "spec.json");
    RunResult r = run_cli("spectrum --config " + cpath + " --out " + out.string());
    REQUIRE(r.exit_code == 0);

    std::string csv = slurp(out / "spectrum.csv");
    REQUIRE(csv.rfind("# {", 0) == 0);                      // metadata header line
    REQUIRE(csv.find("config_hash") != std::string::npos);  // hash embedded

    // parse the m=2 row: kappa=6, mult=5, lambda- = sqrt(6) tanh(sqrt(6)/2)
    std::istringstream lines(csv);
    std::string line;
    bool found = false;
    while (std::getline(lines, line)) {
        if (line.rfind("2,", 0) == 0) {
            double kappa, lm, lp;
            unsigned long long mult;
            REQUIRE(std::sscanf(line.c_str(), "2,%lf,%llu,%lf,%lf", &kappa, &mult, &lm, &lp) == 4);
            REQUIRE(kappa == 6.0);
            REQUIRE(mult == 5);
            double y = std::sqrt(6.0);
            REQUIRE(std::fabs(lm - y * std::tanh(y / 2)) < 1e-8);
            found = true;
        }
    }
    REQUIRE(found);

    SECTION("byte-identical rerun under a fixed config") {
        std::string first = slurp(out / "spectrum.csv");
        RunResult r2 = run_cli("spectrum --config " + cpath + " --out " + out.string());
        REQUIRE(r2.exit_code == 0);
        REQUIRE(slurp(out / "spectrum.csv") == first);
    }
}

TEST_CASE("spectrum at a Dirichlet pole exits 3 naming the stage") {
    fs::path out = fs::temp_directory_path() / "cli_pole";
    // omega = kappa_1 + pi^2 puts Delta(kappa_1) at a zero for f = 1, n = 3
    double omega = 2.0 + M_PI * M_PI;
    json cfg = {{"n", 3},
                {"omega", omega},
                {"m_max", 3},
                {"factor", {{"kind", "constant"}, {"parameters", {1.0}}}}};
    RunResult r = run_cli("spectrum --config " + write_config(cfg, "pole.json") + " --out " +
                          out.string());
    REQUIRE(r.exit_code == 3);
}

TEST_CASE("spectrum with m_max = 0 writes a single row") {
    fs::path out = fs::temp_directory_path() / "cli_m0";
    json cfg = {{"n", 4},
                {"omega", 0.0},
                {"m_max", 0},
                {"factor", {{"kind", "constant"}, {"parameters", {2.0}}}}};
    RunResult r = run_cli("spectrum --config " + write_config(cfg, "m0.json") + " --out " +
                          out.string());
    REQUIRE(r.exit_code == 0);
    std::string csv = slurp(out / "spectrum.csv");
    int rows = 0;
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line))
        if (!line.empty() && line[0] != '#' && line[0] != 'm') ++rows;
    REQUIRE(rows == 1);
}

TEST_CASE("compare subcommand exit codes") {
    json base = {{"n", 3},
                 {"omega", 0.0},
                 {"m_max", 8},
                 {"eps", 1e-8},
                 {"factor", {{"kind", "fourier"}, {"parameters", {1.2, 0.1, 0.05}}, {"degree", 64}}}};

    SECTION("identical factors hold") {
        json cfg = base;
        cfg["factor_tilde"] = cfg["factor"];
        fs::path out = fs::temp_directory_path() / "cli_cmp0";
        RunResult r = run_cli("compare --config " + write_config(cfg, "cmp0.json") + " --out " +
                              out.string());
        REQUIRE(r.exit_code == 0);
        json rep = json::parse(slurp(out / "closeness.json"));
        REQUIRE(rep.at("holds").get<bool>());
    }

    SECTION("factor vs its involution holds (gauge invariance)") {
        // f = 1.2 + 0.1 cos + 0.05 sin; involution flips the sine sign
        json cfg = base;
        cfg["factor_tilde"] = {{"kind", "fourier"}, {"parameters", {1.2, 0.1, -0.05}}, {"degree", 64}};
        fs::path out = fs::temp_directory_path() / "cli_cmp1";
        RunResult r = run_cli("compare --config " + write_config(cfg, "cmp1.json") + " --out " +
                              out.string());
        REQUIRE(r.exit_code == 0);
    }

    SECTION("mismatched endpoints with tight eps fail with exit 1") {
        json cfg = base;
        cfg["factor_tilde"] = {{"kind", "constant"}, {"parameters", {2.0}}};
        fs::path out = fs::temp_directory_path() / "cli_cmp2";
        RunResult r = run_cli("compare --config " + write_config(cfg, "cmp2.json") + " --out " +
                              out.string());
        REQUIRE(r.exit_code == 1);
    }
}

TEST_CASE("stability subcommand") {
    SECTION("default symmetric family exits 0 and writes the aggregate CSV") {
        json cfg = {{"n", 3},
                    {"omega", 0.0},
                    {"m_max", 14},
                    {"factor", {{"kind", "constant"}, {"parameters", {1.0}}}},
                    {"bump", {{"kind", "poly-bump"}, {"parameters", {4.0}}}},
                    {"deltas", {1e-2, 1e-3}},
                    {"kernel", {{"grid_n", 128}, {"tol", 1e-10}}}};
        fs::path out = fs::temp_directory_path() / "cli_stab";
        RunResult r = run_cli("stability --config " + write_config(cfg, "stab.json") + " --out " +
                              out.string());
        INFO(r.stdout_text);
        REQUIRE(r.exit_code == 0);
        std::string csv = slurp(out / "stability.csv");
        REQUIRE(csv.find("bound_product") != std::string::npos);
        REQUIRE(fs::exists(out / "record_0.json"));
    }

    SECTION("calderon mode with endpoint mismatch exits 1 with diverging diagnostic") {
        json cfg = {{"n", 3},
                    {"omega", 0.0},
                    {"m_max", 20},
                    {"mode", "calderon"},
                    {"factor", {{"kind", "constant"}, {"parameters", {1.0}}}},
                    {"factor_tilde", {{"kind", "constant"}, {"parameters", {4.0}}}},
                    {"kernel", {{"grid_n", 128}, {"tol", 1e-10}}}};
        fs::path out = fs::temp_directory_path() / "cli_stabdiv";
        RunResult r = run_cli("stability --config " + write_config(cfg, "stabdiv.json") +
                              " --out " + out.string());
        REQUIRE(r.exit_code == 1);
        json rep = json::parse(slurp(out / "stability_diverging.json"));
        REQUIRE(rep.at("diverging").get<bool>());
    }

    SECTION("empty delta list is a config error (exit 2)") {
        json cfg = {{"n", 3},
                    {"omega", 0.0},
                    {"factor", {{"kind", "constant"}, {"parameters", {1.0}}}},
                    {"bump", {{"kind", "poly-bump"}, {"parameters", {4.0}}}},
                    {"deltas", json::array()}};
        RunResult r = run_cli("stability --config " + write_config(cfg, "stabz.json"));
        REQUIRE(r.exit_code == 2);
    }
}

TEST_CASE("kernel subcommand dumps binary + metadata + residuals") {
    json cfg = {{"n", 3},
                {"omega", 0.0},
                {"factor", {{"kind", "constant"}, {"parameters", {1.0}}}},
                {"kernel", {{"grid_n", 128}, {"tol", 1e-10}}}};
    fs::path out = fs::temp_directory_path() / "cli_ker";
    RunResult r = run_cli("kernel --config " + write_config(cfg, "ker.json") + " --out " +
                          out.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(out / "kernel.bin"));
    json meta = json::parse(slurp(out / "kernel_meta.json"));
    int gn = meta.at("grid_n").get<int>();
    std::size_t expected = 0;
    for (int i = 0; i <= gn; ++i) expected += 2 * i + 1;
    REQUIRE(meta.at("values").get<std::size_t>() == expected);
    REQUIRE(fs::file_size(out / "kernel.bin") == expected * sizeof(double));
    REQUIRE(fs::exists(out / "kernel_residuals.csv"));
}

TEST_CASE("muntz-table subcommand") {
    json cfg = {{"n", 2}, {"muntz", {{"m0", 0}, {"m_max", 25}}}};
    fs::path out = fs::temp_directory_path() / "cli_mz";
    RunResult r = run_cli("muntz-table --config " + write_config(cfg, "mz.json") + " --out " +
                          out.string());
    REQUIRE(r.exit_code == 0);
    std::string csv = slurp(out / "muntz_table.csv");
    REQUIRE(csv.find("eps2_up_to_k") != std::string::npos);
    // lambda_1 = 2 for n = 2
    REQUIRE(csv.find("\n1,2,") != std::string::npos);
}

TEST_CASE("config parse errors exit 2") {
    fs::path p = fs::temp_directory_path() / "bad.json";
    std::ofstream(p) << "{ not json";
    RunResult r = run_cli("spectrum --config " + p.string());
    REQUIRE(r.exit_code == 2);
}
