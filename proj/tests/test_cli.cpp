#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "json.hpp"

#include "obsim/cli.hpp"

using namespace obsim;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("obsim_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

// Runs the installed binary through the shell; stdout/stderr land in files.
CliResult run_cli(const std::string& args) {
    static int seq = 0;
    const fs::path base = work_dir() / ("run_" + std::to_string(seq++));
    const fs::path out = base.string() + ".out", err = base.string() + ".err";
    const std::string cmd = std::string(OBSIM_CLI_PATH) + " " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int ret = std::system(cmd.c_str());
    CliResult r;
    if (ret != -1 && WIFEXITED(ret)) r.code = WEXITSTATUS(ret);
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> ls;
    std::istringstream in(text);
    std::string l;
    while (std::getline(in, l)) ls.push_back(l);
    return ls;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fs_;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            fs_.push_back(cur);
            cur.clear();
        } else
            cur += c;
    }
    fs_.push_back(cur);
    return fs_;
}

} // namespace

TEST_CASE("exit codes map exception types to the documented contract") {
    CHECK(exit_code_for(IoError("disk gone")) == 4);
    CHECK(exit_code_for(std::ios_base::failure("stream")) == 4);
    CHECK(exit_code_for(ConvergenceError("stuck", 0.1)) == 3);
    CHECK(exit_code_for(IntegrationError("step underflow", 2.0)) == 3);
    CHECK(exit_code_for(ConfigError("typo")) == 2);
    CHECK(exit_code_for(std::invalid_argument("bad value")) == 2);
    CHECK(exit_code_for(std::out_of_range("range")) == 2);
    CHECK(exit_code_for(std::runtime_error("other")) == 1);
}

TEST_CASE("cli: help and usage errors") {
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("--help").out.find("steady") != std::string::npos);
    CHECK(run_cli("").code == 2);             // a subcommand is required
    CHECK(run_cli("frobnicate").code == 2);   // unknown subcommand
    const CliResult bad_flag = run_cli("steady --frobnicate");
    CHECK(bad_flag.code == 2);
    CHECK_FALSE(bad_flag.err.empty());
    CHECK(run_cli("--config /nonexistent/f.cfg steady").code == 4);
    CHECK(run_cli("--set atom.huh=1 steady").code == 2);
    CHECK(run_cli("--set atom.gamma21 steady").code == 2);
}

TEST_CASE("cli: preset listing and emission") {
    const CliResult list = run_cli("preset");
    REQUIRE(list.code == 0);
    std::vector<std::string> want;
    for (const auto& n : preset_names()) want.push_back(n);
    CHECK(lines_of(list.out) == want);

    const fs::path cfg_path = work_dir() / "fig3a.cfg";
    REQUIRE(run_cli("preset fig3a --out " + cfg_path.string()).code == 0);
    const RunConfig parsed = parse_config(slurp(cfg_path), cfg_path.string());
    CHECK(parsed == preset_config("fig3a"));

    // stdout emission is byte-identical to the file emission
    const CliResult direct = run_cli("preset fig3a");
    CHECK(direct.out == slurp(cfg_path));

    const CliResult bad = run_cli("preset fig9z");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("unknown") != std::string::npos);
}

TEST_CASE("cli: steady emits the full density matrix as JSON") {
    const CliResult r = run_cli("steady");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    const double sum = j["rho11"].get<double>() + j["rho22"].get<double>() +
                       j["rho33"].get<double>();
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK(j["residual"].get<double>() < 1e-9);
    CHECK_FALSE(j["degenerate_family"].get<bool>());

    // resonant two-level saturation at x = 1: d21 = -1/3, rho21 = -i/3
    const CliResult tl = run_cli(
        "--set atom.gamma23=0 atom.gamma31=0 drive.omega_c=0 steady");
    REQUIRE(tl.code == 0);
    const auto jt = nlohmann::json::parse(tl.out);
    CHECK_THAT(jt["d21"].get<double>(), Catch::Matchers::WithinAbs(-1.0 / 3.0, 1e-9));
    CHECK_THAT(jt["rho21"][0].get<double>(), Catch::Matchers::WithinAbs(0.0, 1e-9));
    CHECK_THAT(jt["rho21"][1].get<double>(), Catch::Matchers::WithinAbs(-1.0 / 3.0, 1e-9));
    CHECK_THAT(jt["rho33"].get<double>(), Catch::Matchers::WithinAbs(0.0, 1e-9));

    // two-photon resonance with no ground decay: the dark state carries no
    // probe coherence and an empty upper level
    const CliResult dark = run_cli("--set atom.gamma31=0 steady");
    REQUIRE(dark.code == 0);
    const auto jd = nlohmann::json::parse(dark.out);
    CHECK(std::abs(jd["rho21"][0].get<double>()) < 1e-9);
    CHECK(std::abs(jd["rho21"][1].get<double>()) < 1e-9);
    CHECK(jd["rho22"].get<double>() < 1e-8);
}

TEST_CASE("cli: steady --out matches stdout emission") {
    const fs::path out = work_dir() / "steady.json";
    REQUIRE(run_cli("steady --out " + out.string()).code == 0);
    CHECK(slurp(out) == run_cli("steady").out);
}

TEST_CASE("cli: spectrum emits the weak-probe response grid") {
    const CliResult r = run_cli("--set atom.gamma31=0 grid.delta_p_count=201 spectrum");
    REQUIRE(r.code == 0);
    const auto ls = lines_of(r.out);
    REQUIRE(ls.size() == 202);
    CHECK(ls[0] == "delta_p,re_response,im_response");
    bool saw_zero = false;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto f = split_csv(ls[i]);
        REQUIRE(f.size() == 3);
        if (std::stod(f[0]) == 0.0) {
            saw_zero = true;
            // exact transparency on two-photon resonance
            CHECK(std::abs(std::stod(f[1])) < 1e-9);
            CHECK(std::abs(std::stod(f[2])) < 1e-9);
        }
    }
    CHECK(saw_zero);
}

TEST_CASE("cli: curve requires --out and writes CSV plus sidecar") {
    CHECK(run_cli("curve").code == 2);
    CHECK(run_cli("curve --out /nonexistent_dir/x.csv").code == 4);

    const fs::path out = work_dir() / "empty_cavity.csv";
    const CliResult r = run_cli("--set cavity.C=0 grid.x_max=2 grid.x_count=101 curve --out " +
                                out.string());
    REQUIRE(r.code == 0);
    const auto ls = lines_of(slurp(out));
    REQUIRE(ls.size() == 102);
    CHECK(ls[0] == "x,y_re,y_im,y_mag,branch_id,stable");
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto f = split_csv(ls[i]);
        REQUIRE(f.size() == 6);
        CHECK(f[0] == f[3]); // an empty cavity transmits the drive unchanged
        CHECK(f[4] == "0");
        CHECK(f[5] == "1");
    }
    const auto side = nlohmann::json::parse(slurp(work_dir() / "empty_cavity.json"));
    CHECK(side["version"].get<std::string>() == kVersion);
    CHECK(side["command"].get<std::string>() == "curve");
    CHECK(side["config"]["cavity"]["C"].get<double>() == 0.0);
    CHECK(side["curve"]["turning_points"].empty());
    CHECK(side["curve"]["thresholds"].empty());
    REQUIRE(side["curve"]["branch_stable"].size() == 1);
    CHECK(side["curve"]["branch_stable"][0].get<bool>());
}

TEST_CASE("cli: hysteresis emits an up-then-down ramp") {
    const CliResult r = run_cli(
        "--set atom.gamma23=0 atom.gamma31=0 drive.omega_c=0 cavity.C=10"
        " hysteresis.y_min=5 hysteresis.y_max=9 hysteresis.y_step=0.5 hysteresis");
    REQUIRE(r.code == 0);
    const auto ls = lines_of(r.out);
    REQUIRE(ls.size() == 1 + 2 * 9);
    CHECK(ls[0] == "direction,y,x,converged");
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto f = split_csv(ls[i]);
        REQUIRE(f.size() == 4);
        CHECK(f[0] == (i <= 9 ? "up" : "down"));
        CHECK(f[3] == "1");
    }
    CHECK(split_csv(ls[1])[1] == "5");  // up ramp starts at y_min
    CHECK(split_csv(ls[10])[1] == "9"); // down ramp starts at y_max
    // the loop is hysteretic: at y = 7 the two passes sit on different branches
    const double x_up = std::stod(split_csv(ls[5])[2]);
    const double x_dn = std::stod(split_csv(ls[14])[2]);
    CHECK(split_csv(ls[5])[1] == "7");
    CHECK(split_csv(ls[14])[1] == "7");
    CHECK(x_dn > x_up + 1.0);
}

TEST_CASE("cli: sweep writes a summary, a sidecar and optional per-point curves") {
    CHECK(run_cli("--set sweep.preset=fig3a sweep").code == 2); // --out required

    const fs::path out = work_dir() / "cheap_sweep.csv";
    const CliResult r = run_cli(
        "--set cavity.C=0 grid.x_max=2 grid.x_count=101 sweep.emit_curves=1"
        " \"sweep.axis1=atom.delta_p : 0 0.5\" sweep --workers 2 --out " +
        out.string());
    INFO(r.err);
    REQUIRE(r.code == 0);
    const auto ls = lines_of(slurp(out));
    REQUIRE(ls.size() == 3);
    CHECK(ls[0] == "atom.delta_p,ok,turning_points");
    CHECK(split_csv(ls[1]) == std::vector<std::string>{"0", "1", "0"});
    CHECK(split_csv(ls[2]) == std::vector<std::string>{"0.5", "1", "0"});

    const auto side = nlohmann::json::parse(slurp(work_dir() / "cheap_sweep.json"));
    CHECK(side["command"].get<std::string>() == "sweep");
    CHECK(side["sweep"]["points"].get<int>() == 2);
    CHECK(side["sweep"]["workers"].get<int>() == 2);
    REQUIRE(side["sweep"]["records"].size() == 2);
    for (const auto& rec : side["sweep"]["records"]) {
        CHECK(rec["ok"].get<bool>());
        CHECK(rec["turning_points"].get<int>() == 0);
        const std::string pf = rec["curve_file"].get<std::string>();
        CHECK(fs::exists(pf));
        CHECK(lines_of(slurp(pf)).size() == 102);
    }
}

TEST_CASE("cli: config file plus --set override order") {
    const fs::path cfg = work_dir() / "override.cfg";
    std::ofstream(cfg) << "[atom]\ngamma31 = 0.1\ndelta_c = 0.7\n";
    const CliResult r = run_cli("--config " + cfg.string() +
                                " --set atom.gamma31=0.025 cavity.C=0"
                                " grid.x_max=2 grid.x_count=101 curve --out " +
                                (work_dir() / "ov.csv").string());
    INFO(r.err);
    REQUIRE(r.code == 0);
    const auto side = nlohmann::json::parse(slurp(work_dir() / "ov.json"));
    CHECK(side["config"]["atom"]["gamma31"].get<double>() == 0.025); // override wins
    CHECK(side["config"]["atom"]["delta_c"].get<double>() == 0.7);   // file value kept
}
