#include <doctest.h>

#include <stdexcept>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dynbc/report.hpp"

namespace fs = std::filesystem;
using dynbc::Json;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("dynbc_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(DYNBC_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& extra, int n = 16) {
    const fs::path p = dir / "run.cfg";
    std::ofstream(p) << "grid { n = " << n << " }\n" << extra;
    return p;
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("zero initial control state exits cleanly with zero control") {
        Scratch s("zero");
        const auto cfg = write_config(s.dir, "control { psi0 = zero }\n");
        CHECK(run("control --config " + cfg.string() + " --out " + s.dir.string(), s.dir / "log") == 0);
        const Json j = dynbc::read_json(s.dir / "control.json");
        CHECK(j["passed"].get<bool>());
        CHECK(j["members"][0]["norm_h"].get<double>() == 0.0);
    }

    TEST_CASE("degenerate observe ensemble is a validation error") {
        Scratch s("degenerate");
        const auto cfg = write_config(s.dir, "ensemble { count = 1\n initial = zero }\n");
        CHECK(run("observe --config " + cfg.string() + " --out " + s.dir.string(), s.dir / "log") == 2);
        CHECK(slurp(s.dir / "log").find("ensemble.count") != std::string::npos);
    }

    TEST_CASE("unknown keys and missing config") {
        Scratch s("unknown");
        const auto cfg = write_config(s.dir, "control { epsilon = 0.1 }\n");
        CHECK(run("control --config " + cfg.string() + " --out " + s.dir.string(), s.dir / "log") == 2);
        CHECK(slurp(s.dir / "log").find("control.epsilon") != std::string::npos);
        CHECK(run("simulate --out " + s.dir.string(), s.dir / "log") == 2);
        CHECK(run("frobnicate", s.dir / "log") != 0);
    }

    TEST_CASE("commutator check writes a decreasing residual table") {
        Scratch s("commutator");
        const auto cfg = write_config(s.dir, "commutator { levels = 3 }\n", 32);
        CHECK(run("commutator-check --config " + cfg.string() + " --out " + s.dir.string(), s.dir / "log") == 0);
        std::ifstream in(s.dir / "commutator.csv");
        std::string line;
        std::getline(in, line);
        CHECK(line == "resolution,dofs,lhs,rhs,rel_residual,order");
        double prev = 1e300;
        int rows = 0;
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string cell;
            for (int k = 0; k < 5; ++k) std::getline(ss, cell, ',');
            const double r = std::stod(cell);
            CHECK(r < prev);
            prev = r;
            ++rows;
        }
        CHECK(rows == 3);
    }

    TEST_CASE("report merging") {
        Scratch s("report");
        CHECK(run("report --out " + s.dir.string(), s.dir / "log") == 2);
        const std::string msg = slurp(s.dir / "log");
        CHECK(msg.find("control.json") != std::string::npos);
        CHECK(msg.find("observe.json") != std::string::npos);
        fs::remove(s.dir / "log");

        const auto cfg = write_config(s.dir, "control { members = 2 }\n");
        CHECK(run("control --config " + cfg.string() + " --out " + s.dir.string(), s.dir / "log") == 0);
        CHECK(run("report --out " + s.dir.string(), s.dir / "log") == 0);
        const Json r = dynbc::read_json(s.dir / "report.json");
        CHECK(r["observe"].is_null());
        CHECK(r["constants"].is_null());
        CHECK(r["flags"]["control"].get<bool>());
        CHECK(r["all_passed"].get<bool>());
        const std::string first = slurp(s.dir / "report.json");
        CHECK(run("report --out " + s.dir.string(), s.dir / "log") == 0);
        CHECK(slurp(s.dir / "report.json") == first);

        // a failing run turns the merged flag off
        const auto tiny = write_config(s.dir, "control { kappa = 1e-6 }\n");
        CHECK(run("control --config " + tiny.string() + " --out " + s.dir.string(), s.dir / "log") == 1);
        CHECK(run("report --out " + s.dir.string(), s.dir / "log") == 1);
        const Json r2 = dynbc::read_json(s.dir / "report.json");
        CHECK_FALSE(r2["all_passed"].get<bool>());
        CHECK_FALSE(r2["control"]["members"][0]["flags"]["target"].get<bool>());
    }

    TEST_CASE("seed fixes the output and --seed overrides it") {
        Scratch s("seed");
        const auto cfg = write_config(s.dir, "control { members = 2 }\n");
        const auto a = s.dir / "a", b = s.dir / "b", c = s.dir / "c";
        CHECK(run("control --config " + cfg.string() + " --out " + a.string(), s.dir / "log") == 0);
        CHECK(run("control --config " + cfg.string() + " --out " + b.string() + " --threads 1", s.dir / "log") == 0);
        CHECK(run("control --config " + cfg.string() + " --out " + c.string() + " --seed 99", s.dir / "log") == 0);
        CHECK(slurp(a / "control.json") == slurp(b / "control.json"));
        CHECK(slurp(a / "control.json") != slurp(c / "control.json"));
    }
}
