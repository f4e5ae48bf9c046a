#include <doctest.h>

#include <stdexcept>

#include <string>

#include "dynbc/config.hpp"
#include "dynbc/report.hpp"

using namespace dynbc;

namespace {

std::string error_of(const std::string& text) {
    try {
        config_from_raw(parse_config_text(text));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("nested blocks flatten to dotted keys") {
        const RawConfig raw = parse_config_text(
            "# comment\n"
            "domain {\n  kind = interval  # trailing\n  a = 0\n}\n"
            "control { eps = [0.1, 0.05] }\n"
            "time.dt = 0.02\n");
        CHECK(raw.entries.at("domain.kind").value == "interval");
        CHECK(raw.entries.at("domain.kind").line == 3);
        CHECK(raw.entries.at("control.eps").value == "[0.1, 0.05]");
        CHECK(raw.entries.at("time.dt").value == "0.02");
    }

    TEST_CASE("typed values") {
        const RunConfig c = config_from_raw(parse_config_text(
            "control {\n eps = [0.2, 0.1]\n kappa = 12.5\n}\n"
            "time { dt = 0.02\n scheme = be }\n"
            "ensemble { seed = 42 }\n"));
        CHECK(c.eps == std::vector<double>{0.2, 0.1});
        REQUIRE(c.kappa);
        CHECK(*c.kappa == 12.5);
        CHECK(c.dt == 0.02);
        CHECK(c.scheme == Scheme::backward_euler);
        CHECK(c.seed == 42);
        const RunConfig a = config_from_raw(parse_config_text("control { kappa = auto }"));
        CHECK_FALSE(a.kappa);
    }

    TEST_CASE("disk defaults and points") {
        const RunConfig c = config_from_raw(parse_config_text(
            "domain { kind = disk\n center = [1, 2]\n radius = 2 }\n"
            "omega { center = [1, 2]\n radius = 1 }\n"));
        CHECK(c.kind == DomainKind::disk);
        CHECK(c.grid.nr == 8);
        CHECK(c.domain().x0().x == 1.0);
        CHECK(c.domain().x0().y == 2.0);
    }

    TEST_CASE("unknown keys are rejected by name and line") {
        const std::string msg = error_of("time {\n  T = 1\n  dtt = 0.1\n}\n");
        CHECK(msg.find("time.dtt") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
    }

    TEST_CASE("malformed input") {
        CHECK(error_of("time { dt = abc }").find("time.dt") != std::string::npos);
        CHECK(error_of("grid { n = 2.5 }").find("grid.n") != std::string::npos);
        CHECK(error_of("time { scheme = rk4 }").find("time.scheme") != std::string::npos);
        CHECK_THROWS_AS(parse_config_text("time { dt = 1"), ConfigError);
        CHECK_THROWS_AS(parse_config_text("}"), ConfigError);
        CHECK_THROWS_AS(parse_config_text("a = 1\na = 2"), ConfigError);
        CHECK_THROWS_AS(parse_config_text("just words"), ConfigError);
        CHECK(error_of("control { eps = [0.1, ] }").find("control.eps") != std::string::npos);
    }

    TEST_CASE("module preconditions surface as config errors") {
        CHECK(error_of("impulse { tau = 1.5 }").find("impulse.tau") != std::string::npos);
        CHECK(error_of("time { dt = 0.03 }").find("time.dt") != std::string::npos);
        CHECK(error_of("domain { x0 = 0.1 }").find("invalid domain") != std::string::npos);
        CHECK(error_of("weight { s = 0 }").size() > 0);
        CHECK(error_of("control { eps = [0.1, -1] }").find("control.eps") != std::string::npos);
    }

    TEST_CASE("shipped configs load") {
        CHECK_NOTHROW(load_config(std::string(DYNBC_CONFIG_DIR) + "/interval.cfg"));
        CHECK_NOTHROW(load_config(std::string(DYNBC_CONFIG_DIR) + "/disk.cfg"));
        CHECK_THROWS_AS(load_config("/nonexistent/file.cfg"), ConfigError);
    }

    TEST_CASE("json floats carry 17 significant digits") {
        CHECK(format_double(0.1) == "0.10000000000000001");
        CHECK(format_double(1.0 / 0.0) == "null");
        const std::string s = dump_json(Json{{"b", 1.5}, {"a", Json::array({true, nullptr})}});
        CHECK(s.find("\"a\"") < s.find("\"b\""));
        CHECK(s.find("1.5") != std::string::npos);
    }
}
