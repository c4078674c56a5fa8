#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "hevdp/config.hpp"
#include "hevdp/errors.hpp"

using namespace hevdp;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) : path(name) {
        std::ofstream out(path, std::ios::trunc);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("key-value files parse comments, order and lookups") {
    const KeyValueFile kv = KeyValueFile::parse_text(
        "# banner\n"
        "alpha = 1.5   # trailing comment\n"
        "\n"
        "name = hello world\n"
        "count = 3\n"
        "flag = yes\n"
        "list = 1, 2.5 ,3\n",
        "mem");
    CHECK(kv.origin() == "mem");
    REQUIRE(kv.entries().size() == 5);
    CHECK(kv.entries()[0].first == "alpha");
    CHECK(kv.entries()[1].first == "name");
    CHECK(kv.has("flag"));
    CHECK_FALSE(kv.has("absent"));
    CHECK(kv.get_double("alpha", 0.0) == 1.5);
    CHECK(kv.get_string("name", "") == "hello world");
    CHECK(kv.get_int("count", 0) == 3);
    CHECK(kv.get_bool("flag", false));
    CHECK(kv.get_double_list("list", {}) == std::vector<double>{1.0, 2.5, 3.0});
    CHECK(kv.get_double("absent", 7.5) == 7.5);
    CHECK(kv.unread_keys().empty());
}

TEST_CASE("key-value parse errors carry origin and line") {
    CHECK_THROWS_WITH_AS(KeyValueFile::parse_text("a = 1\nrubbish\n", "f.cfg"),
                         doctest::Contains("f.cfg:2"), ConfigError);
    CHECK_THROWS_WITH_AS(KeyValueFile::parse_text("= 1\n", "f.cfg"),
                         doctest::Contains("empty key"), ConfigError);
    CHECK_THROWS_WITH_AS(KeyValueFile::parse_text("a =\n", "f.cfg"),
                         doctest::Contains("empty value"), ConfigError);
    CHECK_THROWS_WITH_AS(KeyValueFile::parse_text("a = 1\na = 2\n", "f.cfg"),
                         doctest::Contains("duplicate key 'a'"), ConfigError);

    const KeyValueFile kv =
        KeyValueFile::parse_text("n = 2.5\nb = maybe\nx = 1z\n", "f.cfg");
    CHECK_THROWS_WITH_AS(kv.get_int("n", 0), doctest::Contains("integer"), ConfigError);
    CHECK_THROWS_WITH_AS(kv.get_bool("b", false), doctest::Contains("boolean"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(kv.get_double("x", 0.0), doctest::Contains("bad number"),
                         ConfigError);
    CHECK(kv.unread_keys().empty());  // failed reads still count as touched
}

TEST_CASE("run configs round-trip through their text form") {
    RunConfig c;
    c.label = "trial";
    c.cycles = {"synth:urban-short", "trace.csv"};
    c.timestep_s = 0.5;
    c.soc_nodes = 101;
    c.alpha_nodes = 21;
    c.alpha_max = 1.5;
    c.soc_initial = 0.6;
    c.initial_gear = 2;
    c.initial_engine_on = true;
    c.terminal = "0.62";
    c.weights = PenaltyWeights{0.25, 1.0, 0.125};
    c.vehicle_config = "veh.cfg";
    c.battery_curve = "batt.csv";
    c.threads = 3;

    const RunConfig back = parse_run_config(serialize(c), "round-trip");
    CHECK(back == c);
    CHECK(serialize(back) == serialize(c));

    const RunConfig defaults = parse_run_config("", "empty");
    CHECK(defaults == RunConfig{});
}

TEST_CASE("unknown run config keys are typo-guarded") {
    CHECK_THROWS_WITH_AS(parse_run_config("shift_penalty = 1\n", "f.cfg"),
                         doctest::Contains("unknown keys: 'shift_penalty'"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_run_config("soc_nodes = 201\nsocnodes = 7\n", "f.cfg"),
                         doctest::Contains("'socnodes'"), ConfigError);
}

TEST_CASE("run config validation") {
    auto reject = [](const std::string& line, const char* needle) {
        CHECK_THROWS_WITH_AS(parse_run_config(line, "f"), doctest::Contains(needle),
                             ConfigError);
    };
    reject("timestep_s = 0\n", "timestep_s");
    reject("soc_nodes = 1\n", "soc_nodes");
    reject("alpha_nodes = 1\n", "alpha_nodes");
    reject("alpha_max = 0.5\n", "alpha_max");
    reject("initial_gear = 0\n", "initial_gear");
    reject("threads = 0\n", "threads");
    reject("shift_penalty_g = -1\n", "non-negative");
    reject("terminal = 1.5\n", "[0, 1]");
    reject("terminal = sustain\n", "bad number");
    reject("cycles = ,\n", "empty list");
    CHECK_NOTHROW(parse_run_config("terminal = free\n", "f"));
    CHECK_NOTHROW(parse_run_config("terminal = 0.55\n", "f"));
}

TEST_CASE("config hash tracks physics, not presentation") {
    RunConfig c;
    c.cycles = {"synth:urban-short"};
    const std::string base = config_hash(c);
    CHECK(base.size() == 16);
    CHECK(base.find_first_not_of("0123456789abcdef") == std::string::npos);
    CHECK(config_hash(c) == base);

    RunConfig labeled = c;
    labeled.label = "anything";
    labeled.threads = 8;
    CHECK(config_hash(labeled) == base);

    RunConfig refined = c;
    refined.soc_nodes = 401;
    CHECK(config_hash(refined) != base);

    SUBCASE("referenced files enter by content, not by path") {
        const std::string curve =
            "soc,voc_V,r0_ohm\n0.3,290,0.11\n0.8,300,0.09\n";
        TempFile a("hash_a.csv", curve);
        TempFile b("hash_b.csv", curve);
        TempFile edited("hash_c.csv",
                        "soc,voc_V,r0_ohm\n0.3,290,0.11\n0.8,301,0.09\n");
        RunConfig ca = c, cb = c, cc = c;
        ca.battery_curve = a.path;
        cb.battery_curve = b.path;
        cc.battery_curve = edited.path;
        CHECK(config_hash(ca) == config_hash(cb));
        CHECK(config_hash(ca) != config_hash(cc));
        CHECK(config_hash(ca) != base);
    }
    SUBCASE("cycle files are positional") {
        const std::string trace = "time_s,speed_mps\n0,0\n1,3\n2,0\n";
        TempFile a("hash_t1.csv", trace);
        TempFile b("hash_t2.csv", trace);
        RunConfig ca = c, cb = c;
        ca.cycles = {"synth:urban-short", a.path};
        cb.cycles = {"synth:urban-short", b.path};
        CHECK(config_hash(ca) == config_hash(cb));
        RunConfig swapped = c;
        swapped.cycles = {a.path, "synth:urban-short"};
        CHECK(config_hash(swapped) != config_hash(ca));
    }
}

TEST_CASE("map grid CSV loader") {
    TempFile good("grid_ok.csv",
                  "# fuel map\n"
                  "torque,100,200\n"
                  "0,1,2\n"
                  "50,3,4\n"
                  "100,5,\n");
    const MapGrid g = load_map_grid(good.path);
    CHECK(g.speed_bp == std::vector<double>{100.0, 200.0});
    CHECK(g.torque_bp == std::vector<double>{0.0, 50.0, 100.0});
    CHECK(g.at(1, 1) == 4.0);
    CHECK(std::isnan(g.at(2, 1)));  // empty cell above the torque curve

    TempFile no_bp("grid_nobp.csv", "torque\n0,1\n");
    CHECK_THROWS_WITH_AS(load_map_grid(no_bp.path), doctest::Contains("breakpoints"),
                         ConfigError);
    TempFile short_row("grid_short.csv", "torque,100,200\n0,1\n");
    CHECK_THROWS_WITH_AS(load_map_grid(short_row.path), doctest::Contains("expected 3"),
                         ConfigError);
    TempFile no_rows("grid_norows.csv", "torque,100,200\n");
    CHECK_THROWS_WITH_AS(load_map_grid(no_rows.path),
                         doctest::Contains("no torque rows"), ConfigError);
    TempFile bad_num("grid_bad.csv", "torque,100,200\n0,1,x\n");
    CHECK_THROWS_WITH_AS(load_map_grid(bad_num.path), doctest::Contains("bad number"),
                         ConfigError);
    // Structural validation runs on load: holes below the curve are fatal.
    TempFile hole("grid_hole.csv", "torque,100,200\n0,1,\n50,3,4\n");
    CHECK_THROWS_AS(load_map_grid(hole.path), ConfigError);
    CHECK_THROWS_AS(load_map_grid("no_such_grid.csv"), ConfigError);
}

TEST_CASE("battery curve CSV loader") {
    TempFile good("curve_ok.csv",
                  "# pack\n"
                  "soc, voc_V, r0_ohm\n"
                  "0.3,290,0.11\n"
                  "0.55,295,0.10\n"
                  "0.8,300,0.09\n");
    const BatteryCurve curve = load_battery_curve(good.path);
    CHECK(curve.soc == std::vector<double>{0.3, 0.55, 0.8});
    CHECK(curve.voc_V == std::vector<double>{290.0, 295.0, 300.0});
    CHECK(curve.r0_ohm == std::vector<double>{0.11, 0.10, 0.09});

    TempFile no_header("curve_nh.csv", "0.3,290,0.11\n0.8,300,0.09\n");
    CHECK_THROWS_WITH_AS(load_battery_curve(no_header.path),
                         doctest::Contains("header"), ConfigError);
    TempFile short_row("curve_sr.csv", "soc,voc_V,r0_ohm\n0.3,290\n");
    CHECK_THROWS_WITH_AS(load_battery_curve(short_row.path),
                         doctest::Contains("three fields"), ConfigError);
    TempFile one_row("curve_or.csv", "soc,voc_V,r0_ohm\n0.3,290,0.11\n");
    CHECK_THROWS_WITH_AS(load_battery_curve(one_row.path),
                         doctest::Contains("two rows"), ConfigError);
    TempFile unsorted("curve_us.csv",
                      "soc,voc_V,r0_ohm\n0.8,300,0.09\n0.3,290,0.11\n");
    CHECK_THROWS_WITH_AS(load_battery_curve(unsorted.path),
                         doctest::Contains("strictly increasing"), ConfigError);
}

TEST_CASE("vehicle model files override the defaults") {
    TempFile cfg("veh_t.cfg",
                 "mass_kg = 1500\n"
                 "engine_speed_min_rpm = 800\n"
                 "em_rated_power_W = 25000\n"
                 "battery_capacity_Ah = 6.5\n");
    const PowertrainModels m = load_vehicle_models(cfg.path);
    CHECK(m.vehicle.mass_kg == 1500.0);
    CHECK(m.engine.speed_min() == doctest::Approx(800.0 * kPi / 30.0).epsilon(1e-12));
    CHECK(m.em.max_torque(600.0) == doctest::Approx(25000.0 / 600.0));
    CHECK(m.battery.capacity_Ah() == 6.5);

    const PowertrainModels defaults = load_vehicle_models("");
    CHECK(defaults.vehicle.mass_kg == default_models().vehicle.mass_kg);
    CHECK(defaults.battery.capacity_Ah() == 5.3);

    TempFile typo("veh_typo.cfg", "mass = 1500\n");
    CHECK_THROWS_WITH_AS(load_vehicle_models(typo.path),
                         doctest::Contains("unknown keys: 'mass'"), ConfigError);
    TempFile broken("veh_bad.cfg", "gear_ratios = 1.0, 2.0\n");
    CHECK_THROWS_AS(load_vehicle_models(broken.path), ConfigError);
}

TEST_CASE("model resolution swaps in file-backed components") {
    RunConfig c;
    c.cycles = {"synth:urban-short"};

    const PowertrainModels plain = resolve_models(c);
    CHECK(plain.battery.constant_curves());

    TempFile engine_map("res_engine.csv",
                        "torque,150,300,600\n"
                        "0,0.1,0.2,0.4\n"
                        "40,0.8,1.6,3.2\n"
                        "80,1.5,3.0,\n");
    TempFile em_map("res_em.csv",
                    "torque,150,300,600\n"
                    "0,0.9,0.9,0.9\n"
                    "60,0.9,0.9,0.9\n"
                    "120,0.9,0.9,\n");
    TempFile curve("res_curve.csv",
                   "soc,voc_V,r0_ohm\n0.3,290,0.11\n0.8,300,0.09\n");
    c.engine_fuel_map = engine_map.path;
    c.em_efficiency_map = em_map.path;
    c.battery_curve = curve.path;

    const PowertrainModels m = resolve_models(c);
    // Grid cell values are g/s; the model reports kg/s.
    const auto rate = m.engine.fuel_rate(300.0, 40.0);
    REQUIRE(rate.has_value());
    CHECK(*rate == doctest::Approx(1.6e-3).epsilon(1e-12));
    CHECK(m.engine.max_torque(600.0) == 40.0);  // hole caps the grid ceiling
    CHECK(m.engine.speed_min() == plain.engine.speed_min());

    const auto eff = m.em.efficiency(300.0, 60.0);
    REQUIRE(eff.has_value());
    CHECK(*eff == doctest::Approx(0.9));
    CHECK(m.em.speed_max() == plain.em.speed_max());

    CHECK_FALSE(m.battery.constant_curves());
    CHECK(m.battery.voc(0.3) == doctest::Approx(290.0));
    CHECK(m.battery.voc(0.55) == doctest::Approx(295.0));
    CHECK(m.battery.capacity_Ah() == plain.battery.capacity_Ah());
}

TEST_CASE("cycle resolution composes presets and files") {
    RunConfig c;
    c.cycles = {"synth:urban-short"};
    const DriveCycle urban = resolve_cycle(c);
    CHECK(urban.size() == 600);

    TempFile trace("res_trace.csv", "time_s,speed_mps\n0,0\n1,2\n2,2\n3,0\n");
    c.cycles = {"synth:urban-short", trace.path};
    const DriveCycle both = resolve_cycle(c);
    CHECK(both.size() == 604);
    CHECK(both.speed_mps[600] == doctest::Approx(0.0));
    CHECK(both.speed_mps[601] == doctest::Approx(2.0));

    c.cycles = {"synth:nowhere"};
    CHECK_THROWS_WITH_AS(resolve_cycle(c), doctest::Contains("nowhere"), ConfigError);
    c.cycles = {};
    CHECK_THROWS_AS(resolve_cycle(c), ConfigError);
}

TEST_CASE("grid and terminal resolution") {
    RunConfig c;
    c.soc_nodes = 51;
    c.alpha_nodes = 5;
    c.alpha_max = 2.0;
    const PowertrainModels m = default_models();
    const Grids g = resolve_grids(c, m);
    CHECK(g.soc_nodes() == 51);
    CHECK(g.soc.front() == m.battery.soc_min());
    CHECK(g.soc.back() == m.battery.soc_max());
    CHECK(g.alpha.size() == 5);
    CHECK(g.alpha[2] == 1.0);
    CHECK(g.gear_count == 5);

    c.terminal = "free";
    CHECK(resolve_terminal(c).kind == TerminalSpec::Kind::Free);
    c.terminal = "initial";
    c.soc_initial = 0.61;
    TerminalSpec t = resolve_terminal(c);
    CHECK(t.kind == TerminalSpec::Kind::SustainAtOrAbove);
    CHECK(t.target_soc == 0.61);
    c.terminal = "0.44";
    CHECK(resolve_terminal(c).target_soc == 0.44);
}

TEST_CASE("initial state stays inside the battery window") {
    RunConfig c;
    c.soc_initial = 0.55;
    c.initial_gear = 2;
    c.initial_engine_on = true;
    const BatteryModel battery = default_models().battery;
    const State x = resolve_initial_state(c, battery);
    CHECK(x.soc == 0.55);
    CHECK(x.gear_prev == 2);
    CHECK(x.engine_prev);

    c.soc_initial = 0.25;
    CHECK_THROWS_WITH_AS(resolve_initial_state(c, battery),
                         doctest::Contains("soc_initial"), ConfigError);
    c.soc_initial = 0.85;
    CHECK_THROWS_AS(resolve_initial_state(c, battery), ConfigError);
}
