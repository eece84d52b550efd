#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "stabilyze/cli.hpp"
#include "stabilyze/io.hpp"

using namespace stabilyze;
using namespace stabilyze::testing;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("stabilyze_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_model(const fs::path& dir, const DynamicsModel& m) {
    const fs::path p = dir / "model.json";
    atomic_write(p.string(), dump17(m.to_json()));
    return p;
}

nlohmann::json load(const fs::path& p) { return nlohmann::json::parse(read_file(p.string())); }

}  // namespace

TEST_CASE("io: number formatting and hashing") {
    // %.17g round-trips every double
    for (double x : {1.0 / 3.0, 1e-300, 12345.6789, -0.1})
        CHECK(std::stod(fmt17(x)) == x);

    // FNV-1a 64 reference vectors
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");

    // dump17 is deterministic and key-sorted
    nlohmann::json j{{"b", 0.1}, {"a", nlohmann::json::array({1, 2.5})}};
    const std::string s = dump17(j);
    CHECK(s == dump17(j));
    CHECK(s.find("\"a\"") < s.find("\"b\""));
    CHECK(s.find("0.10000000000000001") != std::string::npos);
}

TEST_CASE("io: atomic writes and the binary sample format") {
    const auto dir = fresh_dir("io");
    const std::string p = (dir / "f.txt").string();
    atomic_write(p, "hello");
    atomic_write(p, "world");  // overwrite goes through the same rename
    CHECK(read_file(p) == "world");
    CHECK_FALSE(fs::exists(p + ".tmp"));

    SampleSet set;
    set.z = {{1.5, -2.5}, {0.0, 3.25}, {-7.0, 0.125}};
    set.seed = 99;
    set.chains = 2;
    set.dt_max = 1e-3;
    set.burn_in_time = 5;
    set.sample_interval = 0.25;
    set.horizon = 100;
    set.total_steps = 1234;
    set.ess = 42.5;
    const std::string bin = (dir / "s.bin").string();
    write_samples(bin, set, {{"model", nlohmann::json{{"n", 1}}}});
    CHECK(fs::file_size(bin) == 48);

    nlohmann::json side;
    const auto back = read_samples(bin, &side);
    CHECK(back.z == set.z);
    CHECK(back.seed == 99);
    CHECK(back.chains == 2);
    CHECK(back.sample_interval == 0.25);
    CHECK(back.total_steps == 1234);
    CHECK(back.ess == 42.5);
    CHECK(side["model"]["n"] == 1);
}

TEST_CASE("cli: usage errors exit 2") {
    const auto dir = fresh_dir("usage");
    CHECK(cli_run({}) == 2);
    CHECK(cli_run({"frobnicate"}) == 2);
    CHECK(cli_run({"decompose"}) == 2);  // --model required
    CHECK(cli_run({"decompose", "--model"}) == 2);
    CHECK(cli_run({"decompose", "--model", (dir / "absent.json").string()}) == 2);
    CHECK(cli_run({"density", "--annulus", "5"}) == 2);
    CHECK(cli_run({"simulate", "--seed", "not-a-number"}) == 2);
}

TEST_CASE("cli: decompose of the symmetric model has a trivial chain") {
    const auto dir = fresh_dir("decompose");
    const auto model = write_model(dir, make_model(1, {1, 0}, 1.0));
    CHECK(cli_run({"decompose", "--model", model.string(), "--out", dir.string()}) == 0);
    const auto rep = load(dir / "decompose.json");
    for (const auto& c : rep["chain"]["c"]) CHECK(c["num"] == 0);
    CHECK(rep["chain"]["c_next"]["num"] == 0);
    const auto man = load(dir / "manifest.json");
    CHECK(man["subcommand"] == "decompose");
    CHECK(man["inputs"].contains(model.string()));
}

TEST_CASE("cli: build then verify exits 0 on the n=1 default") {
    const auto dir = fresh_dir("verify");
    const auto model = write_model(dir, make_model(1, {1, 0}, 1.0));
    CHECK(cli_run({"build", "--model", model.string(), "--out", dir.string()}) == 0);
    CHECK(load(dir / "build.json").contains("lyapunov"));
    CHECK(cli_run({"verify", "--model", model.string(), "--out", dir.string()}) == 0);
    const auto rep = load(dir / "verify.json");
    CHECK(rep["ok"] == true);
    CHECK(rep["flux"]["all_nonpositive"] == true);
    CHECK(rep["symmetry_residual"].get<double>() < 1e-10);
}

TEST_CASE("cli: simulate, tail, density pipeline with reused samples") {
    const auto dir = fresh_dir("pipeline");
    const auto model = write_model(dir, make_model(1, {1, 0}, 1.0));
    const std::vector<std::string> sim = {"simulate", "--model", model.string(),
                                          "--out",    dir.string(), "--seed", "101",
                                          "--paths",  "12",       "--steps", "300000",
                                          "--burn-in", "10",      "--thin",  "0.1"};
    CHECK(cli_run(sim) == 0);
    REQUIRE(fs::exists(dir / "samples.bin"));
    const auto meta = load(dir / "simulate.json");
    CHECK(meta["blowup_count"] == 0);
    CHECK(meta["ess"].get<double>() > 1000);

    CHECK(cli_run({"tail", "--out", dir.string()}) == 0);
    const auto tail = load(dir / "tail.json");
    CHECK(tail["tail"]["target"] == 2.0);
    CHECK(tail["tail"]["estimate"].get<double>() > 1.4);
    CHECK(tail["tail"]["estimate"].get<double>() < 2.6);
    CHECK(tail["moments"]["monotone"] == true);
    // the reused artifact is an input of this run
    CHECK(load(dir / "manifest.json")["inputs"].contains((dir / "samples.bin").string()));

    CHECK(cli_run({"density", "--out", dir.string(), "--annulus", "5,10"}) == 0);
    const auto den = load(dir / "density.json");
    CHECK(den["in_annulus"].get<long>() >= 200);
    CHECK(den["mass_error"].get<double>() < 1e-12);
    CHECK(fs::exists(dir / "density.csv"));

    // identical invocation: byte-identical artifacts
    const auto dir2 = fresh_dir("pipeline2");
    const auto model2 = write_model(dir2, make_model(1, {1, 0}, 1.0));
    std::vector<std::string> sim2 = sim;
    sim2[2] = model2.string();
    sim2[4] = dir2.string();
    CHECK(cli_run(sim2) == 0);
    CHECK(cli_run({"tail", "--out", dir2.string()}) == 0);
    CHECK(read_file((dir / "samples.bin").string()) ==
          read_file((dir2 / "samples.bin").string()));
    CHECK(read_file((dir / "tail.json").string()) == read_file((dir2 / "tail.json").string()));
}

TEST_CASE("cli: dynkin demo") {
    const auto dir = fresh_dir("dynkin");
    CHECK(cli_run({"dynkin", "--out", dir.string(), "--seed", "42", "--paths", "4000"}) == 0);
    const auto rep = load(dir / "dynkin.json");
    CHECK(rep["ok"] == true);
    REQUIRE(rep["absolute_value"].size() == 3);
    for (const auto& e : rep["absolute_value"]) CHECK(e["flux"].get<double>() > 0);
}

TEST_CASE("cli: figure1 emits the caption geometry") {
    const auto dir = fresh_dir("figure1");
    CHECK(cli_run({"figure1", "--out", dir.string()}) == 0);

    const auto rep = load(dir / "figure1.json");
    CHECK(rep["params"]["phi_star"] == 10.0);
    CHECK(rep["params"]["eta_star"] == 5.0);
    CHECK(rep["chain"]["c"][0] == nlohmann::json({{"num", 1}, {"den", 2}}));
    CHECK(rep["chain"]["c"][1] == nlohmann::json({{"num", 1}, {"den", 1}}));
    CHECK(rep["chain"]["gamma1"][0] == nlohmann::json({{"num", 5}, {"den", 1}}));

    // the distinguished curve rows satisfy r²θ + r/2 + 1 = 0
    std::istringstream csv(read_file((dir / "figure1.csv").string()));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "curve,side,r,theta");
    int curve_rows = 0, boundary_rows = 0;
    while (std::getline(csv, line)) {
        std::istringstream row(line);
        std::string name, side, rs, ths;
        std::getline(row, name, ',');
        std::getline(row, side, ',');
        std::getline(row, rs, ',');
        std::getline(row, ths, ',');
        if (name == "phi4_zero") {
            const double r = std::stod(rs), th = std::stod(ths);
            CHECK(std::abs(r * r * th + 0.5 * r + 1) < 1e-9);
            ++curve_rows;
        } else {
            ++boundary_rows;
        }
    }
    CHECK(curve_rows == 400);
    CHECK(boundary_rows == 5 * 400);  // five boundaries of the six-region ladder
}
