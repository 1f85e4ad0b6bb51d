#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "doctest.h"
#include "json.hpp"
#include "turnpike/cli.hpp"
#include "turnpike/error.hpp"

using namespace turnpike;
using namespace turnpike::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "turnpike_cli_test";
    fs::create_directories(dir);
    return dir;
}

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "turnpike");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    // keep diagnostics out of the test log
    std::fflush(stderr);
    const int saved = ::dup(2);
    const int devnull = ::open("/dev/null", O_WRONLY);
    ::dup2(devnull, 2);
    const int rc = main_entry(static_cast<int>(argv.size()), argv.data());
    std::fflush(stderr);
    ::dup2(saved, 2);
    ::close(saved);
    ::close(devnull);
    return rc;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// data rows of a CSV output, header lines skipped
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("parse_utility descriptors") {
    CHECK(parse_utility("isoelastic:p=-1").get_if<Isoelastic>()->p == -1.0);
    CHECK(parse_utility("log").get_if<Logarithmic>() != nullptr);
    const auto sp = parse_utility("shifted:p=-1,a=1");
    CHECK(sp.get_if<ShiftedPower>()->a == 1.0);
    const auto tp = parse_utility("twopiece:p=-1,pstar=-3,xhi=4");
    CHECK(tp.get_if<TwoPiecePower>()->p_star == -3.0);
    CHECK(tp.get_if<TwoPiecePower>()->interpolation.x_hi == 4.0);
    const auto inc = parse_utility("incentive:p=0.5,c1=1,c2=2,legs=3@4");
    const auto* c = inc.get_if<Incentivized>();
    REQUIRE(c != nullptr);
    CHECK(c->contract.cash == 1.0);
    CHECK(c->contract.stock == 2.0);
    REQUIRE(c->contract.legs.size() == 1);
    CHECK(c->contract.legs[0].quantity == 3.0);
    CHECK(c->contract.legs[0].strike == 4.0);
    const auto two = parse_utility("incentive:p=-1,c1=0.5,c2=1,legs=1@2;1@50");
    CHECK(two.get_if<Incentivized>()->contract.legs.size() == 2);
    CHECK(parse_utility("power:p=-1,alpha=0.5").get_if<PowerIncentive>()->alpha == 0.5);

    for (const char* bad : {"", "cubic:p=1", "isoelastic", "isoelastic:p=abc", "shifted:p=-1", "isoelastic:p=-1,q=2",
                            "incentive:p=0.5,c1=1,c2=2,legs=3x4"}) {
        INFO(bad);
        CHECK_THROWS_AS(parse_utility(bad), Error);
    }
}

TEST_CASE("config defaults, validation and canonical form") {
    const auto cfg = config_from_map({{"command", "robustness"}});
    CHECK(cfg.command == Command::robustness);
    CHECK(cfg.utility == "shifted:p=-1,a=1");
    CHECK(cfg.horizons == std::vector<double>{5.0, 20.0, 50.0});
    CHECK(cfg.nodes == 201);

    const auto cx = config_from_map({{"command", "counterexample"}});
    CHECK(cx.horizons == std::vector<double>{10.0, 25.0, 50.0, 100.0});
    CHECK(cx.p_star == -3.0);

    // canonical map is a fixed point
    for (const char* cmd : {"robustness", "counterexample", "incentives", "replicate", "validate", "price-square"}) {
        INFO(cmd);
        const auto a = config_to_map(config_from_map({{"command", cmd}}));
        CHECK(config_to_map(config_from_map(a)) == a);
        CHECK(a.count("out") == 0);
    }

    CHECK_THROWS_AS(config_from_map({{"command", "robustness"}, {"nodes", "5"}}), Error);
    CHECK_THROWS_AS(config_from_map({{"command", "robustness"}, {"horizons", "5,3"}}), Error);
    CHECK_THROWS_AS(config_from_map({{"command", "robustness"}, {"sigma", "-0.2"}}), Error);
    CHECK_THROWS_AS(config_from_map({{"command", "robustness"}, {"colour", "blue"}}), Error);
    CHECK_THROWS_AS(config_from_map({{"command", "robustness"}, {"mu", "0.08x"}}), Error);
    CHECK_THROWS_AS(config_from_map({{"command", "dance"}}), UsageError);
}

TEST_CASE("robustness output") {
    const auto out = scratch_dir() / "robust.csv";
    REQUIRE(run({"robustness", "--out", out.string()}) == kOk);
    const std::string text = slurp(out);
    CHECK(text.find("# tool=turnpike 0.1.0") != std::string::npos);
    CHECK(text.find("# utility=shifted:p=-1,a=1") != std::string::npos);
    const auto rows = csv_rows(text);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"T", "ce_opt", "ce_iso", "ratio", "quad_err"});
    CHECK(std::stod(rows[1][3]) == doctest::Approx(0.930870261591).epsilon(1e-10));
    // 17 significant digits
    CHECK(rows[1][3] == "0.93087026159094566");
    // longer horizons close the gap once past the early dip
    const auto far = scratch_dir() / "robust_far.csv";
    REQUIRE(run({"robustness", "--horizons", "50,100,200,400", "--out", far.string()}) == kOk);
    const auto fr = csv_rows(slurp(far));
    for (std::size_t i = 2; i < fr.size(); ++i) CHECK(std::stod(fr[i][3]) > std::stod(fr[i - 1][3]));
}

TEST_CASE("counterexample output") {
    const auto out = scratch_dir() / "cx.csv";
    REQUIRE(run({"counterexample", "--out", out.string()}) == kOk);
    const auto rows = csv_rows(slurp(out));
    REQUIRE(rows.size() == 5);
    CHECK(rows[0][0] == "T");
    CHECK(rows[0][1] == "ratio");
    CHECK(rows[0][2] == "lowwealth_ratio_closed_form");
    CHECK(rows[0][3] == "exponent");
    for (std::size_t i = 2; i < rows.size(); ++i) CHECK(std::stod(rows[i][1]) < std::stod(rows[i - 1][1]));
    CHECK(std::stod(rows[1][3]) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("validate emits a JSON report") {
    const auto out = scratch_dir() / "validate.json";
    REQUIRE(run({"validate", "--utility", "twopiece:p=-1,pstar=-3,xhi=4", "--format", "json", "--out", out.string()}) ==
          kOk);
    const auto doc = nlohmann::json::parse(slurp(out));
    CHECK(doc["tool"] == "turnpike 0.1.0");
    CHECK(doc["meta"]["low_wealth_bounded"] == false);
    CHECK(doc["meta"]["high_wealth_converges"] == true);
    CHECK(doc["meta"]["analytic_low_wealth"] == false);
    CHECK(doc["columns"].size() == 3);

    const auto fig = scratch_dir() / "figure.json";
    REQUIRE(run({"validate", "--utility", "incentive:p=0.5,c1=1,c2=2,legs=3@4", "--format", "json", "--out",
                 fig.string()}) == kOk);
    const auto f = nlohmann::json::parse(slurp(fig));
    CHECK(f["meta"]["bridges"] == 1);
    for (const auto& row : f["rows"]) CHECK(row[2].get<double>() >= row[1].get<double>());
}

TEST_CASE("other commands") {
    const auto inc = scratch_dir() / "inc.csv";
    REQUIRE(run({"incentives", "--out", inc.string()}) == kOk);
    const auto ir = csv_rows(slurp(inc));
    CHECK(ir[0] == std::vector<std::string>{"T", "ce_plain", "ce_incentivized", "premium", "quad_err"});
    CHECK(std::stod(ir[1][3]) == doctest::Approx(0.395946).epsilon(1e-5));

    const auto rep = scratch_dir() / "rep.csv";
    REQUIRE(run({"replicate", "--strikes", "2000", "--out", rep.string()}) == kOk);
    const auto rr = csv_rows(slurp(rep));
    REQUIRE(rr.size() > 1);
    for (std::size_t i = 1; i < rr.size(); ++i) CHECK(std::stod(rr[i][3]) < 1e-4);

    const auto px = scratch_dir() / "px.csv";
    REQUIRE(run({"price-square", "--horizons", "1,5", "--out", px.string()}) == kOk);
    const auto pr = csv_rows(slurp(px));
    REQUIRE(pr.size() == 3);
    for (std::size_t i = 1; i < pr.size(); ++i) CHECK(std::stod(pr[i][1]) == doctest::Approx(100.0).epsilon(1e-10));
}

TEST_CASE("determinism and config round trip") {
    const auto dir = scratch_dir();
    for (const std::vector<std::string>& args :
         {std::vector<std::string>{"robustness"}, std::vector<std::string>{"counterexample", "--format", "json"},
          std::vector<std::string>{"robustness", "--method", "montecarlo", "--paths", "20000", "--seed", "9"},
          std::vector<std::string>{"incentives", "--horizons", "5,40"}}) {
        auto a = args, b = args;
        a.insert(a.end(), {"--out", (dir / "a.out").string()});
        b.insert(b.end(), {"--out", (dir / "b.out").string()});
        REQUIRE(run(a) == kOk);
        REQUIRE(run(b) == kOk);
        const std::string first = slurp(dir / "a.out");
        CHECK(first == slurp(dir / "b.out"));

        // the output file is itself a config that reproduces the run
        REQUIRE(run({"--config", (dir / "a.out").string(), "--out", (dir / "c.out").string()}) == kOk);
        CHECK(first == slurp(dir / "c.out"));
    }
}

TEST_CASE("flags override config files") {
    const auto dir = scratch_dir();
    {
        std::ofstream cfg(dir / "sweep.cfg");
        cfg << "# sweep\ncommand=robustness\nhorizons=5,10\nutility=isoelastic:p=-1\n";
    }
    REQUIRE(run({"--config", (dir / "sweep.cfg").string(), "--horizons", "7", "--out", (dir / "o.csv").string()}) ==
          kOk);
    const std::string text = slurp(dir / "o.csv");
    CHECK(text.find("# horizons=7\n") != std::string::npos);
    const auto rows = csv_rows(text);
    REQUIRE(rows.size() == 2);
    CHECK(std::stod(rows[1][3]) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("exit codes") {
    const auto out = (scratch_dir() / "x.out").string();
    CHECK(run({"dance", "--out", out}) == kUsage);
    CHECK(run({"robustness", "--bogus", "1"}) == kUsage);
    CHECK(run({"robustness", "--mu", "abc", "--out", out}) == kValidation);
    CHECK(run({"robustness", "--nodes", "5", "--out", out}) == kValidation);
    CHECK(run({"robustness", "--utility", "power:p=0.5,alpha=2.5", "--out", out}) == kNumerical);
    CHECK(run({"robustness", "--out", "/nonexistent-dir/x.csv"}) == kIo);
    CHECK(run({"--config", "/nonexistent-dir/x.cfg"}) == kIo);
}
