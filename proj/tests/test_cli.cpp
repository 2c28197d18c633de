#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "selectrand/experiments.hpp"
#include "selectrand/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <sys/wait.h>

using namespace selectrand;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("selectrand_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(SELECTRAND_CLI) + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("config parsing") {
    auto c = ExperimentConfig::parse("# comment\nreps = 12\n\nkappa = 0.25  # trailing\ngrid = 50, 80\nseed = 9\n",
                                     Experiment::clt, 4);
    CHECK(c.seed == 4);
    CHECK(c.reps == 12);
    CHECK(c.number("kappa", 1.0) == 0.25);
    CHECK(c.number("mu", 1.5) == 1.5);
    CHECK(c.list("grid", {}) == std::vector<double>{50, 80});
    CHECK(c.reps_or(7) == 12);
    CHECK(ExperimentConfig::parse("", Experiment::cv, 0).reps_or(7) == 7);
    CHECK(ExperimentConfig::parse("experiment = roc\n", Experiment::roc, 0).overrides.empty());
}

TEST_CASE("config errors") {
    auto bad = [](const std::string& text, Experiment e) {
        CHECK_THROWS_AS(ExperimentConfig::parse(text, e, 0), ConfigError);
    };
    bad("reps 10\n", Experiment::clt);
    bad("reps = 0\n", Experiment::clt);
    bad("reps = 2.5\n", Experiment::clt);
    bad("kappa = 1\nkappa = 2\n", Experiment::clt);
    bad("lam = 3\n", Experiment::clt);
    bad("kappa = -1\n", Experiment::clt);
    bad("kappa = abc\n", Experiment::clt);
    bad("grid = 1, 50\n", Experiment::clt);
    bad("level = 1.2\n", Experiment::ci);
    bad("experiment = cv\n", Experiment::roc);
    bad("seed = -3\n", Experiment::roc);
    CHECK_THROWS_AS(parse_experiment("fig7"), ConfigError);
    for (auto e : {Experiment::consistency, Experiment::ci, Experiment::roc, Experiment::median, Experiment::clt,
                   Experiment::counterexample, Experiment::cv})
        CHECK(parse_experiment(experiment_name(e)) == e);
}

TEST_CASE("csv round trip keeps every bit") {
    std::vector<ResultRow> rows{{-1, "a:n=1", "x", 0.1},
                                {3, "b", "y", -1.0 / 3.0},
                                {4, "b", "z", 1e-300},
                                {5, "b", "w", std::numeric_limits<double>::quiet_NaN()},
                                {6, "b", "v", -std::numeric_limits<double>::infinity()}};
    std::ostringstream out;
    write_csv(out, rows);
    CHECK(out.str().rfind("replication,arm,metric,value\n", 0) == 0);
    std::istringstream in(out.str());
    auto back = read_csv(in);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].replication == rows[i].replication);
        CHECK(back[i].arm == rows[i].arm);
        CHECK(back[i].metric == rows[i].metric);
        if (std::isnan(rows[i].value))
            CHECK(std::isnan(back[i].value));
        else
            CHECK(back[i].value == rows[i].value);
    }
    CHECK(format_value(0.1) == "0.10000000000000001");

    std::ostringstream bad;
    CHECK_THROWS_AS(write_csv(bad, {{0, "a,b", "m", 1.0}}), InvalidInput);
    std::istringstream missing("1,a,m,2\n");
    CHECK_THROWS_AS(read_csv(missing), InvalidInput);
    std::istringstream short_line("replication,arm,metric,value\n1,a,2\n");
    CHECK_THROWS_AS(read_csv(short_line), InvalidInput);
}

TEST_CASE("experiments are deterministic and render from their csv") {
    ExperimentConfig c = ExperimentConfig::parse("reps = 200\n", Experiment::counterexample, 5);
    auto a = run_experiment(c), b = run_experiment(c);
    std::ostringstream ca, cb;
    write_csv(ca, a.rows);
    write_csv(cb, b.rows);
    CHECK(ca.str() == cb.str());
    c.seed = 6;
    std::ostringstream cc;
    write_csv(cc, run_experiment(c).rows);
    CHECK(cc.str() != ca.str());

    std::istringstream in(ca.str());
    std::string svg = render_svg(Experiment::counterexample, read_csv(in));
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(a.value("n=100", "accepted") == 200);
    CHECK_THROWS_AS(a.value("n=100", "missing"), InvalidInput);
}

TEST_CASE("run metadata") {
    ExperimentConfig c = ExperimentConfig::parse("reps = 50\nkappa = 0.7\n", Experiment::median, 11);
    auto r = run_experiment(c);
    auto meta = nlohmann::json::parse(run_meta_json(c, r));
    CHECK(meta["experiment"] == "median");
    CHECK(meta["seed"] == 11);
    CHECK(meta["reps"] == 50);
    CHECK(meta["overrides"]["kappa"] == "0.7");
    CHECK(meta["versions"]["selectrand"] == library_version());
    CHECK(meta["acceptance_rates"].size() == r.acceptance_rates.size());
    CHECK(meta["rows"] == r.rows.size());
}

TEST_CASE("command line outputs and exit codes") {
    fs::path dir = scratch("ok");
    std::ofstream(dir / "c.cfg") << "reps = 100\ngrid = 100, 1000\n";
    std::string args = "counterexample --config " + (dir / "c.cfg").string() + " --seed 3 --out ";
    REQUIRE(run_cli(args + (dir / "one").string()) == 0);
    REQUIRE(run_cli(args + (dir / "two").string()) == 0);
    std::string csv = slurp(dir / "one" / "counterexample.csv");
    CHECK(!csv.empty());
    CHECK(csv == slurp(dir / "two" / "counterexample.csv"));
    CHECK(slurp(dir / "one" / "counterexample.svg") == slurp(dir / "two" / "counterexample.svg"));
    CHECK(nlohmann::json::parse(slurp(dir / "one" / "run_meta.json"))["seed"] == 3);

    std::ofstream(dir / "bad.cfg") << "lam = 2\n";
    CHECK(run_cli("counterexample --config " + (dir / "bad.cfg").string() + " --seed 1 --out " +
                  (dir / "x").string()) == 2);
    CHECK(run_cli("counterexample --config " + (dir / "missing.cfg").string() + " --seed 1 --out " +
                  (dir / "x").string()) == 2);
    CHECK(run_cli("nosuch --config " + (dir / "c.cfg").string() + " --seed 1 --out " + (dir / "x").string()) == 2);
    CHECK(run_cli("counterexample --config " + (dir / "c.cfg").string() + " --out " + (dir / "x").string()) == 2);

    // Selection probability below the representable range.
    std::ofstream(dir / "deep.cfg") << "reps = 10\nmu = -1e6\n";
    CHECK(run_cli("consistency --config " + (dir / "deep.cfg").string() + " --seed 1 --out " + (dir / "x").string()) ==
          3);
    fs::remove_all(dir);
}
