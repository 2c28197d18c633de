#include "selectrand/experiments.hpp"
#include "selectrand/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace selectrand;

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selective inference after randomized selection: experiment harness"};
    std::string experiment, config_path, out_dir;
    std::uint64_t seed = 0;
    app.add_option("experiment", experiment, "consistency, ci, roc, median, clt, counterexample or cv")->required();
    app.add_option("--config", config_path, "flat key = value file")->required();
    app.add_option("--seed", seed, "root seed")->required();
    app.add_option("--out", out_dir, "output directory")->required();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    ExperimentConfig config;
    try {
        config = ExperimentConfig::parse(read_file(config_path), parse_experiment(experiment), seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        ExperimentResult result = run_experiment(config);
        fs::path dir(out_dir);
        fs::create_directories(dir);
        std::ostringstream csv;
        write_csv(csv, result.rows);
        write_file(dir / (experiment + ".csv"), csv.str());
        // The figure is drawn from the CSV text, not from in-memory results.
        std::istringstream back(csv.str());
        write_file(dir / (experiment + ".svg"), render_svg(config.experiment, read_csv(back)));
        write_file(dir / "run_meta.json", run_meta_json(config, result));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
