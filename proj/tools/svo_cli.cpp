// Command-line front end: train erm/ivo/rvo/bi solutions, evaluate them under
// class-imbalance shift, and render stored metrics as a table.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "svo/bench.hpp"
#include "svo/learn.hpp"

namespace {

using svo::bench::ConfigError;
using svo::bench::DataError;

std::string slurp(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(std::string("cannot read ") + what + ": " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CliOverrides {
    std::optional<std::string> data, schema, out;
    std::optional<double> p_lower, p_upper, alpha0;
    std::optional<int> budget, nrep;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> shift_grid;
};

void add_common_flags(CLI::App* cmd, std::string& config_path, CliOverrides& ov) {
    cmd->add_option("--config", config_path, "experiment config JSON");
    auto opt = [&](const char* name, auto& slot, const char* desc) {
        cmd->add_option(name, slot, desc);
    };
    opt("--data", ov.data, "dataset CSV path");
    opt("--schema", ov.schema, "column schema JSON path");
    opt("--out", ov.out, "output directory");
    opt("--p-lower", ov.p_lower, "lower tail level");
    opt("--p-upper", ov.p_upper, "upper tail level");
    opt("--budget", ov.budget, "iteration budget");
    opt("--alpha0", ov.alpha0, "initial stepsize");
    opt("--nrep", ov.nrep, "shift replications");
    opt("--seed", ov.seed, "base RNG seed");
    opt("--shift-grid", ov.shift_grid, "comma-separated shift fractions");
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t pos = 0;
            grid.push_back(std::stod(cell, &pos));
            if (pos != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw ConfigError("bad shift-grid entry: " + cell);
        }
    }
    if (grid.empty()) throw ConfigError("empty shift grid");
    return grid;
}

svo::bench::ExperimentConfig resolve_config(const std::string& config_path,
                                            const CliOverrides& ov) {
    svo::bench::ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = svo::bench::ExperimentConfig::from_json(slurp(config_path, "config"));
    }
    if (ov.data) cfg.data_path = *ov.data;
    if (ov.schema) cfg.schema_path = *ov.schema;
    if (ov.out) cfg.out_dir = *ov.out;
    if (ov.p_lower) cfg.p_lower = *ov.p_lower;
    if (ov.p_upper) cfg.p_upper = *ov.p_upper;
    if (ov.budget) cfg.budget = *ov.budget;
    if (ov.alpha0) cfg.alpha0 = *ov.alpha0;
    if (ov.nrep) cfg.n_rep = *ov.nrep;
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.shift_grid) cfg.shift_grid = parse_grid(*ov.shift_grid);
    return cfg;
}

std::pair<svo::learn::Dataset, svo::learn::Dataset> load_split(
    const svo::bench::ExperimentConfig& cfg) {
    if (cfg.data_path.empty()) throw ConfigError("no dataset path given");
    if (cfg.schema_path.empty()) throw ConfigError("no schema path given");
    svo::learn::ColumnSchema schema;
    try {
        schema = svo::learn::parse_schema_json(slurp(cfg.schema_path, "schema"));
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("schema error: ") + e.what());
    }
    try {
        return svo::learn::ingest_split(cfg.data_path, schema, cfg.test_fraction, cfg.seed);
    } catch (const std::exception& e) {
        throw DataError(std::string("ingestion error: ") + e.what());
    }
}

int run_train(const std::string& method, const std::string& config_path,
              const CliOverrides& ov) {
    svo::bench::ExperimentConfig cfg = resolve_config(config_path, ov);
    cfg.method = method;
    cfg.validate();
    if (cfg.out_dir.empty()) throw ConfigError("no output directory given");

    auto [train, test] = load_split(cfg);
    (void)test;
    svo::bench::TrainedSolution solution;
    if (method == "erm") {
        solution = svo::bench::run_erm(cfg, train);
    } else if (method == "ivo") {
        solution = svo::bench::run_ivo(cfg, train);
    } else if (method == "rvo") {
        solution = svo::bench::run_rvo(cfg, train);
    } else {
        solution = svo::bench::run_bi(cfg, train);
    }
    svo::bench::write_solution(solution, cfg.out_dir);
    {
        std::ofstream out(cfg.out_dir + "/config.json", std::ios::binary);
        if (!out) throw DataError("cannot write config echo: " + cfg.out_dir);
        out << cfg.to_json();
    }
    std::printf("%s: wrote %s/solution.json\n", method.c_str(), cfg.out_dir.c_str());
    return 0;
}

int run_eval_shift(const std::string& config_path, const CliOverrides& ov,
                   const std::vector<std::string>& solution_paths) {
    svo::bench::ExperimentConfig cfg = resolve_config(config_path, ov);
    cfg.validate();
    if (cfg.out_dir.empty()) throw ConfigError("no output directory given");
    if (solution_paths.empty()) throw ConfigError("eval-shift needs at least one solution file");

    std::vector<svo::bench::TrainedSolution> solutions;
    for (const auto& path : solution_paths) {
        solutions.push_back(svo::bench::TrainedSolution::from_json(slurp(path, "solution")));
    }

    auto [train, test] = load_split(cfg);
    (void)train;
    const auto report = svo::bench::evaluate_shift(solutions, cfg, test);
    svo::bench::write_report(report, cfg, cfg.out_dir);
    std::printf("eval-shift: wrote %s/metrics.json\n", cfg.out_dir.c_str());
    return 0;
}

int run_report(const std::string& metrics_path) {
    const auto report = svo::bench::MetricsReport::from_json(slurp(metrics_path, "metrics"));
    std::printf("%-8s %8s %14s %14s %10s %14s\n", "method", "rho", "M", "V", "M_ACC", "FRPA");
    for (const auto& [method, cells] : report.methods) {
        for (const auto& cell : cells) {
            std::printf("%-8s %8.3f %14.6g ", method.c_str(), cell.rho, cell.mean);
            if (cell.variance) {
                std::printf("%14.6g ", *cell.variance);
            } else {
                std::printf("%14s ", "-");
            }
            std::printf("%10.4f ", cell.accuracy_mean);
            if (cell.frpa) {
                std::printf("%14.6g\n", *cell.frpa);
            } else {
                std::printf("%14s\n", "-");
            }
        }
    }
    for (const auto& note : report.skipped) std::printf("skipped: %s\n", note.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"set-valued robust learning toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    CliOverrides ov;
    std::vector<std::string> solution_paths;
    std::string metrics_path;

    CLI::App* cmds[4] = {
        app.add_subcommand("erm", "train the mean-loss baseline"),
        app.add_subcommand("ivo", "train the interval-valued tail model"),
        app.add_subcommand("rvo", "train the rectangle-valued fair model"),
        app.add_subcommand("bi", "train the bi-objective fairness baseline"),
    };
    for (auto* cmd : cmds) add_common_flags(cmd, config_path, ov);

    CLI::App* eval_cmd = app.add_subcommand("eval-shift", "evaluate solutions under shift");
    add_common_flags(eval_cmd, config_path, ov);
    eval_cmd->add_option("solutions", solution_paths, "solution JSON files");

    CLI::App* report_cmd = app.add_subcommand("report", "print a metrics table");
    report_cmd->add_option("metrics", metrics_path, "metrics.json path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (int i = 0; i < 4; ++i) {
            if (cmds[i]->parsed()) {
                static const char* names[4] = {"erm", "ivo", "rvo", "bi"};
                return run_train(names[i], config_path, ov);
            }
        }
        if (eval_cmd->parsed()) return run_eval_shift(config_path, ov, solution_paths);
        if (report_cmd->parsed()) return run_report(metrics_path);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
