#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "matconc/experiments.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out_override,
                unsigned threads_override, long long trials_override) {
    std::ifstream is(config_path);
    if (!is) {
        std::cerr << "error: cannot open config file: " << config_path << "\n";
        return 2;
    }
    std::stringstream buffer;
    buffer << is.rdbuf();

    matconc::cli::ExperimentConfig config;
    try {
        config = matconc::cli::ExperimentConfig::parse(buffer.str());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (threads_override > 0) config.threads = threads_override;
    if (trials_override > 0) {
        if (trials_override < 100) {
            std::cerr << "error: --trials-override must be >= 100\n";
            return 2;
        }
        config.trials = trials_override;
    }

    std::string out_dir = !out_override.empty() ? out_override : config.out_dir;
    if (out_dir.empty()) out_dir = "results/" + config.name;

    try {
        const matconc::cli::Report report = matconc::cli::run_experiment(config);
        matconc::cli::write_report(report, out_dir);
        for (const auto& v : report.summary.at("verdicts")) {
            std::cout << (v.at("pass").get<bool>() ? "[PASS] " : "[FAIL] ")
                      << v.at("check").get<std::string>() << "\n";
        }
        std::cout << (report.all_pass ? "RESULT: pass" : "RESULT: fail")
                  << "  (report: " << out_dir << "/summary.json)\n";
        return report.all_pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"matconc: matrix concentration bounds and their Monte Carlo audits"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    unsigned threads = 0;
    long long trials = 0;

    CLI::App* run = app.add_subcommand("run", "run an experiment described by a JSON config");
    run->add_option("config", config_path, "path to the experiment config (JSON)")
        ->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_option("--threads", threads, "worker thread count (0 = hardware)");
    run->add_option("--trials-override", trials, "override the config's trial count");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        return run_command(config_path, out_dir, threads, trials);
    }
    return 2;
}
