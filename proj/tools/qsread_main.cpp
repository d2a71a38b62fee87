#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qsread/scenario.hpp"

namespace {

std::map<std::string, double> parse_tolerance_overrides(const std::vector<std::string>& items) {
    std::map<std::string, double> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--tolerance expects name=value, got '" + item + "'");
        out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Matsubara readout of detector-coupled quantum simulators"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    int threads = 0;
    std::vector<std::string> tol_items;

    auto* run = app.add_subcommand("run", "execute a scenario config");
    run->add_option("config", config_path, "scenario JSON file")->required();
    run->add_option("--output-dir", output_dir, "output directory (default: config value or $QSREAD_OUTPUT_DIR)");
    run->add_option("--threads", threads, "worker threads for per-frequency loops");
    run->add_option("--tolerance", tol_items, "override a named tolerance, name=value")
        ->take_all();

    auto* validate = app.add_subcommand("validate", "schema-check a scenario config");
    validate->add_option("config", config_path, "scenario JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) {
        const qsread::ValidationReport rep = qsread::validate_config(config_path);
        for (const auto& e : rep.errors) std::cout << "error: " << e << "\n";
        for (const auto& t : rep.auto_inserted_tasks)
            std::cout << "note: auto-inserted prerequisite task '" << t << "'\n";
        if (rep.errors.empty()) {
            std::cout << "config OK\n";
            return 0;
        }
        return 1;
    }

    qsread::RunOverrides ov;
    if (!output_dir.empty()) ov.output_dir = output_dir;
    ov.threads = threads;
    try {
        ov.tolerances = parse_tolerance_overrides(tol_items);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return qsread::run_scenario(config_path, ov);
}
