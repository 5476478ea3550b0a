#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fnbound/errors.hpp"
#include "fnbound/harness/commands.hpp"
#include "fnbound/harness/config.hpp"

namespace {

using namespace fnb::harness;

// defaults < config file < --set < --seed/--jobs/--out/--svg < FNBOUND_OUT
ExperimentConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides,
                                const std::optional<std::uint64_t>& seed, const std::optional<std::size_t>& jobs,
                                const std::optional<std::string>& out, bool svg) {
    nlohmann::json doc = nlohmann::json::object();
    if (!path.empty()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw fnb::ConfigError(path + ": cannot open config file");
        doc = nlohmann::json::parse(in, nullptr, false);
        if (doc.is_discarded()) throw fnb::ConfigError(path + ": not valid JSON");
    }
    for (const auto& o : overrides) apply_override(doc, o);
    auto config = parse_config(doc);
    if (seed) config.seed = *seed;
    if (jobs) {
        if (*jobs == 0) throw fnb::ConfigError("--jobs: must be at least 1");
        config.jobs = *jobs;
    }
    if (out) config.output_dir = *out;
    if (const char* env = std::getenv("FNBOUND_OUT"); env && *env) config.output_dir = env;
    if (svg) config.svg = true;
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feature-noise generalization experiments: training runs, sweeps, bounds and formulas"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<std::string> out;
    bool svg = false;
    app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--out", out, "output directory (FNBOUND_OUT takes precedence)");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--jobs", jobs, "parallel workers");
    app.add_option("--set", overrides, "override a config field, e.g. --set train.epochs=10")->allow_extra_args(false);
    app.add_flag("--svg", svg, "also write SVG charts");

    using Command = void (*)(const ExperimentConfig&, std::ostream&);
    const std::vector<std::tuple<std::string, std::string, Command>> experiment_commands = {
        {"run", "train once and report per-epoch accuracy", cmd_run},
        {"sweep-sigma-delta", "accuracy grid over feature noise sigma and label noise rate", cmd_sweep_sigma_delta},
        {"sweep-feature-noise", "accuracy by feature noise type and severity", cmd_sweep_feature_noise},
        {"sweep-label-noise", "accuracy by label noise type and rate, with and without feature noise",
         cmd_sweep_label_noise},
        {"bound-viz", "PAC-Bayes bound curves for clean, label-noise and label+feature-noise training",
         cmd_bound_viz},
    };
    Command chosen = nullptr;
    for (const auto& [name, help, fn] : experiment_commands)
        app.add_subcommand(name, help)->callback([&chosen, fn = fn] { chosen = fn; });

    std::vector<std::size_t> samples;
    auto* saliency = app.add_subcommand("saliency", "train, then write saliency maps (PGM + CSV) for test samples");
    saliency->add_option("--samples", samples, "evaluation-split sample indices");

    std::vector<std::string> query;
    auto* formulas = app.add_subcommand("formulas", "evaluate a closed-form quantity\n" + formulas_help());
    formulas->add_option("query", query, "formula name followed by key=value parameters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (formulas->parsed()) {
            cmd_formulas(query, std::cout);
            return 0;
        }
        auto config = resolve_config(config_path, overrides, seed, jobs, out, svg);
        if (saliency->parsed()) {
            if (!samples.empty()) config.saliency_samples = samples;
            cmd_saliency(config, std::cout);
        } else {
            chosen(config, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 0;
}
