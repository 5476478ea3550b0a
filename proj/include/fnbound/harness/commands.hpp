#pragma once

#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "fnbound/harness/config.hpp"

namespace fnb::harness {

// Each command writes its files under config.output_dir and a short summary
// to `log`. Errors propagate as fnb::Error subclasses; see exit_code_for.
void cmd_run(const ExperimentConfig& config, std::ostream& log);
void cmd_sweep_sigma_delta(const ExperimentConfig& config, std::ostream& log);
void cmd_sweep_feature_noise(const ExperimentConfig& config, std::ostream& log);
void cmd_sweep_label_noise(const ExperimentConfig& config, std::ostream& log);
void cmd_bound_viz(const ExperimentConfig& config, std::ostream& log);
void cmd_saliency(const ExperimentConfig& config, std::ostream& log);

// `query` is a formula name followed by key=value parameters, e.g.
// {"capacity", "meanX=0.5", "sigma2=0.5"}. Prints the inputs and the value.
void cmd_formulas(const std::vector<std::string>& query, std::ostream& out);

// Names and parameters of the formulas accepted by cmd_formulas.
std::string formulas_help();

// 0 success, 2 configuration or input error, 3 numeric or training failure.
int exit_code_for(const std::exception& e);

} // namespace fnb::harness
