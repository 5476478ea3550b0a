#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "fnbound/core_nn.hpp"
#include "fnbound/datasets.hpp"
#include "fnbound/infotheory.hpp"
#include "fnbound/noise.hpp"

namespace fnb::bound {

enum class Scenario { clean, label_noise, label_and_feature_noise };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view name);

// Noise applied to the training set of every run. Each run re-seeds the
// specs from its own run seed, so only kind and strength are read here.
struct ScenarioNoise {
    std::optional<noise::LabelNoiseSpec> label;
    std::optional<noise::FeatureNoiseSpec> feature;
};

struct EnsembleRun {
    Scenario scenario = Scenario::clean;
    nn::NetworkConfig network;
    nn::TrainSchedule schedule;
    ScenarioNoise noise;
    std::vector<std::uint64_t> run_seeds;
    // weights_per_epoch[t] is R x k: row i is run i's flattened weights after epoch t+1.
    std::vector<Matrix> weights_per_epoch;
    std::vector<std::vector<double>> accuracy;  // [run][epoch], on the training set as seen by the run

    std::size_t runs() const { return run_seeds.size(); }
    std::size_t epochs() const { return weights_per_epoch.size(); }
    std::size_t dimension() const {
        return weights_per_epoch.empty() ? 0 : static_cast<std::size_t>(weights_per_epoch.front().cols());
    }
};

// R trainings that differ only in seed: run i uses derive_seed(seed, i) for
// its initialization, shuffle and noise realizations. The noise must match
// the scenario (ConfigError otherwise): clean takes none, label_noise a label
// spec only, label_and_feature_noise both. Runs execute on up to `jobs`
// threads; the result does not depend on `jobs`. A diverged run aborts with
// a TrainingError naming the run index.
EnsembleRun collect_ensemble(Scenario scenario, const nn::NetworkConfig& base_config,
                             const nn::TrainSchedule& schedule, const data::LabeledDataset& dataset,
                             const ScenarioNoise& noise, std::size_t runs, std::uint64_t seed,
                             std::size_t jobs = 1);

inline constexpr double default_variance_floor = 1e-8;

// Column means and unbiased (R-1) variances, floored at variance_floor.
info::GaussianSummary fit_gaussian_posterior(const Matrix& weights, double variance_floor = default_variance_floor);

enum class PriorMode { standard_normal, at_initialization };

std::string_view to_string(PriorMode m);
PriorMode parse_prior_mode(std::string_view name);

// standard_normal: zero mean; at_initialization: mean = init weights of
// base_config with seed 0. Both use variance lambda on every coordinate.
info::GaussianSummary make_prior(PriorMode mode, const nn::NetworkConfig& base_config, double lambda);

struct EpochBound {
    std::size_t epoch = 0;  // 1-based
    double kl = 0.0;
    double bound = 0.0;
};

struct BoundReport {
    Scenario scenario = Scenario::clean;
    std::vector<EpochBound> epochs;
    double m = 0.0;
    double delta = 0.05;  // confidence parameter of the bound
    double label_rate = 0.0;
    double feature_param = 0.0;
    std::size_t runs = 0;
};

// Per scenario and epoch: fit the posterior, KL against the prior, bound.
std::vector<BoundReport> bound_curves(const std::vector<EnsembleRun>& ensembles, const info::GaussianSummary& prior,
                                      double m, double delta, double variance_floor = default_variance_floor);

} // namespace fnb::bound
