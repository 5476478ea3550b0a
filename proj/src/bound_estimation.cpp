#include "fnbound/bound_estimation.hpp"

#include <algorithm>
#include <string>

#include "fnbound/errors.hpp"
#include "fnbound/parallel.hpp"
#include "fnbound/rng.hpp"

namespace fnb::bound {

std::string_view to_string(Scenario s) {
    switch (s) {
    case Scenario::clean: return "clean";
    case Scenario::label_noise: return "label_noise";
    case Scenario::label_and_feature_noise: return "label_and_feature_noise";
    }
    return "clean";
}

Scenario parse_scenario(std::string_view name) {
    if (name == "clean") return Scenario::clean;
    if (name == "label_noise") return Scenario::label_noise;
    if (name == "label_and_feature_noise") return Scenario::label_and_feature_noise;
    throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

std::string_view to_string(PriorMode m) {
    return m == PriorMode::standard_normal ? "standard_normal" : "at_initialization";
}

PriorMode parse_prior_mode(std::string_view name) {
    if (name == "standard_normal") return PriorMode::standard_normal;
    if (name == "at_initialization") return PriorMode::at_initialization;
    throw ConfigError("unknown prior mode '" + std::string(name) + "'");
}

namespace {

void check_noise_matches(Scenario scenario, const ScenarioNoise& noise) {
    const bool has_label = noise.label && noise.label->rate > 0.0;
    const bool has_feature = noise.feature && !noise.feature->is_identity();
    switch (scenario) {
    case Scenario::clean:
        if (has_label || has_feature) throw ConfigError("scenario 'clean' must not carry label or feature noise");
        break;
    case Scenario::label_noise:
        if (!has_label) throw ConfigError("scenario 'label_noise' needs a label noise rate > 0");
        if (has_feature) throw ConfigError("scenario 'label_noise' must not carry feature noise");
        break;
    case Scenario::label_and_feature_noise:
        if (!has_label || !has_feature)
            throw ConfigError("scenario 'label_and_feature_noise' needs both label and feature noise");
        break;
    }
}

} // namespace

EnsembleRun collect_ensemble(Scenario scenario, const nn::NetworkConfig& base_config,
                             const nn::TrainSchedule& schedule, const data::LabeledDataset& dataset,
                             const ScenarioNoise& noise, std::size_t runs, std::uint64_t seed, std::size_t jobs) {
    if (runs < 2) throw ConfigError("an ensemble needs at least two runs");
    base_config.validate();
    schedule.validate();
    dataset.validate();
    check_noise_matches(scenario, noise);

    EnsembleRun ensemble;
    ensemble.scenario = scenario;
    ensemble.network = base_config;
    ensemble.schedule = schedule;
    ensemble.noise = noise;
    for (std::size_t i = 0; i < runs; ++i) ensemble.run_seeds.push_back(derive_seed(seed, i));
    const auto k = static_cast<Eigen::Index>(base_config.parameter_count());
    ensemble.weights_per_epoch.assign(schedule.epochs, Matrix(static_cast<Eigen::Index>(runs), k));
    ensemble.accuracy.resize(runs);

    auto run_one = [&](std::size_t i) {
        const std::uint64_t run_seed = ensemble.run_seeds[i];
        data::LabeledDataset train_set = dataset;
        if (noise.label && noise.label->rate > 0.0) {
            auto spec = *noise.label;
            spec.seed = derive_seed(run_seed, stream::label_noise);
            train_set = noise::apply_label_noise(train_set, spec);
        }
        if (noise.feature && !noise.feature->is_identity()) {
            auto spec = *noise.feature;
            spec.seed = derive_seed(run_seed, stream::feature_noise);
            train_set = noise::apply_feature_noise(train_set, spec);
        }
        auto config = base_config;
        config.seed = derive_seed(run_seed, stream::init);
        nn::TrainResult result;
        try {
            result = nn::train(nn::init_network(config), train_set, schedule, run_seed, {.keep_snapshots = true});
        } catch (const TrainingError& e) {
            std::string what = e.what();
            const std::string prefix = "epoch " + std::to_string(e.epoch()) + ": ";
            if (what.starts_with(prefix)) what.erase(0, prefix.size());
            throw TrainingError(e.epoch(), "ensemble run " + std::to_string(i) + ": " + what);
        }
        // Each run writes a distinct row, so no locking is needed.
        for (std::size_t t = 0; t < schedule.epochs; ++t)
            ensemble.weights_per_epoch[t].row(static_cast<Eigen::Index>(i)) = result.record.snapshots[t].transpose();
        ensemble.accuracy[i] = std::move(result.record.accuracy);
    };

    parallel_for(runs, jobs, run_one);
    return ensemble;
}

info::GaussianSummary fit_gaussian_posterior(const Matrix& weights, double variance_floor) {
    if (weights.rows() < 2) throw EstimationError("posterior fit needs at least two runs");
    if (!(variance_floor > 0.0)) throw EstimationError("variance floor must be positive");
    info::GaussianSummary q;
    q.mean = weights.colwise().mean().transpose();
    const Matrix centered = weights.rowwise() - q.mean.transpose();
    q.variance = (centered.array().square().colwise().sum() / static_cast<double>(weights.rows() - 1)).transpose();
    q.variance = q.variance.cwiseMax(variance_floor);
    return q;
}

info::GaussianSummary make_prior(PriorMode mode, const nn::NetworkConfig& base_config, double lambda) {
    if (!(lambda > 0.0)) throw ConfigError("prior variance lambda must be positive");
    base_config.validate();
    const auto k = static_cast<Eigen::Index>(base_config.parameter_count());
    info::GaussianSummary prior;
    prior.variance = Vector::Constant(k, lambda);
    if (mode == PriorMode::standard_normal) {
        prior.mean = Vector::Zero(k);
    } else {
        auto config = base_config;
        config.seed = 0;
        prior.mean = nn::flatten_weights(nn::init_network(config));
    }
    return prior;
}

std::vector<BoundReport> bound_curves(const std::vector<EnsembleRun>& ensembles, const info::GaussianSummary& prior,
                                      double m, double delta, double variance_floor) {
    std::vector<BoundReport> reports;
    if (ensembles.empty()) return reports;
    const std::size_t epochs = ensembles.front().epochs();
    for (const auto& e : ensembles) {
        if (e.dimension() != prior.dimension())
            throw ShapeError("ensemble dimension " + std::to_string(e.dimension()) + " != prior dimension " +
                             std::to_string(prior.dimension()));
        if (e.epochs() != epochs) throw ShapeError("ensembles disagree on the epoch count");
    }
    for (const auto& e : ensembles) {
        BoundReport report;
        report.scenario = e.scenario;
        report.m = m;
        report.delta = delta;
        report.runs = e.runs();
        report.label_rate = e.noise.label ? e.noise.label->rate : 0.0;
        report.feature_param = e.noise.feature ? e.noise.feature->resolved_param() : 0.0;
        for (std::size_t t = 0; t < epochs; ++t) {
            const auto q = fit_gaussian_posterior(e.weights_per_epoch[t], variance_floor);
            const double kl = info::kl_gaussian_diag(q, prior);
            report.epochs.push_back({t + 1, kl, info::pac_bayes_bound(kl, m, delta)});
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

} // namespace fnb::bound
