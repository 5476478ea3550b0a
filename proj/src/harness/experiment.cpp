#include "fnbound/harness/experiment.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "fnbound/errors.hpp"
#include "fnbound/noise.hpp"
#include "fnbound/parallel.hpp"
#include "fnbound/rng.hpp"

namespace fnb::harness {

PreparedData prepare_data(const ExperimentConfig& config) {
    const auto& d = config.dataset;
    data::LabeledDataset full;
    if (d.source == DataSource::gmm) {
        full = data::generate_gmm({.means = data::spread_means(d.classes, d.dim, d.separation),
                                   .variance = d.variance,
                                   .samples_per_class = d.samples_per_class,
                                   .seed = config.seed});
        if (d.normalize) full = data::normalize(full);
    } else {
        full = data::load_idx(d.images, d.labels);
        if (d.subset > 0) {
            if (d.subset > full.size())
                throw ConfigError("dataset.subset: " + std::to_string(d.subset) + " exceeds the " +
                                  std::to_string(full.size()) + " samples on disk");
            full = data::subset(full, d.subset, derive_seed(config.seed, stream::dataset));
        }
    }
    auto spec = d.split;
    spec.seed = config.seed;
    auto parts = data::split(full, spec);
    return {std::move(parts.train), std::move(parts.validation), std::move(parts.test)};
}

nn::NetworkConfig network_config(const ExperimentConfig& config, std::size_t inputs, int classes) {
    nn::NetworkConfig net;
    net.layer_sizes.push_back(inputs);
    net.layer_sizes.insert(net.layer_sizes.end(), config.hidden.begin(), config.hidden.end());
    net.layer_sizes.push_back(static_cast<std::size_t>(classes));
    net.activation = config.activation;
    net.init_scheme = config.init_scheme;
    return net;
}

std::uint64_t run_seed(std::uint64_t master, std::size_t run_index) { return derive_seed(master, run_index); }

namespace {

noise::FeatureNoiseSpec gaussian_spec(double sigma2) {
    noise::FeatureNoiseSpec spec;
    spec.kind = noise::FeatureNoiseKind::gaussian;
    spec.param = sigma2;
    return spec;
}

std::string feature_kind_name(const std::optional<noise::FeatureNoiseSpec>& spec) {
    return spec ? std::string(noise::to_string(spec->kind)) : "none";
}

} // namespace

RunResult run_single(const ExperimentConfig& config, const PreparedData& data, std::size_t run_index,
                     const std::string& run_id) {
    RunResult result;
    result.seed = run_seed(config.seed, run_index);

    data::LabeledDataset train_set = data.train;
    if (config.label_noise.rate > 0.0) {
        auto spec = config.label_noise;
        spec.seed = derive_seed(result.seed, stream::label_noise);
        train_set = noise::apply_label_noise(train_set, spec);
    }
    double noise_param = 0.0;
    std::optional<int> severity;
    if (config.feature_noise) {
        auto spec = *config.feature_noise;
        noise_param = spec.resolved_param();
        severity = spec.severity;
        if (!spec.is_identity()) {
            spec.seed = derive_seed(result.seed, stream::feature_noise);
            train_set = noise::apply_feature_noise(train_set, spec);
        }
    }

    auto net_config = network_config(config, data.train.feature_count(), data.train.class_count);
    net_config.seed = derive_seed(result.seed, stream::init);
    const auto& eval = data.eval(config.eval_split);
    auto trained = nn::train(nn::init_network(net_config), train_set, config.train, result.seed, {.eval_set = &eval});

    const auto& rec = trained.record;
    for (std::size_t e = 0; e < rec.accuracy.size(); ++e) {
        result.rows.push_back({.run_id = run_id,
                               .label_noise = std::string(noise::to_string(config.label_noise.kind)),
                               .delta = config.label_noise.rate,
                               .feature_noise = feature_kind_name(config.feature_noise),
                               .noise_param = noise_param,
                               .severity = severity,
                               .epoch = e + 1,
                               .train_loss = rec.train_loss[e],
                               .test_acc = rec.accuracy[e],
                               .seed = result.seed});
    }
    result.final_accuracy = rec.accuracy.back();
    result.final_loss = rec.train_loss.back();
    result.net = std::move(trained.net);
    return result;
}

CellStats summarize(std::vector<double> accuracies) {
    CellStats s;
    s.accuracies = std::move(accuracies);
    const auto n = static_cast<double>(s.accuracies.size());
    if (s.accuracies.empty()) return s;
    s.mean = std::accumulate(s.accuracies.begin(), s.accuracies.end(), 0.0) / n;
    if (s.accuracies.size() > 1) {
        double ss = 0.0;
        for (double a : s.accuracies) ss += (a - s.mean) * (a - s.mean);
        s.stddev = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

namespace {

struct Task {
    ExperimentConfig config;
    std::size_t repeat = 0;
    std::string run_id;
};

// Runs every task (in parallel when config.jobs > 1) and returns results in
// task order.
std::vector<RunResult> run_tasks(const std::vector<Task>& tasks, const PreparedData& data, std::size_t jobs) {
    std::vector<RunResult> results(tasks.size());
    parallel_for(tasks.size(), jobs, [&](std::size_t i) {
        try {
            results[i] = run_single(tasks[i].config, data, tasks[i].repeat, tasks[i].run_id);
        } catch (const TrainingError& e) {
            std::string what = e.what();
            const std::string prefix = "epoch " + std::to_string(e.epoch()) + ": ";
            if (what.starts_with(prefix)) what.erase(0, prefix.size());
            throw TrainingError(e.epoch(), tasks[i].run_id + ": " + what);
        }
    });
    return results;
}

const SweepAxis& require_axis(const SweepConfig& sweep, const std::string& name, const std::string& command) {
    for (const auto& a : sweep.axes)
        if (a.name == name) return a;
    throw ConfigError("sweep.axes: " + command + " needs an axis named \"" + name + "\"");
}

void reject_other_axes(const SweepConfig& sweep, std::initializer_list<std::string> allowed,
                       const std::string& command) {
    for (std::size_t i = 0; i < sweep.axes.size(); ++i) {
        bool ok = false;
        for (const auto& a : allowed) ok = ok || sweep.axes[i].name == a;
        if (!ok)
            throw ConfigError("sweep.axes[" + std::to_string(i) + "].name: \"" + sweep.axes[i].name +
                              "\" is not an axis of " + command);
    }
}

std::vector<double> numeric_values(const SweepAxis& axis) {
    std::vector<double> out;
    for (std::size_t i = 0; i < axis.values.size(); ++i) {
        if (!std::holds_alternative<double>(axis.values[i]))
            throw ConfigError("sweep.axes." + axis.name + "[" + std::to_string(i) + "]: expected a number");
        out.push_back(std::get<double>(axis.values[i]));
    }
    return out;
}

std::vector<std::string> string_values(const SweepAxis& axis) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < axis.values.size(); ++i) {
        if (!std::holds_alternative<std::string>(axis.values[i]))
            throw ConfigError("sweep.axes." + axis.name + "[" + std::to_string(i) + "]: expected a string");
        out.push_back(std::get<std::string>(axis.values[i]));
    }
    return out;
}

void check_budget(const SweepConfig& sweep, std::size_t cells) {
    if (cells * sweep.repeats > sweep.budget)
        throw ConfigError("sweep.budget: " + std::to_string(cells) + " cells x " + std::to_string(sweep.repeats) +
                          " repeats = " + std::to_string(cells * sweep.repeats) + " runs exceeds the budget of " +
                          std::to_string(sweep.budget));
}

std::string label(const std::string& key, const std::string& value) { return key + "=" + value; }

void check_rate(double delta, const std::string& where) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError(where + ": label noise rate must lie in [0, 1]");
}

} // namespace

SigmaDeltaSweep sweep_sigma_delta(const ExperimentConfig& config, const PreparedData& data) {
    const std::string cmd = "sweep-sigma-delta";
    reject_other_axes(config.sweep, {"delta", "sigma"}, cmd);
    SigmaDeltaSweep out;
    out.deltas = numeric_values(require_axis(config.sweep, "delta", cmd));
    out.sigmas = numeric_values(require_axis(config.sweep, "sigma", cmd));
    for (double d : out.deltas) check_rate(d, "sweep.axes.delta");
    for (double s : out.sigmas)
        if (!(s >= 0.0)) throw ConfigError("sweep.axes.sigma: values must be non-negative");
    check_budget(config.sweep, out.deltas.size() * out.sigmas.size());

    std::vector<Task> tasks;
    for (double d : out.deltas)
        for (double s : out.sigmas)
            for (std::size_t r = 0; r < config.sweep.repeats; ++r) {
                Task t{config, r, {}};
                t.config.label_noise.rate = d;
                t.config.feature_noise.reset();
                if (s > 0.0) t.config.feature_noise = gaussian_spec(s * s);
                t.run_id = label("delta", format_number(d)) + ";" + label("sigma", format_number(s)) + ";" +
                           label("repeat", std::to_string(r));
                tasks.push_back(std::move(t));
            }
    auto results = run_tasks(tasks, data, config.jobs);

    std::size_t k = 0;
    out.cells.assign(out.deltas.size(), {});
    for (std::size_t i = 0; i < out.deltas.size(); ++i) {
        for (std::size_t j = 0; j < out.sigmas.size(); ++j) {
            std::vector<double> accs;
            for (std::size_t r = 0; r < config.sweep.repeats; ++r, ++k) {
                accs.push_back(results[k].final_accuracy);
                out.rows.insert(out.rows.end(), results[k].rows.begin(), results[k].rows.end());
            }
            out.cells[i].push_back(summarize(std::move(accs)));
        }
        std::size_t best = 0;
        for (std::size_t j = 1; j < out.sigmas.size(); ++j) {
            const double m = out.cells[i][j].mean, b = out.cells[i][best].mean;
            if (m > b || (m == b && out.sigmas[j] < out.sigmas[best])) best = j;
        }
        out.argmax.push_back(best);
    }
    return out;
}

FeatureTypeSweep sweep_feature_noise_types(const ExperimentConfig& config, const PreparedData& data) {
    const std::string cmd = "sweep-feature-noise";
    reject_other_axes(config.sweep, {"kind", "severity"}, cmd);
    FeatureTypeSweep out;
    const auto kind_names = string_values(require_axis(config.sweep, "kind", cmd));
    for (std::size_t i = 0; i < kind_names.size(); ++i) {
        try {
            out.kinds.push_back(noise::parse_feature_noise_kind(kind_names[i]));
        } catch (const ConfigError& e) {
            throw ConfigError("sweep.axes.kind[" + std::to_string(i) + "]: " + e.what());
        }
    }
    for (double s : numeric_values(require_axis(config.sweep, "severity", cmd))) {
        if (s != std::floor(s) || s < 0 || s > 5)
            throw ConfigError("sweep.axes.severity: levels are integers 0..5, got " + format_number(s));
        out.severities.push_back(static_cast<int>(s));
    }
    check_budget(config.sweep, out.kinds.size() * out.severities.size());

    std::vector<Task> tasks;
    for (auto kind : out.kinds)
        for (int level : out.severities)
            for (std::size_t r = 0; r < config.sweep.repeats; ++r) {
                Task t{config, r, {}};
                t.config.feature_noise.reset();
                if (level > 0) {
                    noise::FeatureNoiseSpec spec;
                    spec.kind = kind;
                    spec.severity = level;
                    t.config.feature_noise = spec;
                }
                t.run_id = label("kind", std::string(noise::to_string(kind))) + ";" +
                           label("severity", std::to_string(level)) + ";" + label("repeat", std::to_string(r));
                tasks.push_back(std::move(t));
            }
    auto results = run_tasks(tasks, data, config.jobs);

    std::size_t k = 0;
    out.cells.assign(out.kinds.size(), {});
    for (std::size_t i = 0; i < out.kinds.size(); ++i)
        for (std::size_t j = 0; j < out.severities.size(); ++j) {
            std::vector<double> accs;
            for (std::size_t r = 0; r < config.sweep.repeats; ++r, ++k) {
                accs.push_back(results[k].final_accuracy);
                out.rows.insert(out.rows.end(), results[k].rows.begin(), results[k].rows.end());
            }
            out.cells[i].push_back(summarize(std::move(accs)));
        }
    return out;
}

LabelTypeSweep sweep_label_noise_types(const ExperimentConfig& config, const PreparedData& data) {
    const std::string cmd = "sweep-label-noise";
    reject_other_axes(config.sweep, {"kind", "delta"}, cmd);
    LabelTypeSweep out;
    out.fn_sigma2 = config.sweep.fn_sigma2;
    const auto kind_names = string_values(require_axis(config.sweep, "kind", cmd));
    for (std::size_t i = 0; i < kind_names.size(); ++i) {
        try {
            out.kinds.push_back(noise::parse_label_noise_kind(kind_names[i]));
        } catch (const ConfigError& e) {
            throw ConfigError("sweep.axes.kind[" + std::to_string(i) + "]: " + e.what());
        }
    }
    out.deltas = numeric_values(require_axis(config.sweep, "delta", cmd));
    for (double d : out.deltas) check_rate(d, "sweep.axes.delta");
    check_budget(config.sweep, 2 * out.kinds.size() * out.deltas.size());

    std::vector<Task> tasks;
    for (auto kind : out.kinds)
        for (double d : out.deltas)
            for (int fn = 0; fn < 2; ++fn)
                for (std::size_t r = 0; r < config.sweep.repeats; ++r) {
                    Task t{config, r, {}};
                    t.config.label_noise.kind = kind;
                    t.config.label_noise.rate = d;
                    t.config.feature_noise.reset();
                    if (fn && out.fn_sigma2 > 0.0)
                        t.config.feature_noise =
                            gaussian_spec(out.fn_sigma2);
                    t.run_id = label("kind", std::string(noise::to_string(kind))) + ";" +
                               label("delta", format_number(d)) + ";" + label("fn", fn ? "on" : "off") + ";" +
                               label("repeat", std::to_string(r));
                    tasks.push_back(std::move(t));
                }
    auto results = run_tasks(tasks, data, config.jobs);

    std::size_t k = 0;
    out.without_fn.assign(out.kinds.size(), {});
    out.with_fn.assign(out.kinds.size(), {});
    for (std::size_t i = 0; i < out.kinds.size(); ++i)
        for (std::size_t j = 0; j < out.deltas.size(); ++j)
            for (int fn = 0; fn < 2; ++fn) {
                std::vector<double> accs;
                for (std::size_t r = 0; r < config.sweep.repeats; ++r, ++k) {
                    accs.push_back(results[k].final_accuracy);
                    out.rows.insert(out.rows.end(), results[k].rows.begin(), results[k].rows.end());
                }
                (fn ? out.with_fn : out.without_fn)[i].push_back(summarize(std::move(accs)));
            }
    return out;
}

std::vector<bound::BoundReport> bound_viz(const ExperimentConfig& config, const PreparedData& data) {
    if (!(config.label_noise.rate > 0.0))
        throw ConfigError("label_noise.rate: bound-viz needs a positive label noise rate");
    if (!config.feature_noise) throw ConfigError("feature_noise: bound-viz needs a feature noise spec");

    const auto base = network_config(config, data.train.feature_count(), data.train.class_count);
    const bound::ScenarioNoise label_only{.label = config.label_noise, .feature = std::nullopt};
    const bound::ScenarioNoise both{.label = config.label_noise, .feature = config.feature_noise};

    std::vector<bound::EnsembleRun> ensembles;
    ensembles.push_back(bound::collect_ensemble(bound::Scenario::clean, base, config.train, data.train, {},
                                                config.bound.runs, config.seed, config.jobs));
    ensembles.push_back(bound::collect_ensemble(bound::Scenario::label_noise, base, config.train, data.train,
                                                label_only, config.bound.runs, config.seed, config.jobs));
    ensembles.push_back(bound::collect_ensemble(bound::Scenario::label_and_feature_noise, base, config.train,
                                                data.train, both, config.bound.runs, config.seed, config.jobs));
    const auto prior = bound::make_prior(config.bound.prior_mode, base, config.bound.prior_variance);
    return bound::bound_curves(ensembles, prior, static_cast<double>(data.train.size()), config.bound.confidence,
                               config.bound.variance_floor);
}

std::vector<SaliencyResult> saliency_maps(const nn::Network& net, const data::LabeledDataset& eval,
                                          const std::vector<std::size_t>& samples) {
    std::vector<SaliencyResult> out;
    for (std::size_t idx : samples) {
        if (idx >= eval.size())
            throw ConfigError("saliency.samples: index " + std::to_string(idx) + " is outside the evaluation split (" +
                              std::to_string(eval.size()) + " samples)");
        SaliencyResult s;
        s.sample = idx;
        s.label = eval.labels[idx];
        const Vector row = eval.features.row(static_cast<Eigen::Index>(idx)).transpose();
        const auto map = nn::saliency_map(net, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                                          s.label);
        s.values.assign(map.data(), map.data() + map.size());
        s.predicted = nn::predict(net, eval.features.row(static_cast<Eigen::Index>(idx))).front();
        if (eval.image_shape) {
            s.height = eval.image_shape->height;
            s.width = eval.image_shape->width;
        } else {
            s.height = 1;
            s.width = s.values.size();
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace fnb::harness
