#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fnbound/bound_estimation.hpp"
#include "fnbound/core_nn.hpp"
#include "fnbound/datasets.hpp"
#include "fnbound/harness/config.hpp"
#include "fnbound/harness/report.hpp"

namespace fnb::harness {

struct PreparedData {
    data::LabeledDataset train;
    data::LabeledDataset validation;
    data::LabeledDataset test;

    const data::LabeledDataset& eval(const std::string& split) const { return split == "validation" ? validation : test; }
};

// Builds (gmm) or loads (idx) the dataset and splits it. Depends only on the
// dataset section and the master seed, so every run of a sweep sees the same
// split. IDX pixels are scaled by /255; gmm draws get a global min-max to
// [0, 1] over the whole generated set unless dataset.normalize is false.
PreparedData prepare_data(const ExperimentConfig& config);

nn::NetworkConfig network_config(const ExperimentConfig& config, std::size_t inputs, int classes);

// Per-run seed: derive_seed(master, run_index). Initialization, shuffling
// and the two noise draws each take their own stream of it.
std::uint64_t run_seed(std::uint64_t master, std::size_t run_index);

struct RunResult {
    std::vector<ReportRow> rows;
    double final_accuracy = 0.0;
    double final_loss = 0.0;
    std::uint64_t seed = 0;
    nn::Network net;
};

// Label noise on the training labels, feature noise on the training
// features, training, then per-epoch accuracy on the clean evaluation split.
RunResult run_single(const ExperimentConfig& config, const PreparedData& data, std::size_t run_index,
                     const std::string& run_id);

struct CellStats {
    std::vector<double> accuracies;  // one per repeat
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for one repeat
};

CellStats summarize(std::vector<double> accuracies);

struct SigmaDeltaSweep {
    std::vector<double> deltas;
    std::vector<double> sigmas;
    std::vector<std::vector<CellStats>> cells;  // [delta][sigma]
    std::vector<std::size_t> argmax;            // per delta, index into sigmas (lowest sigma on ties)
    std::vector<ReportRow> rows;
};

// Axes "delta" and "sigma" (feature noise standard deviation; 0 = none).
SigmaDeltaSweep sweep_sigma_delta(const ExperimentConfig& config, const PreparedData& data);

struct FeatureTypeSweep {
    std::vector<noise::FeatureNoiseKind> kinds;
    std::vector<int> severities;
    std::vector<std::vector<CellStats>> cells;  // [kind][severity]
    std::vector<ReportRow> rows;
};

// Axes "kind" (gaussian | impulse | gaussian_blur) and "severity" (0..5,
// 0 = no feature noise). Label noise comes from the base config.
FeatureTypeSweep sweep_feature_noise_types(const ExperimentConfig& config, const PreparedData& data);

struct LabelTypeSweep {
    std::vector<noise::LabelNoiseKind> kinds;
    std::vector<double> deltas;
    double fn_sigma2 = 0.0;
    std::vector<std::vector<CellStats>> without_fn;  // [kind][delta]
    std::vector<std::vector<CellStats>> with_fn;
    std::vector<ReportRow> rows;
};

// Axes "kind" (symmetric | pair | instance_dependent) and "delta"; every
// cell runs once without and once with gaussian feature noise sweep.fn_sigma2.
LabelTypeSweep sweep_label_noise_types(const ExperimentConfig& config, const PreparedData& data);

// Three scenarios (clean, label noise, label + feature noise) with the
// config's label and feature noise, bound.runs runs each.
std::vector<bound::BoundReport> bound_viz(const ExperimentConfig& config, const PreparedData& data);

struct SaliencyResult {
    std::size_t sample = 0;  // index into the evaluation split
    int label = 0;
    int predicted = 0;
    std::size_t height = 1;
    std::size_t width = 0;
    std::vector<double> values;
};

// Saliency of each sample's true class under `net`; ConfigError for an
// index outside the evaluation split.
std::vector<SaliencyResult> saliency_maps(const nn::Network& net, const data::LabeledDataset& eval,
                                          const std::vector<std::size_t>& samples);

} // namespace fnb::harness
