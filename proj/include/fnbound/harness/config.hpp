#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "fnbound/bound_estimation.hpp"
#include "fnbound/core_nn.hpp"
#include "fnbound/datasets.hpp"
#include "fnbound/noise.hpp"

namespace fnb::harness {

enum class DataSource { gmm, idx };

struct DatasetConfig {
    DataSource source = DataSource::gmm;
    // gmm
    int classes = 2;
    std::size_t dim = 10;
    double separation = 2.0;
    double variance = 1.0;
    std::size_t samples_per_class = 500;
    // idx
    std::filesystem::path images;
    std::filesystem::path labels;
    std::size_t subset = 0;  // 0 = use every sample
    // both
    bool normalize = true;  // global min-max to [0, 1] before any noise (gmm only; IDX is already /255)
    data::SplitSpec split{0.6, 0.2, 0.2, 0};
};

struct SweepAxis {
    std::string name;
    std::vector<std::variant<double, std::string>> values;
};

struct SweepConfig {
    std::vector<SweepAxis> axes;
    std::size_t repeats = 3;
    std::size_t budget = 1000;  // cap on cells * repeats
    double fn_sigma2 = 0.16;    // feature noise used by the label-noise-type sweep
};

struct BoundVizConfig {
    std::size_t runs = 20;
    double confidence = 0.05;
    bound::PriorMode prior_mode = bound::PriorMode::standard_normal;
    double prior_variance = 1.0;
    double variance_floor = bound::default_variance_floor;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    std::vector<std::size_t> hidden{64, 64};
    nn::Activation activation = nn::Activation::relu;
    nn::InitScheme init_scheme = nn::InitScheme::he;
    nn::TrainSchedule train{.epochs = 30, .batch_size = 64, .lr_initial = 0.05,
                            .lr_drop_epoch = 20, .lr_drop_factor = 0.1, .momentum = 0.9};
    noise::LabelNoiseSpec label_noise{noise::LabelNoiseKind::symmetric, 0.0, 0};
    std::optional<noise::FeatureNoiseSpec> feature_noise;
    std::string eval_split = "test";  // "test" or "validation"
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "fnbound-out";
    std::size_t jobs = 1;
    bool svg = false;
    SweepConfig sweep;
    BoundVizConfig bound;
    std::vector<std::size_t> saliency_samples{0};
};

// Strict parse: unknown keys, wrong types and out-of-range values raise a
// ConfigError whose message starts with the JSON field path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

// "a.b.c=value": value is parsed as JSON when possible, otherwise taken as a
// string. Intermediate objects are created as needed.
void apply_override(nlohmann::json& doc, std::string_view assignment);

} // namespace fnb::harness
