#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fnbound/linalg.hpp"

namespace fnb::data {

enum class Provenance { gmm, idx, derived };

std::string_view to_string(Provenance p);

struct ImageShape {
    std::size_t height = 0;
    std::size_t width = 0;
    friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

// m x n features (one sample per row) with labels in {0..c-1}.
// Immutable by convention once built; operations return new datasets.
struct LabeledDataset {
    Matrix features;
    std::vector<int> labels;
    int class_count = 0;
    Provenance provenance = Provenance::derived;
    std::optional<ImageShape> image_shape;

    std::size_t size() const { return labels.size(); }
    std::size_t feature_count() const { return static_cast<std::size_t>(features.cols()); }

    // Throws DataError when m == 0, a label is out of range, the row count
    // disagrees with the label count, or a feature is non-finite.
    void validate() const;
};

// Rows `indices` of `source`, in the given order. Provenance becomes derived.
LabeledDataset select_rows(const LabeledDataset& source, std::span<const std::size_t> indices);

// Gaussian mixture: one isotropic component per class, shared variance.
struct GmmSpec {
    std::vector<std::vector<double>> means;  // c x n
    double variance = 1.0;
    std::size_t samples_per_class = 0;
    std::uint64_t seed = 0;
};

LabeledDataset generate_gmm(const GmmSpec& spec);

// Class means for a c-class GMM in `dim` dimensions placed so that every
// pairwise decision boundary sits `separation` away from each mean:
//   c == 2: means at +-(separation / sqrt(dim)) * ones(dim)
//   c  > 2: mean_k = sqrt(2) * separation * e_k           (requires c <= dim)
// With unit variance the two-class Bayes accuracy is Phi(separation).
std::vector<std::vector<double>> spread_means(int classes, std::size_t dim, double separation);

// Big-endian IDX files: images magic 0x00000803 (count, rows, cols),
// labels magic 0x00000801 (count). Pixels are mapped to [0,1] by /255.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);
LabeledDataset decode_idx(std::span<const std::uint8_t> image_bytes,
                          std::span<const std::uint8_t> label_bytes);

std::vector<std::uint8_t> encode_idx_images(std::span<const std::uint8_t> pixels, std::size_t count,
                                            std::size_t rows, std::size_t cols);
std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels);

// Global min-max over every entry: x -> (x - min) / (max - min). A constant
// dataset maps to all zeros. Idempotent on data already spanning [0,1].
struct MinMax {
    double min = 0.0;
    double max = 1.0;
};
MinMax fit_min_max(const LabeledDataset& dataset);
LabeledDataset apply_min_max(const LabeledDataset& dataset, const MinMax& range);
LabeledDataset normalize(const LabeledDataset& dataset);

struct SplitSpec {
    double train = 5.0 / 7.0;
    double validation = 1.0 / 7.0;
    double test = 1.0 / 7.0;
    std::uint64_t seed = 0;
};

struct Splits {
    LabeledDataset train;
    LabeledDataset validation;
    LabeledDataset test;
};

// Seeded permutation, then sizes round(f_train*m), round(f_val*m), remainder.
Splits split(const LabeledDataset& dataset, const SplitSpec& spec);

// Seed-deterministic subset of `count` rows (count <= m).
LabeledDataset subset(const LabeledDataset& dataset, std::size_t count, std::uint64_t seed);

// E(X): mean over all m*n entries.
double mean_feature(const LabeledDataset& dataset);
// E(X^2): mean of squared entries.
double second_moment_feature(const LabeledDataset& dataset);
// Variance over all entries (population form).
double feature_variance(const LabeledDataset& dataset);

} // namespace fnb::data
