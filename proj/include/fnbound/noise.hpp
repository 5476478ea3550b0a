#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fnbound/datasets.hpp"
#include "fnbound/linalg.hpp"

namespace fnb::noise {

enum class LabelNoiseKind { symmetric, pair, instance_dependent };
enum class FeatureNoiseKind { gaussian, impulse, gaussian_blur };

std::string_view to_string(LabelNoiseKind k);
std::string_view to_string(FeatureNoiseKind k);
LabelNoiseKind parse_label_noise_kind(std::string_view name);
FeatureNoiseKind parse_feature_noise_kind(std::string_view name);

struct LabelNoiseSpec {
    LabelNoiseKind kind = LabelNoiseKind::symmetric;
    double rate = 0.0;  // corruption rate Delta
    std::uint64_t seed = 0;

    void validate() const;
};

// Exactly one of `param` and `severity` is set. The parameter is sigma^2 for
// gaussian, the corrupted fraction for impulse and the kernel sigma (pixels)
// for gaussian_blur.
struct FeatureNoiseSpec {
    FeatureNoiseKind kind = FeatureNoiseKind::gaussian;
    std::optional<double> param;
    std::optional<int> severity;
    std::uint64_t seed = 0;

    void validate() const;
    double resolved_param() const;
    // True when applying it cannot change any feature.
    bool is_identity() const;
};

struct LabelCorruption {
    std::vector<int> labels;
    std::vector<bool> flip_mask;  // true iff the label changed
    double flipped_fraction = 0.0;
};

struct FeatureCorruption {
    Matrix features;
    Matrix noise;  // corrupted - original
    std::size_t touched_entries = 0;  // entries the process was applied to
    std::size_t changed_entries = 0;  // entries whose value actually changed
    double noise_mean = 0.0;
    double noise_variance = 0.0;
};

// With probability rate, replace the label by a uniform draw over all c
// classes (the draw may return the original class, so the realized flip
// rate is rate * (1 - 1/c)).
LabelCorruption corrupt_labels_symmetric(std::span<const int> labels, double rate, int classes, std::uint64_t seed);

// With probability rate, y -> (y + 1) mod c.
LabelCorruption corrupt_labels_pair(std::span<const int> labels, double rate, int classes, std::uint64_t seed);

// Flip probability p_i = min(1, t * |x_i . w|) with w a seeded Gaussian
// projection and t chosen so that mean(p_i) == rate. A flipped label is drawn
// from a per-sample random categorical over the other c-1 classes.
LabelCorruption corrupt_labels_instance_dependent(const Matrix& features, std::span<const int> labels,
                                                  double rate, int classes, std::uint64_t seed);

// Flip probabilities used by corrupt_labels_instance_dependent.
std::vector<double> instance_flip_probabilities(const Matrix& features, double rate, std::uint64_t seed);

// x + z with z ~ N(0, sigma2) i.i.d.; no clipping.
FeatureCorruption add_gaussian_feature_noise(const Matrix& features, double sigma2, std::uint64_t seed);

// round(fraction * m * n) distinct entries set to 0 or 1 with equal probability.
FeatureCorruption add_impulse_noise(const Matrix& features, double fraction, std::uint64_t seed);

// Normalized 1-D Gaussian taps of radius ceil(3 * sigma).
std::vector<double> gaussian_kernel_1d(double kernel_sigma);

// Separable per-image Gaussian blur with half-sample symmetric reflection
// at the borders (d c b a | a b c d | d c b a).
FeatureCorruption apply_gaussian_blur(const Matrix& features, std::size_t height, std::size_t width,
                                      double kernel_sigma);

// Severity tables for levels 1..5:
//   gaussian  sigma           {0.08, 0.18, 0.26, 0.38, 0.50}  (param is sigma^2)
//   impulse   fraction        {0.03, 0.06, 0.09, 0.17, 0.27}
//   blur      kernel sigma    {0.5, 0.75, 1.0, 1.25, 1.5}
double severity_to_param(FeatureNoiseKind kind, int level);

data::LabeledDataset apply_label_noise(const data::LabeledDataset& dataset, const LabelNoiseSpec& spec);
data::LabeledDataset apply_feature_noise(const data::LabeledDataset& dataset, const FeatureNoiseSpec& spec);

} // namespace fnb::noise
