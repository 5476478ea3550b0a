#include "fnbound/noise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "fnbound/errors.hpp"
#include "fnbound/rng.hpp"

namespace fnb::noise {

std::string_view to_string(LabelNoiseKind k) {
    switch (k) {
    case LabelNoiseKind::symmetric: return "symmetric";
    case LabelNoiseKind::pair: return "pair";
    case LabelNoiseKind::instance_dependent: return "instance_dependent";
    }
    return "symmetric";
}

std::string_view to_string(FeatureNoiseKind k) {
    switch (k) {
    case FeatureNoiseKind::gaussian: return "gaussian";
    case FeatureNoiseKind::impulse: return "impulse";
    case FeatureNoiseKind::gaussian_blur: return "gaussian_blur";
    }
    return "gaussian";
}

LabelNoiseKind parse_label_noise_kind(std::string_view name) {
    if (name == "symmetric") return LabelNoiseKind::symmetric;
    if (name == "pair") return LabelNoiseKind::pair;
    if (name == "instance_dependent" || name == "idn") return LabelNoiseKind::instance_dependent;
    throw ConfigError("unknown label noise kind '" + std::string(name) + "'");
}

FeatureNoiseKind parse_feature_noise_kind(std::string_view name) {
    if (name == "gaussian") return FeatureNoiseKind::gaussian;
    if (name == "impulse") return FeatureNoiseKind::impulse;
    if (name == "gaussian_blur") return FeatureNoiseKind::gaussian_blur;
    throw ConfigError("unknown feature noise kind '" + std::string(name) + "'");
}

void LabelNoiseSpec::validate() const {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("label noise rate must lie in [0,1]");
}

void FeatureNoiseSpec::validate() const {
    if (param.has_value() == severity.has_value())
        throw ConfigError("feature noise needs exactly one of an explicit parameter or a severity level");
    if (param) {
        if (!std::isfinite(*param) || *param < 0.0) throw ConfigError("feature noise parameter must be finite and >= 0");
        if (kind == FeatureNoiseKind::impulse && *param > 1.0) throw ConfigError("impulse fraction must lie in [0,1]");
    } else {
        severity_to_param(kind, *severity);
    }
}

double FeatureNoiseSpec::resolved_param() const {
    validate();
    return param ? *param : severity_to_param(kind, *severity);
}

bool FeatureNoiseSpec::is_identity() const {
    return resolved_param() == 0.0;
}

namespace {

void check_classes(int classes) {
    if (classes < 2) throw ConfigError("label noise needs at least two classes");
}

void check_rate(double rate) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("label noise rate must lie in [0,1]");
}

void check_labels(std::span<const int> labels, int classes) {
    for (const int y : labels)
        if (y < 0 || y >= classes) throw DataError("label " + std::to_string(y) + " out of range");
}

LabelCorruption finish(std::span<const int> original, std::vector<int> noisy) {
    LabelCorruption out;
    out.flip_mask.resize(original.size());
    std::size_t flips = 0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        out.flip_mask[i] = noisy[i] != original[i];
        flips += out.flip_mask[i] ? 1 : 0;
    }
    out.labels = std::move(noisy);
    out.flipped_fraction = original.empty() ? 0.0 : static_cast<double>(flips) / static_cast<double>(original.size());
    return out;
}

FeatureCorruption finish(const Matrix& original, Matrix corrupted, std::size_t touched) {
    FeatureCorruption out;
    out.touched_entries = touched;
    out.noise = corrupted - original;
    out.changed_entries = static_cast<std::size_t>((out.noise.array() != 0.0).count());
    if (out.noise.size() > 0) {
        out.noise_mean = out.noise.mean();
        out.noise_variance = (out.noise.array() - out.noise_mean).square().mean();
    }
    out.features = std::move(corrupted);
    return out;
}

} // namespace

LabelCorruption corrupt_labels_symmetric(std::span<const int> labels, double rate, int classes, std::uint64_t seed) {
    check_classes(classes);
    check_rate(rate);
    check_labels(labels, classes);
    Rng rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> uniform_class(0, classes - 1);
    std::vector<int> noisy(labels.begin(), labels.end());
    for (auto& y : noisy)
        if (coin(rng) < rate) y = uniform_class(rng);
    return finish(labels, std::move(noisy));
}

LabelCorruption corrupt_labels_pair(std::span<const int> labels, double rate, int classes, std::uint64_t seed) {
    check_classes(classes);
    check_rate(rate);
    check_labels(labels, classes);
    Rng rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<int> noisy(labels.begin(), labels.end());
    for (auto& y : noisy)
        if (coin(rng) < rate) y = (y + 1) % classes;
    return finish(labels, std::move(noisy));
}

std::vector<double> instance_flip_probabilities(const Matrix& features, double rate, std::uint64_t seed) {
    check_rate(rate);
    const auto m = static_cast<std::size_t>(features.rows());
    std::vector<double> prob(m, 0.0);
    if (rate == 0.0 || m == 0) return prob;
    if (rate >= 1.0) throw ConfigError("instance-dependent noise needs rate < 1");

    Rng rng(derive_seed(seed, 0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector projection(features.cols());
    for (Eigen::Index j = 0; j < projection.size(); ++j) projection(j) = gauss(rng);
    const Vector score = (features * projection).cwiseAbs();

    const std::size_t nonzero = static_cast<std::size_t>((score.array() > 0.0).count());
    if (nonzero == 0) throw DataError("degenerate projection: every sample projects to zero");
    if (static_cast<double>(nonzero) / static_cast<double>(m) < rate)
        throw DataError("degenerate projection: too few samples with non-zero projection to reach the rate");

    auto mean_prob = [&](double t) { return (t * score.array()).min(1.0).mean(); };
    double lo = 0.0;
    double hi = 1.0 / score.maxCoeff();
    while (mean_prob(hi) < rate) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_prob(mid) < rate ? lo : hi) = mid;
    }
    for (std::size_t i = 0; i < m; ++i) prob[i] = std::min(1.0, hi * score(static_cast<Eigen::Index>(i)));
    return prob;
}

LabelCorruption corrupt_labels_instance_dependent(const Matrix& features, std::span<const int> labels,
                                                  double rate, int classes, std::uint64_t seed) {
    check_classes(classes);
    check_rate(rate);
    check_labels(labels, classes);
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw ShapeError("feature rows do not match the label count");
    const auto prob = instance_flip_probabilities(features, rate, seed);
    Rng rng(derive_seed(seed, 1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> noisy(labels.begin(), labels.end());
    std::vector<double> weights(static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        // Draw the per-sample categorical unconditionally so that the stream
        // position does not depend on earlier flips.
        for (int k = 0; k < classes; ++k) weights[static_cast<std::size_t>(k)] = k == labels[i] ? 0.0 : unit(rng);
        const double u = unit(rng);
        if (u >= prob[i]) continue;
        std::discrete_distribution<int> pick(weights.begin(), weights.end());
        noisy[i] = pick(rng);
    }
    return finish(labels, std::move(noisy));
}

FeatureCorruption add_gaussian_feature_noise(const Matrix& features, double sigma2, std::uint64_t seed) {
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw ConfigError("sigma^2 must be finite and >= 0");
    if (sigma2 == 0.0) return finish(features, features, 0);
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2));
    Matrix corrupted = features;
    for (Eigen::Index i = 0; i < corrupted.size(); ++i) corrupted.data()[i] += gauss(rng);
    return finish(features, std::move(corrupted), static_cast<std::size_t>(features.size()));
}

FeatureCorruption add_impulse_noise(const Matrix& features, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("impulse fraction must lie in [0,1]");
    const auto total = static_cast<std::size_t>(features.size());
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
    Matrix corrupted = features;
    if (count > 0) {
        Rng rng(seed);
        std::vector<std::uint32_t> index(total);
        std::iota(index.begin(), index.end(), 0u);
        std::uniform_int_distribution<int> bit(0, 1);
        // Partial Fisher-Yates: the first `count` slots become a uniform sample.
        for (std::size_t i = 0; i < count; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, total - 1);
            std::swap(index[i], index[pick(rng)]);
            corrupted.data()[index[i]] = bit(rng) ? 1.0 : 0.0;
        }
    }
    return finish(features, std::move(corrupted), count);
}

std::vector<double> gaussian_kernel_1d(double kernel_sigma) {
    if (!(kernel_sigma > 0.0) || !std::isfinite(kernel_sigma)) throw ConfigError("kernel sigma must be positive");
    const auto radius = static_cast<int>(std::ceil(3.0 * kernel_sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i * i) / (kernel_sigma * kernel_sigma));
        taps[static_cast<std::size_t>(i + radius)] = w;
        sum += w;
    }
    for (auto& w : taps) w /= sum;
    return taps;
}

namespace {

std::size_t reflect_index(long i, long n) {
    const long period = 2 * n;
    long j = i % period;
    if (j < 0) j += period;
    if (j >= n) j = period - 1 - j;
    return static_cast<std::size_t>(j);
}

} // namespace

FeatureCorruption apply_gaussian_blur(const Matrix& features, std::size_t height, std::size_t width,
                                      double kernel_sigma) {
    if (height == 0 || width == 0 || height * width != static_cast<std::size_t>(features.cols()))
        throw ShapeError("image shape " + std::to_string(height) + "x" + std::to_string(width) +
                         " does not match " + std::to_string(features.cols()) + " features");
    const auto taps = gaussian_kernel_1d(kernel_sigma);
    const long radius = static_cast<long>(taps.size() / 2);
    const long h = static_cast<long>(height);
    const long w = static_cast<long>(width);
    Matrix corrupted(features.rows(), features.cols());
    std::vector<double> tmp(height * width);
    for (Eigen::Index s = 0; s < features.rows(); ++s) {
        const double* src = features.row(s).data();
        for (long r = 0; r < h; ++r)
            for (long c = 0; c < w; ++c) {
                double acc = 0.0;
                for (long k = -radius; k <= radius; ++k)
                    acc += taps[static_cast<std::size_t>(k + radius)] * src[r * w + static_cast<long>(reflect_index(c + k, w))];
                tmp[static_cast<std::size_t>(r * w + c)] = acc;
            }
        double* dst = corrupted.row(s).data();
        for (long r = 0; r < h; ++r)
            for (long c = 0; c < w; ++c) {
                double acc = 0.0;
                for (long k = -radius; k <= radius; ++k)
                    acc += taps[static_cast<std::size_t>(k + radius)] *
                           tmp[static_cast<std::size_t>(static_cast<long>(reflect_index(r + k, h)) * w + c)];
                dst[r * w + c] = acc;
            }
    }
    return finish(features, std::move(corrupted), static_cast<std::size_t>(features.size()));
}

double severity_to_param(FeatureNoiseKind kind, int level) {
    if (level < 1 || level > 5) throw ConfigError("severity level must lie in 1..5");
    static constexpr std::array<double, 5> gaussian_sigma{0.08, 0.18, 0.26, 0.38, 0.50};
    static constexpr std::array<double, 5> impulse_fraction{0.03, 0.06, 0.09, 0.17, 0.27};
    static constexpr std::array<double, 5> blur_sigma{0.5, 0.75, 1.0, 1.25, 1.5};
    const auto i = static_cast<std::size_t>(level - 1);
    switch (kind) {
    case FeatureNoiseKind::gaussian: return gaussian_sigma[i] * gaussian_sigma[i];
    case FeatureNoiseKind::impulse: return impulse_fraction[i];
    case FeatureNoiseKind::gaussian_blur: return blur_sigma[i];
    }
    throw ConfigError("unknown feature noise kind");
}

data::LabeledDataset apply_label_noise(const data::LabeledDataset& dataset, const LabelNoiseSpec& spec) {
    spec.validate();
    data::LabeledDataset out = dataset;
    if (spec.rate == 0.0) return out;
    switch (spec.kind) {
    case LabelNoiseKind::symmetric:
        out.labels = corrupt_labels_symmetric(dataset.labels, spec.rate, dataset.class_count, spec.seed).labels;
        break;
    case LabelNoiseKind::pair:
        out.labels = corrupt_labels_pair(dataset.labels, spec.rate, dataset.class_count, spec.seed).labels;
        break;
    case LabelNoiseKind::instance_dependent:
        out.labels = corrupt_labels_instance_dependent(dataset.features, dataset.labels, spec.rate,
                                                       dataset.class_count, spec.seed).labels;
        break;
    }
    out.provenance = data::Provenance::derived;
    return out;
}

data::LabeledDataset apply_feature_noise(const data::LabeledDataset& dataset, const FeatureNoiseSpec& spec) {
    const double param = spec.resolved_param();
    data::LabeledDataset out = dataset;
    if (param == 0.0) return out;
    switch (spec.kind) {
    case FeatureNoiseKind::gaussian:
        out.features = add_gaussian_feature_noise(dataset.features, param, spec.seed).features;
        break;
    case FeatureNoiseKind::impulse:
        out.features = add_impulse_noise(dataset.features, param, spec.seed).features;
        break;
    case FeatureNoiseKind::gaussian_blur: {
        if (!dataset.image_shape) throw ShapeError("gaussian blur needs image-shaped features");
        out.features = apply_gaussian_blur(dataset.features, dataset.image_shape->height,
                                           dataset.image_shape->width, param).features;
        break;
    }
    }
    out.provenance = data::Provenance::derived;
    return out;
}

} // namespace fnb::noise
