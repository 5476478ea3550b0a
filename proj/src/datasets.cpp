#include "fnbound/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "fnbound/errors.hpp"
#include "fnbound/rng.hpp"

namespace fnb::data {

std::string_view to_string(Provenance p) {
    switch (p) {
    case Provenance::gmm: return "gmm";
    case Provenance::idx: return "idx";
    case Provenance::derived: return "derived";
    }
    return "derived";
}

void LabeledDataset::validate() const {
    if (labels.empty()) throw DataError("dataset is empty");
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw DataError("feature rows " + std::to_string(features.rows()) + " != label count " +
                        std::to_string(labels.size()));
    if (class_count < 1) throw DataError("class count must be positive");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || labels[i] >= class_count)
            throw DataError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                            " outside {0.." + std::to_string(class_count - 1) + "}");
    if (!features.allFinite()) throw DataError("non-finite feature entry");
    if (image_shape && image_shape->height * image_shape->width != feature_count())
        throw DataError("image shape does not match the feature count");
}

LabeledDataset select_rows(const LabeledDataset& source, std::span<const std::size_t> indices) {
    LabeledDataset out;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), source.features.cols());
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= source.size()) throw DataError("row index out of range");
        out.features.row(static_cast<Eigen::Index>(i)) = source.features.row(static_cast<Eigen::Index>(indices[i]));
        out.labels[i] = source.labels[indices[i]];
    }
    out.class_count = source.class_count;
    out.provenance = Provenance::derived;
    out.image_shape = source.image_shape;
    return out;
}

LabeledDataset generate_gmm(const GmmSpec& spec) {
    if (spec.means.size() < 2) throw ConfigError("GMM needs at least two classes");
    if (!(spec.variance > 0.0) || !std::isfinite(spec.variance))
        throw ConfigError("GMM variance must be positive and finite");
    if (spec.samples_per_class == 0) throw ConfigError("samples_per_class must be positive");
    const std::size_t dim = spec.means.front().size();
    if (dim == 0) throw ConfigError("GMM means must be non-empty");
    for (const auto& mu : spec.means) {
        if (mu.size() != dim) throw ConfigError("GMM means have inconsistent dimensions");
        for (const double v : mu)
            if (!std::isfinite(v)) throw ConfigError("GMM mean is not finite");
    }

    const std::size_t classes = spec.means.size();
    const std::size_t m = classes * spec.samples_per_class;
    Rng rng(derive_seed(spec.seed, stream::dataset));
    std::normal_distribution<double> noise(0.0, std::sqrt(spec.variance));

    LabeledDataset ordered;
    ordered.features.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(dim));
    ordered.labels.resize(m);
    std::size_t row = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
            for (std::size_t j = 0; j < dim; ++j)
                ordered.features(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) =
                    spec.means[c][j] + noise(rng);
            ordered.labels[row] = static_cast<int>(c);
        }
    }
    ordered.class_count = static_cast<int>(classes);

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    LabeledDataset out = select_rows(ordered, perm);
    out.provenance = Provenance::gmm;
    return out;
}

std::vector<std::vector<double>> spread_means(int classes, std::size_t dim, double separation) {
    if (classes < 2) throw ConfigError("need at least two classes");
    if (dim == 0) throw ConfigError("dimension must be positive");
    std::vector<std::vector<double>> means(static_cast<std::size_t>(classes), std::vector<double>(dim, 0.0));
    if (classes == 2) {
        const double v = separation / std::sqrt(static_cast<double>(dim));
        std::fill(means[0].begin(), means[0].end(), -v);
        std::fill(means[1].begin(), means[1].end(), v);
        return means;
    }
    if (static_cast<std::size_t>(classes) > dim)
        throw ConfigError("one-hot GMM means need dim >= classes");
    for (int k = 0; k < classes; ++k)
        means[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] = std::sqrt(2.0) * separation;
    return means;
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* field) {
    if (bytes.size() < offset + 4) throw FormatError(field, "file truncated inside the header");
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("file", "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

LabeledDataset decode_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes) {
    if (read_be32(image_bytes, 0, "images.magic") != kImageMagic)
        throw FormatError("images.magic", "expected 0x00000803");
    const std::uint64_t count = read_be32(image_bytes, 4, "images.count");
    const std::uint64_t rows = read_be32(image_bytes, 8, "images.rows");
    const std::uint64_t cols = read_be32(image_bytes, 12, "images.cols");
    if (count == 0) throw FormatError("images.count", "zero images");
    if (rows == 0 || cols == 0) throw FormatError("images.rows", "zero image dimension");
    // Dimensions are 32-bit each, so the product fits in 96 bits; reject
    // anything that would overflow 64-bit arithmetic or exceed the payload.
    const std::uint64_t pixels = rows * cols;
    if (pixels > std::numeric_limits<std::uint32_t>::max() ||
        count > std::numeric_limits<std::uint64_t>::max() / pixels)
        throw FormatError("images.dims", "dimension product overflows");
    const std::uint64_t payload = count * pixels;
    const std::uint64_t available = image_bytes.size() - 16;
    if (payload > available) throw FormatError("images.data", "file truncated: pixel payload shorter than header claims");
    if (payload < available) throw FormatError("images.data", "trailing bytes after pixel payload");

    if (read_be32(label_bytes, 0, "labels.magic") != kLabelMagic)
        throw FormatError("labels.magic", "expected 0x00000801");
    const std::uint64_t label_count = read_be32(label_bytes, 4, "labels.count");
    if (label_count == 0) throw FormatError("labels.count", "zero labels");
    if (label_count != count)
        throw FormatError("labels.count", "label count " + std::to_string(label_count) +
                                              " != image count " + std::to_string(count));
    const std::uint64_t label_available = label_bytes.size() - 8;
    if (label_count > label_available) throw FormatError("labels.data", "file truncated: fewer labels than header claims");
    if (label_count < label_available) throw FormatError("labels.data", "trailing bytes after labels");

    LabeledDataset out;
    out.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
    const std::uint8_t* src = image_bytes.data() + 16;
    for (std::uint64_t i = 0; i < count; ++i)
        for (std::uint64_t j = 0; j < pixels; ++j)
            out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                static_cast<double>(src[i * pixels + j]) / 255.0;
    out.labels.resize(count);
    int max_label = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
        out.labels[i] = label_bytes[8 + i];
        max_label = std::max(max_label, out.labels[i]);
    }
    out.class_count = max_label + 1;
    out.provenance = Provenance::idx;
    out.image_shape = ImageShape{rows, cols};
    return out;
}

LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto images = read_file(images_path);
    const auto labels = read_file(labels_path);
    return decode_idx(images, labels);
}

std::vector<std::uint8_t> encode_idx_images(std::span<const std::uint8_t> pixels, std::size_t count,
                                            std::size_t rows, std::size_t cols) {
    if (pixels.size() != count * rows * cols) throw ShapeError("pixel buffer does not match count*rows*cols");
    std::vector<std::uint8_t> out;
    out.reserve(16 + pixels.size());
    write_be32(out, kImageMagic);
    write_be32(out, static_cast<std::uint32_t>(count));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.size());
    write_be32(out, kLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

MinMax fit_min_max(const LabeledDataset& dataset) {
    if (dataset.features.size() == 0) throw DataError("cannot normalize an empty dataset");
    return {dataset.features.minCoeff(), dataset.features.maxCoeff()};
}

LabeledDataset apply_min_max(const LabeledDataset& dataset, const MinMax& range) {
    LabeledDataset out = dataset;
    const double span = range.max - range.min;
    if (span > 0.0)
        out.features = ((dataset.features.array() - range.min) / span).matrix();
    else
        out.features.setZero();
    return out;
}

LabeledDataset normalize(const LabeledDataset& dataset) {
    return apply_min_max(dataset, fit_min_max(dataset));
}

Splits split(const LabeledDataset& dataset, const SplitSpec& spec) {
    for (const double f : {spec.train, spec.validation, spec.test})
        if (!(f > 0.0 && f < 1.0)) throw ConfigError("split fractions must lie in (0,1)");
    if (std::abs(spec.train + spec.validation + spec.test - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");
    const std::size_t m = dataset.size();
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(m)));
    const auto n_val = static_cast<std::size_t>(std::llround(spec.validation * static_cast<double>(m)));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= m)
        throw ConfigError("a split would receive zero samples (m=" + std::to_string(m) + ")");

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(spec.seed, stream::split));
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::span<const std::size_t> all(perm);
    return {select_rows(dataset, all.subspan(0, n_train)),
            select_rows(dataset, all.subspan(n_train, n_val)),
            select_rows(dataset, all.subspan(n_train + n_val))};
}

LabeledDataset subset(const LabeledDataset& dataset, std::size_t count, std::uint64_t seed) {
    if (count == 0 || count > dataset.size())
        throw ConfigError("subset size " + std::to_string(count) + " outside [1, " + std::to_string(dataset.size()) + "]");
    std::vector<std::size_t> perm(dataset.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, stream::split));
    std::shuffle(perm.begin(), perm.end(), rng);
    perm.resize(count);
    return select_rows(dataset, perm);
}

double mean_feature(const LabeledDataset& dataset) {
    if (dataset.features.size() == 0) throw DataError("empty dataset has no mean");
    return dataset.features.mean();
}

double second_moment_feature(const LabeledDataset& dataset) {
    if (dataset.features.size() == 0) throw DataError("empty dataset has no second moment");
    return dataset.features.array().square().mean();
}

double feature_variance(const LabeledDataset& dataset) {
    const double mu = mean_feature(dataset);
    return (dataset.features.array() - mu).square().mean();
}

} // namespace fnb::data
