#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "fnbound/core_nn.hpp"
#include "fnbound/datasets.hpp"

namespace test {

inline std::filesystem::path source_dir() { return FNBOUND_TEST_DIR; }

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_text(const std::filesystem::path& p) {
    auto b = read_bytes(p);
    return {b.begin(), b.end()};
}

// |a - b| relative to their magnitude, with an absolute floor so that
// near-zero derivatives compare on an absolute scale.
inline double rel_err(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max(floor, std::abs(a) + std::abs(b));
}

inline fnb::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    fnb::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = n(rng);
    return m;
}

inline fnb::data::LabeledDataset two_class_gmm(std::uint64_t seed, std::size_t per_class = 500) {
    return fnb::data::generate_gmm(
        {.means = fnb::data::spread_means(2, 10, 2.0), .variance = 1.0, .samples_per_class = per_class, .seed = seed});
}

} // namespace test
