#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fnb {

// Every failure raised by the library derives from Error. The CLI maps
// ConfigError/ShapeError/DataError/FormatError/DomainError to exit code 2
// and NumericError/TrainingError/EstimationError to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

// IDX / file parsing. `field` names the header field or section at fault.
class FormatError : public Error {
public:
    FormatError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Arguments outside the mathematical domain of a formula.
class DomainError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    NumericError(std::size_t layer, const std::string& what)
        : Error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}
    std::size_t layer() const noexcept { return layer_; }

private:
    std::size_t layer_;
};

class TrainingError : public Error {
public:
    TrainingError(std::size_t epoch, const std::string& what)
        : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

// Statistical estimation that cannot proceed (too few runs, singular fit).
class EstimationError : public Error {
public:
    using Error::Error;
};

} // namespace fnb
