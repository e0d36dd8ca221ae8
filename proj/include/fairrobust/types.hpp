#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fairrobust {

using Index = Eigen::Index;
using VectorXd = Eigen::VectorXd;
using VectorXi = Eigen::VectorXi;
using MatrixXd = Eigen::MatrixXd;
using Seed = std::uint64_t;

// Error categories map one-to-one onto CLI exit codes (2, 3, 4).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A metric whose conditioning cell is empty.
class UndefinedMetric : public DataError {
public:
    using DataError::DataError;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fairrobust
