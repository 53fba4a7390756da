#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pdettc {

using Scalar = double;

template <typename S>
using MatrixT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VectorT = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using RowVectorT = Eigen::Matrix<S, 1, Eigen::Dynamic>;
template <typename S>
using FieldT = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic>;

using Matrix = MatrixT<Scalar>;
using Vector = VectorT<Scalar>;
using RowVector = RowVectorT<Scalar>;
/// Cell-centred scalar field, indexed (i, j) with i along x and j along y.
using Field = FieldT<Scalar>;

/// Invalid parameters, schemas or shapes detected before any compute.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Loss of positivity, non-finite values or diverging optimisation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A reward whose normalising denominator vanishes.
class UndefinedRewardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pdettc
