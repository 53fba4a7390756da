#pragma once

#include "pdettc/core/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pdettc::nn {

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;  // first moment
  Matrix v;  // second moment
};

/// Per-parameter gradient buffers in ParamStore order.
using Gradients = std::vector<Matrix>;

/// Named trainable tensors with gradient and AdamW state.
class ParamStore {
 public:
  int add(std::string name, Matrix init);
  /// Index of `name`, or -1.
  int find(std::string_view name) const;

  Param& operator[](int id) { return params_[static_cast<std::size_t>(id)]; }
  const Param& operator[](int id) const { return params_[static_cast<std::size_t>(id)]; }
  const Matrix& value(int id) const { return params_[static_cast<std::size_t>(id)].value; }

  int size() const { return static_cast<int>(params_.size()); }
  std::size_t parameter_count() const;
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  Gradients zero_gradients() const;
  void zero_grad();
  /// grad += scale * g for every parameter.
  void accumulate(const Gradients& g, double scale = 1.0);

  /// Copies parameter values only (no optimizer state).
  std::vector<Matrix> values() const;
  void set_values(const std::vector<Matrix>& values);

  std::int64_t step = 0;

 private:
  std::vector<Param> params_;
};

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Decoupled weight decay then bias-corrected Adam update. Increments
/// store.step. A non-finite gradient aborts before any parameter changes
/// and the NumericalError names the parameter.
void adamw_step(ParamStore& store, const AdamWConfig& cfg);

}  // namespace pdettc::nn
