#include "pdettc/nn/params.hpp"

#include <cmath>

namespace pdettc::nn {

int ParamStore::add(std::string name, Matrix init) {
  if (find(name) >= 0) throw ConfigError("duplicate parameter name " + name);
  Param p;
  p.name = std::move(name);
  p.grad = Matrix::Zero(init.rows(), init.cols());
  p.m = Matrix::Zero(init.rows(), init.cols());
  p.v = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  params_.push_back(std::move(p));
  return size() - 1;
}

int ParamStore::find(std::string_view name) const {
  for (int i = 0; i < size(); ++i)
    if (params_[i].name == name) return i;
  return -1;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

Gradients ParamStore::zero_gradients() const {
  Gradients g;
  g.reserve(params_.size());
  for (const auto& p : params_) g.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  return g;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

void ParamStore::accumulate(const Gradients& g, double scale) {
  if (g.size() != params_.size()) throw ConfigError("gradient count does not match parameters");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i].grad += scale * g[i];
}

std::vector<Matrix> ParamStore::values() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParamStore::set_values(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw ConfigError("value count does not match parameters");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (values[i].rows() != params_[i].value.rows() || values[i].cols() != params_[i].value.cols())
      throw ConfigError("shape mismatch restoring " + params_[i].name);
    params_[i].value = values[i];
  }
}

void adamw_step(ParamStore& store, const AdamWConfig& cfg) {
  for (const auto& p : store)
    if (!p.grad.allFinite()) throw NumericalError("non-finite gradient in parameter " + p.name);

  store.step += 1;
  const double t = static_cast<double>(store.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& p : store) {
    p.value *= 1.0 - cfg.lr * cfg.weight_decay;
    p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * p.grad;
    p.v = cfg.beta2 * p.v + (1.0 - cfg.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= cfg.lr * (p.m.array() / bc1) / ((p.v.array() / bc2).sqrt() + cfg.eps);
  }
}

}  // namespace pdettc::nn
