#include "uniclip/param_store.hpp"

#include <cmath>

#include "uniclip/errors.hpp"

namespace uniclip {

ParamId ParamStore::add(const std::string& name, DenseMatrix init, bool decay) {
  if (index_.contains(name)) throw ContractError("ParamStore: duplicate parameter '" + name + "'");
  const ParamId id = entries_.size();
  const auto rows = init.rows();
  const auto cols = init.cols();
  entries_.push_back(Entry{name, std::move(init), DenseMatrix(rows, cols), DenseMatrix(rows, cols), decay});
  index_.emplace(name, id);
  return id;
}

ParamId ParamStore::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

bool ParamStore::contains(const std::string& name) const { return index_.contains(name); }

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::vector<double> ParamStore::flatten() const {
  std::vector<double> flat;
  flat.reserve(scalar_count());
  for (const auto& e : entries_) flat.insert(flat.end(), e.value.values().begin(), e.value.values().end());
  return flat;
}

void ParamStore::unflatten(const std::vector<double>& flat) {
  if (flat.size() != scalar_count()) throw ShapeError("ParamStore::unflatten: length mismatch");
  std::size_t k = 0;
  for (auto& e : entries_) {
    for (auto& v : e.value.values()) v = flat[k++];
  }
}

Gradients Gradients::zeros_like(const ParamStore& store) {
  Gradients g;
  for (const auto& e : store.entries()) g.grads_.emplace(e.name, DenseMatrix(e.value.rows(), e.value.cols()));
  return g;
}

void Gradients::accumulate(const std::string& name, const DenseMatrix& g) {
  auto it = grads_.find(name);
  if (it == grads_.end()) {
    grads_.emplace(name, g);
  } else {
    it->second += g;
  }
}

DenseMatrix& Gradients::slot(const std::string& name, std::size_t rows, std::size_t cols) {
  auto it = grads_.find(name);
  if (it == grads_.end()) it = grads_.emplace(name, DenseMatrix(rows, cols)).first;
  if (it->second.rows() != rows || it->second.cols() != cols) {
    throw ShapeError("Gradients::slot: '" + name + "' is " + it->second.shape_string());
  }
  return it->second;
}

const DenseMatrix& Gradients::at(const std::string& name) const {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw ContractError("Gradients: missing gradient for '" + name + "'");
  return it->second;
}

DenseMatrix& Gradients::at(const std::string& name) {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw ContractError("Gradients: missing gradient for '" + name + "'");
  return it->second;
}

bool Gradients::all_finite() const noexcept {
  for (const auto& [_, g] : grads_) {
    if (!g.all_finite()) return false;
  }
  return true;
}

std::vector<double> Gradients::flatten(const ParamStore& order) const {
  std::vector<double> flat;
  flat.reserve(order.scalar_count());
  for (const auto& e : order.entries()) {
    if (!contains(e.name)) {
      flat.insert(flat.end(), e.value.size(), 0.0);
      continue;
    }
    const auto& g = at(e.name);
    flat.insert(flat.end(), g.values().begin(), g.values().end());
  }
  return flat;
}

void adamw_step(ParamStore& params, const Gradients& grads, const AdamWConfig& cfg) {
  for (const auto& e : params.entries_) {
    const auto& g = grads.at(e.name);
    require_same_shape(e.value, g, ("adamw_step '" + e.name + "'").c_str());
  }
  params.step_ += 1;
  const double t = static_cast<double>(params.step_);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& e : params.entries_) {
    const auto g = grads.at(e.name).values();
    auto p = e.value.values();
    auto m = e.first_moment.values();
    auto v = e.second_moment.values();
    const double decay = e.decay ? cfg.lr * cfg.weight_decay : 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] -= decay * p[k];
      p[k] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

}  // namespace uniclip
