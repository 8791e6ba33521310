#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uniclip/dense.hpp"

namespace uniclip {

using ParamId = std::size_t;

class Gradients;
struct AdamWConfig;

/// Named trainable tensors plus their AdamW moment accumulators.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    DenseMatrix value;
    DenseMatrix first_moment;
    DenseMatrix second_moment;
    bool decay = true;  // subject to decoupled weight decay
  };

  /// Registers a parameter; names are unique.
  ParamId add(const std::string& name, DenseMatrix init, bool decay = true);

  [[nodiscard]] ParamId id(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const;

  DenseMatrix& value(ParamId id) { return entries_.at(id).value; }
  [[nodiscard]] const DenseMatrix& value(ParamId id) const { return entries_.at(id).value; }
  DenseMatrix& value(const std::string& name) { return value(id(name)); }
  [[nodiscard]] const DenseMatrix& value(const std::string& name) const { return value(id(name)); }

  [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<Entry>& entries() noexcept { return entries_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] std::uint64_t step() const noexcept { return step_; }

  /// Total scalar count across all parameters.
  [[nodiscard]] std::size_t scalar_count() const noexcept;
  /// Concatenation of all parameter values in registration order.
  [[nodiscard]] std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

 private:
  friend void adamw_step(ParamStore&, const Gradients&, const AdamWConfig&);

  std::vector<Entry> entries_;
  std::map<std::string, ParamId> index_;
  std::uint64_t step_ = 0;
};

/// Gradient accumulators keyed by parameter name.
class Gradients {
 public:
  Gradients() = default;
  /// Zero gradients shaped like every parameter in the store.
  static Gradients zeros_like(const ParamStore& store);

  /// Adds `g` into the slot `name`, creating it when absent.
  void accumulate(const std::string& name, const DenseMatrix& g);
  DenseMatrix& slot(const std::string& name, std::size_t rows, std::size_t cols);

  [[nodiscard]] bool contains(const std::string& name) const { return grads_.contains(name); }
  [[nodiscard]] const DenseMatrix& at(const std::string& name) const;
  DenseMatrix& at(const std::string& name);
  void erase(const std::string& name) { grads_.erase(name); }
  [[nodiscard]] const std::map<std::string, DenseMatrix>& items() const noexcept { return grads_; }

  [[nodiscard]] bool all_finite() const noexcept;
  [[nodiscard]] std::vector<double> flatten(const ParamStore& order) const;

 private:
  std::map<std::string, DenseMatrix> grads_;
};

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Decoupled-weight-decay Adam with bias correction. Every parameter must have a gradient.
void adamw_step(ParamStore& params, const Gradients& grads, const AdamWConfig& cfg);

}  // namespace uniclip
