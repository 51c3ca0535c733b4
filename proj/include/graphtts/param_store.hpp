#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "graphtts/tensor.hpp"

namespace graphtts {

struct Parameter {
  Tensor value;
  Tensor grad;
};

/// Named learnable arrays with a same-shaped gradient per entry.
/// Iteration order is lexicographic by name.
class ParamStore {
 public:
  using Map = std::map<std::string, Parameter>;

  Parameter& add(const std::string& name, Tensor init);
  /// uniform(-scale, scale) draws from `rng`.
  Parameter& add_uniform(const std::string& name, Shape shape, double scale, std::mt19937_64& rng);
  Parameter& add_zeros(const std::string& name, Shape shape);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  Tensor& value(const std::string& name) { return at(name).value; }
  const Tensor& value(const std::string& name) const { return at(name).value; }
  Tensor& grad(const std::string& name) { return at(name).grad; }

  void zero_grad();
  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }
  std::size_t numel() const;

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }

  /// Values equal name-for-name; gradients are ignored.
  bool same_values(const ParamStore& other) const;

 private:
  Map params_;
};

}  // namespace graphtts
