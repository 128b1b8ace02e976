#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sgm/tensor.hpp"

namespace sgm {

class RngStream;

// One trainable tensor with its gradient and Adam moment buffers.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor first_moment;
  Tensor second_moment;
};

// Named parameters in insertion order. Gradients always share the shape of
// their parameter; the Adam step counter only moves through `advance_step`.
class ParameterStore {
 public:
  std::size_t add(std::string name, Tensor value);
  // Adds a parameter initialised uniformly in [-scale, scale].
  std::size_t add_uniform(std::string name, Shape shape, double scale, RngStream& rng);

  std::size_t size() const { return params_.size(); }
  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& at(std::string_view name) { return params_[index_of(name)]; }
  const Parameter& at(std::string_view name) const { return params_[index_of(name)]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t step) { step_ = step; }
  void advance_step() { ++step_; }

  void zero_grad();
  std::size_t parameter_count() const;

  // Copies values (and optimizer state) from `other`, which must have the
  // same names and shapes.
  void assign_from(const ParameterStore& other);

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::uint64_t step_ = 0;
};

}  // namespace sgm
