#include "sgm/parameters.hpp"

#include "sgm/errors.hpp"
#include "sgm/rng.hpp"

namespace sgm {

std::size_t ParameterStore::add(std::string name, Tensor value) {
  if (contains(name)) throw UsageError("duplicate parameter '" + name + "'");
  Parameter p;
  p.name = name;
  p.grad = Tensor(value.shape());
  p.first_moment = Tensor(value.shape());
  p.second_moment = Tensor(value.shape());
  p.value = std::move(value);
  params_.push_back(std::move(p));
  index_.emplace(std::move(name), params_.size() - 1);
  return params_.size() - 1;
}

std::size_t ParameterStore::add_uniform(std::string name, Shape shape, double scale,
                                        RngStream& rng) {
  Tensor t(std::move(shape));
  for (double& x : t.values()) x = rng.uniform(-scale, scale);
  return add(std::move(name), std::move(t));
}

bool ParameterStore::contains(std::string_view name) const {
  return index_.find(name) != index_.end();
}

std::size_t ParameterStore::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterStore::assign_from(const ParameterStore& other) {
  if (other.size() != size()) throw ShapeError("parameter stores differ in size");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Parameter& src = other[i];
    Parameter& dst = params_[i];
    if (src.name != dst.name || src.value.shape() != dst.value.shape()) {
      throw ShapeError("parameter mismatch: '" + dst.name + "' " +
                       shape_string(dst.value.shape()) + " vs '" + src.name + "' " +
                       shape_string(src.value.shape()));
    }
    dst.value = src.value;
    dst.first_moment = src.first_moment;
    dst.second_moment = src.second_moment;
  }
  step_ = other.step_;
}

}  // namespace sgm
