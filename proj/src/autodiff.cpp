#include "sgm/autodiff.hpp"

#include <cmath>

#include "sgm/errors.hpp"
#include "sgm/numerics.hpp"

namespace sgm {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_vector(const Tensor& a, const char* op) {
  if (a.rank() != 1) {
    throw ShapeError(std::string(op) + ": expected a vector, got " + shape_string(a.shape()));
  }
}

}  // namespace

void Tape::check(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw UsageError("variable does not belong to this tape");
}

const Tensor& Tape::val(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external_value ? *n.external_value : n.value;
}

const Tensor& Tape::value(Var v) const {
  check(v);
  return val(v.id);
}

double Tape::scalar_value(Var v) const {
  const Tensor& t = value(v);
  if (t.size() != 1) throw ShapeError("expected a scalar, got " + shape_string(t.shape()));
  return t[0];
}

std::span<double> Tape::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.external_grad) return n.external_grad->values();
  if (n.grad.empty()) n.grad.assign(val(id).size(), 0.0);
  return n.grad;
}

std::span<const double> Tape::node_grad(const Node& n) const {
  if (n.external_grad) return n.external_grad->values();
  return n.grad;
}

Tensor Tape::grad(Var v) const {
  check(v);
  const Node& n = nodes_[v.id];
  Tensor out(val(v.id).shape());
  if (n.external_grad) return *n.external_grad;
  if (!n.grad.empty()) out.raw() = n.grad;
  return out;
}

Var Tape::push(Tensor value, std::vector<std::uint32_t> inputs,
               std::function<void(Tape&, const Node&)> backward) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) {
  return push(std::move(value), {}, nullptr);
}

Var Tape::param(ParameterStore& store, std::size_t index) {
  Parameter& p = store[index];
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{it->second};
  Node n;
  n.external_value = &p.value;
  if (record_) n.external_grad = &p.grad;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var{id};
}

Var Tape::param(ParameterStore& store, std::string_view name) {
  return param(store, store.index_of(name));
}

void Tape::backward(Var loss, double seed) {
  if (!record_) throw UsageError("backward on a tape that does not record gradients");
  if (nodes_.empty()) throw UsageError("backward called before any forward computation");
  check(loss);
  if (val(loss.id).size() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + shape_string(val(loss.id).shape()));
  }
  grad_buffer(loss.id)[0] += seed;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.backward) continue;
    if (n.grad.empty()) continue;  // never reached from the loss
    n.backward(*this, n);
  }
}

// ---------------------------------------------------------------------------

Var Tape::matvec(Var m, Var v) {
  check(m);
  check(v);
  const Tensor& M = val(m.id);
  const Tensor& x = val(v.id);
  Tensor out = sgm::matvec(M, x);
  return push(std::move(out), {m.id, v.id}, [m, v](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    const Tensor& M = t.val(m.id);
    const Tensor& x = t.val(v.id);
    const std::size_t rows = M.rows(), cols = M.cols();
    auto gm = t.grad_buffer(m.id);
    for (std::size_t r = 0; r < rows; ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      double* row = gm.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
    }
    auto gv = t.grad_buffer(v.id);
    for (std::size_t r = 0; r < rows; ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      const double* row = M.values().data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) gv[c] += row[c] * gr;
    }
  });
}

Var Tape::matvec_transposed(Var m, Var v) {
  check(m);
  check(v);
  const Tensor& M = val(m.id);
  const Tensor& x = val(v.id);
  require_vector(x, "matvec_transposed");
  if (M.rows() != x.size()) {
    throw ShapeError("matvec_transposed: " + shape_string(M.shape()) + "^T times " +
                     shape_string(x.shape()));
  }
  const std::size_t rows = M.rows(), cols = M.cols();
  Tensor out({cols});
  for (std::size_t r = 0; r < rows; ++r) {
    const double xr = x[r];
    const double* row = M.values().data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * xr;
  }
  return push(std::move(out), {m.id, v.id}, [m, v](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    const Tensor& M = t.val(m.id);
    const Tensor& x = t.val(v.id);
    const std::size_t rows = M.rows(), cols = M.cols();
    auto gm = t.grad_buffer(m.id);
    for (std::size_t r = 0; r < rows; ++r) {
      double* row = gm.data() + r * cols;
      const double xr = x[r];
      for (std::size_t c = 0; c < cols; ++c) row[c] += xr * g[c];
    }
    auto gv = t.grad_buffer(v.id);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = M.values().data() + r * cols;
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c) acc += row[c] * g[c];
      gv[r] += acc;
    }
  });
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& x = val(a.id);
  const Tensor& y = val(b.id);
  require_same_shape(x, y, "add");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return push(std::move(out), {a.id, b.id}, [a, b](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    auto ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto gb = t.grad_buffer(b.id);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
  });
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& x = val(a.id);
  const Tensor& y = val(b.id);
  require_same_shape(x, y, "sub");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  return push(std::move(out), {a.id, b.id}, [a, b](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    auto ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto gb = t.grad_buffer(b.id);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
  });
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& x = val(a.id);
  const Tensor& y = val(b.id);
  require_same_shape(x, y, "mul");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  return push(std::move(out), {a.id, b.id}, [a, b](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    const Tensor& x = t.val(a.id);
    const Tensor& y = t.val(b.id);
    auto ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    auto gb = t.grad_buffer(b.id);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
  });
}

Var Tape::mul_constant(Var a, const Tensor& factor) {
  check(a);
  const Tensor& x = val(a.id);
  require_same_shape(x, factor, "mul_constant");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor[i];
  return push(std::move(out), {a.id}, [a, factor](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    auto ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor[i];
  });
}

Var Tape::scale(Var a, double factor) {
  check(a);
  Tensor out = val(a.id);
  for (double& x : out.values()) x *= factor;
  return push(std::move(out), {a.id}, [a, factor](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    auto ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

Var Tape::one_minus(Var a) {
  check(a);
  Tensor out = val(a.id);
  for (double& x : out.values()) x = 1.0 - x;
  return push(std::move(out), {a.id}, [a](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    auto ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
  });
}

Var Tape::sigmoid(Var a) {
  check(a);
  Tensor out = val(a.id);
  for (double& x : out.values()) x = 1.0 / (1.0 + std::exp(-x));
  return push(std::move(out), {a.id}, [a](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    const Tensor& y = self.value;
    auto ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::tanh(Var a) {
  check(a);
  Tensor out = val(a.id);
  for (double& x : out.values()) x = std::tanh(x);
  return push(std::move(out), {a.id}, [a](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    const Tensor& y = self.value;
    auto ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat of zero vectors");
  std::vector<double> out;
  std::vector<std::uint32_t> ids;
  for (Var p : parts) {
    check(p);
    const Tensor& x = val(p.id);
    require_vector(x, "concat");
    out.insert(out.end(), x.values().begin(), x.values().end());
    ids.push_back(p.id);
  }
  return push(Tensor::vector(std::move(out)), ids, [ids](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    std::size_t offset = 0;
    for (std::uint32_t id : ids) {
      auto gi = t.grad_buffer(id);
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[offset + i];
      offset += gi.size();
    }
  });
}

Var Tape::slice(Var a, std::size_t offset, std::size_t length) {
  check(a);
  const Tensor& x = val(a.id);
  require_vector(x, "slice");
  if (length == 0 || offset + length > x.size()) {
    throw ShapeError("slice [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                     ") out of range for " + shape_string(x.shape()));
  }
  std::vector<double> out(x.values().begin() + static_cast<std::ptrdiff_t>(offset),
                          x.values().begin() + static_cast<std::ptrdiff_t>(offset + length));
  return push(Tensor::vector(std::move(out)), {a.id}, [a, offset](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    auto ga = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
  });
}

Var Tape::row(Var m, std::size_t index) {
  check(m);
  const Tensor& M = val(m.id);
  if (index >= M.rows()) {
    throw ShapeError("row " + std::to_string(index) + " out of range for " +
                     shape_string(M.shape()));
  }
  const std::size_t cols = M.cols();
  std::vector<double> out(M.values().begin() + static_cast<std::ptrdiff_t>(index * cols),
                          M.values().begin() + static_cast<std::ptrdiff_t>((index + 1) * cols));
  return push(Tensor::vector(std::move(out)), {m.id}, [m, index](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    auto gm = t.grad_buffer(m.id);
    const std::size_t base = index * g.size();
    for (std::size_t c = 0; c < g.size(); ++c) gm[base + c] += g[c];
  });
}

Var Tape::stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows of zero vectors");
  check(rows[0]);
  const std::size_t cols = val(rows[0].id).size();
  std::vector<double> out;
  out.reserve(rows.size() * cols);
  std::vector<std::uint32_t> ids;
  for (Var r : rows) {
    check(r);
    const Tensor& x = val(r.id);
    require_vector(x, "stack_rows");
    if (x.size() != cols) throw ShapeError("stack_rows: rows of unequal length");
    out.insert(out.end(), x.values().begin(), x.values().end());
    ids.push_back(r.id);
  }
  return push(Tensor::matrix(rows.size(), cols, std::move(out)), ids,
              [ids, cols](Tape& t, const Node& self) {
                auto g = t.node_grad(self);
                for (std::size_t r = 0; r < ids.size(); ++r) {
                  auto gr = t.grad_buffer(ids[r]);
                  for (std::size_t c = 0; c < cols; ++c) gr[c] += g[r * cols + c];
                }
              });
}

Var Tape::add_to_rows(Var m, Var v) {
  check(m);
  check(v);
  const Tensor& M = val(m.id);
  const Tensor& x = val(v.id);
  require_vector(x, "add_to_rows");
  if (M.cols() != x.size()) {
    throw ShapeError("add_to_rows: " + shape_string(M.shape()) + " + " + shape_string(x.shape()));
  }
  Tensor out = M;
  const std::size_t rows = M.rows(), cols = M.cols();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += x[c];
  return push(std::move(out), {m.id, v.id}, [m, v, rows, cols](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    auto gm = t.grad_buffer(m.id);
    for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
    auto gv = t.grad_buffer(v.id);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) gv[c] += g[r * cols + c];
  });
}

Var Tape::sum(Var a) {
  check(a);
  double s = 0.0;
  for (double x : val(a.id).values()) s += x;
  return push(Tensor::vector({s}), {a.id}, [a](Tape& t, const Node& self) {
    const double g = t.node_grad(self)[0];
    for (double& x : t.grad_buffer(a.id)) x += g;
  });
}

Var Tape::softmax_masked(Var logits, std::span<const double> mask) {
  check(logits);
  const Tensor& z = val(logits.id);
  require_vector(z, "softmax_masked");
  Tensor out = Tensor::vector(sgm::softmax_masked(z.values(), mask));
  return push(std::move(out), {logits.id}, [logits](Tape& t, const Node& self) {
    auto g = t.node_grad(self);
    const Tensor& y = self.value;
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
    auto gz = t.grad_buffer(logits.id);
    for (std::size_t i = 0; i < g.size(); ++i) gz[i] += y[i] * (g[i] - dot);
  });
}

Var Tape::softmax(Var logits) {
  check(logits);
  const std::vector<double> zeros(val(logits.id).size(), 0.0);
  return softmax_masked(logits, zeros);
}

Var Tape::neg_log_prob(Var probs, std::size_t target) {
  check(probs);
  const Tensor& p = val(probs.id);
  require_vector(p, "neg_log_prob");
  const double loss = cross_entropy(p.values(), target);
  return push(Tensor::vector({loss}), {probs.id}, [probs, target](Tape& t, const Node& self) {
    const double g = t.node_grad(self)[0];
    const double pt = t.val(probs.id)[target];
    t.grad_buffer(probs.id)[target] -= g / pt;
  });
}

Var Tape::dropout(Var a, double rate, Phase phase, RngStream* rng) {
  check(a);
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
  if (phase == Phase::eval || rate == 0.0) return a;
  if (!rng) throw UsageError("training-mode dropout needs a random stream");
  return mul_constant(a, dropout_mask(val(a.id).shape(), rate, *rng));
}

}  // namespace sgm
