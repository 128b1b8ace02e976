#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "sgm/parameters.hpp"
#include "sgm/tensor.hpp"

namespace sgm {

class RngStream;

enum class Phase { train, eval };

// Handle to a node recorded on a Tape.
struct Var {
  static constexpr std::uint32_t kInvalid = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

// Reverse-mode tape. Every operation appends a node holding its forward
// value and, when gradients are enabled, a closure that pushes the node's
// gradient into its inputs. Parameter leaves alias the ParameterStore:
// their values are read in place and `backward` accumulates straight into
// the store's gradient buffers.
//
// A Tape is single-use and single-threaded. It is neither copyable nor
// movable because recorded closures refer back to it by index.
class Tape {
 public:
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

  Var constant(Tensor value);
  Var scalar(double value) { return constant(Tensor::vector({value})); }
  // Leaf bound to store[index]; repeated calls return the same Var.
  Var param(ParameterStore& store, std::size_t index);
  Var param(ParameterStore& store, std::string_view name);

  const Tensor& value(Var v) const;
  double scalar_value(Var v) const;

  // Gradient of the last backward pass for a non-parameter node (zeros if
  // the node received none). Parameter gradients live in the store.
  Tensor grad(Var v) const;

  // Seeds d(loss)/d(loss) = seed and propagates to every node. `loss` must
  // be a scalar node of this tape and the tape must record gradients.
  void backward(Var loss, double seed = 1.0);

  // ---- operations ----
  Var matvec(Var m, Var v);             // M v
  Var matvec_transposed(Var m, Var v);  // M^T v
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double factor);
  Var one_minus(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var concat(std::span<const Var> parts);
  Var slice(Var a, std::size_t offset, std::size_t length);
  Var row(Var m, std::size_t index);
  Var stack_rows(std::span<const Var> rows);
  Var add_to_rows(Var m, Var v);  // broadcast v over every row of m
  Var sum(Var a);
  // Softmax of `logits + mask`, mask entries 0 or -inf.
  Var softmax_masked(Var logits, std::span<const double> mask);
  Var softmax(Var logits);
  // -ln p[target] for a probability vector p.
  Var neg_log_prob(Var probs, std::size_t target);
  // Multiplies by a constant elementwise tensor (dropout masks, fixed gates).
  Var mul_constant(Var a, const Tensor& factor);
  // Inverted dropout; identity in eval mode or when rate is 0.
  Var dropout(Var a, double rate, Phase phase, RngStream* rng);

 private:
  struct Node {
    Tensor value;
    const Tensor* external_value = nullptr;
    Tensor* external_grad = nullptr;
    std::vector<double> grad;
    std::function<void(Tape&, const Node&)> backward;
    std::vector<std::uint32_t> inputs;
  };

  const Tensor& val(std::uint32_t id) const;
  std::span<double> grad_buffer(std::uint32_t id);
  Var push(Tensor value, std::vector<std::uint32_t> inputs,
           std::function<void(Tape&, const Node&)> backward);
  void check(Var v) const;
  std::span<const double> node_grad(const Node& n) const;

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
};

}  // namespace sgm
