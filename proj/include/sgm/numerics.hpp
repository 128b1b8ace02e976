#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgm/autodiff.hpp"
#include "sgm/parameters.hpp"
#include "sgm/rng.hpp"
#include "sgm/tensor.hpp"

namespace sgm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Tensor matvec(const Tensor& m, const Tensor& v);

// Softmax over logits + mask (mask entries 0 or -inf), max-subtracted.
// Masked positions get exactly 0. Throws NumericError("no unmasked label")
// when every position is masked.
std::vector<double> softmax_masked(std::span<const double> logits, std::span<const double> mask);

// -ln p[target].
double cross_entropy(std::span<const double> probs, std::size_t target);

// Inverted dropout keep-mask: entries are 0 or 1/(1-rate).
Tensor dropout_mask(const Shape& shape, double rate, RngStream& rng);
Tensor dropout(const Tensor& x, double rate, Phase phase, RngStream& rng);

// ---- LSTM ----

// Weights of one LSTM cell. `weights` is (4*hidden) x (input + hidden) acting
// on [x; h_prev]; `bias` has 4*hidden entries. Gate blocks are stacked in
// the order input, forget, candidate, output.
struct LstmWeights {
  Var weights;
  Var bias;
};

struct LstmState {
  Var hidden;
  Var cell;
};

LstmState lstm_cell_step(Tape& tape, const LstmWeights& w, Var input, const LstmState& state);

// Tensor-level convenience for a single step.
struct LstmTensors {
  Tensor hidden;
  Tensor cell;
};
LstmTensors lstm_cell_step(const Tensor& weights, const Tensor& bias, const Tensor& input,
                           const LstmTensors& state);

// ---- optimisation ----

double global_grad_norm(const ParameterStore& store);

// Rescales all gradients so their global L2 norm is at most max_norm and
// returns the factor applied (1 when already within bounds).
double clip_gradients(ParameterStore& store, double max_norm);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// One bias-corrected Adam update over every parameter; advances the step counter.
void adam_step(ParameterStore& store, const AdamConfig& config);

// ---- gradient checking ----

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  // Set when the loss turned non-finite at a probe point.
  std::optional<std::string> failure;

  bool passed(double tolerance) const { return !failure && max_relative_error < tolerance; }
};

// Compares the analytic gradients already stored in `store` against central
// differences of `loss`. `samples` == 0 checks every coordinate, otherwise
// that many coordinates drawn uniformly (with replacement) from `rng`.
// Relative error is |analytic - numeric| / max(1e-8, |analytic|).
GradCheckReport finite_difference_check(ParameterStore& store, const std::function<double()>& loss,
                                        double epsilon, std::size_t samples, RngStream& rng);

}  // namespace sgm
