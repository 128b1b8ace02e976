#include "sgm/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "sgm/errors.hpp"

namespace sgm {

Tensor matvec(const Tensor& m, const Tensor& v) {
  if (m.rank() != 2 || v.rank() != 1 || m.shape()[1] != v.size()) {
    throw ShapeError("matvec: cannot multiply " + shape_string(m.shape()) + " by " +
                     shape_string(v.shape()));
  }
  const std::size_t rows = m.shape()[0], cols = m.shape()[1];
  Tensor out({rows});
  const double* data = m.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = data + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

std::vector<double> softmax_masked(std::span<const double> logits, std::span<const double> mask) {
  if (logits.size() != mask.size()) {
    throw ShapeError("softmax_masked: " + std::to_string(logits.size()) + " logits vs " +
                     std::to_string(mask.size()) + " mask entries");
  }
  double peak = kNegInf;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i] == kNegInf) continue;
    if (!std::isfinite(logits[i])) throw NumericError("non-finite logit at class " + std::to_string(i));
    peak = std::max(peak, logits[i] + mask[i]);
  }
  if (peak == kNegInf) throw NumericError("no unmasked label");
  std::vector<double> out(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i] == kNegInf) continue;
    out[i] = std::exp(logits[i] + mask[i] - peak);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

double cross_entropy(std::span<const double> probs, std::size_t target) {
  if (target >= probs.size()) {
    throw ShapeError("cross_entropy: target " + std::to_string(target) + " out of range for " +
                     std::to_string(probs.size()) + " classes");
  }
  if (!(probs[target] > 0.0)) throw NumericError("target label masked or zero-probability");
  return -std::log(probs[target]);
}

Tensor dropout_mask(const Shape& shape, double rate, RngStream& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
  Tensor mask(shape);
  const double keep = 1.0 / (1.0 - rate);
  for (double& x : mask.values()) x = rng.uniform() < rate ? 0.0 : keep;
  return mask;
}

Tensor dropout(const Tensor& x, double rate, Phase phase, RngStream& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
  if (phase == Phase::eval || rate == 0.0) return x;
  Tensor mask = dropout_mask(x.shape(), rate, rng);
  for (std::size_t i = 0; i < x.size(); ++i) mask[i] *= x[i];
  return mask;
}

LstmState lstm_cell_step(Tape& tape, const LstmWeights& w, Var input, const LstmState& state) {
  const Tensor& W = tape.value(w.weights);
  const std::size_t hidden = tape.value(state.hidden).size();
  const std::size_t in = tape.value(input).size();
  if (W.rank() != 2 || W.rows() != 4 * hidden || W.cols() != in + hidden ||
      tape.value(w.bias).size() != 4 * hidden || tape.value(state.cell).size() != hidden) {
    throw ShapeError("lstm_cell_step: weights " + shape_string(W.shape()) + " bias " +
                     shape_string(tape.value(w.bias).shape()) + " incompatible with input " +
                     std::to_string(in) + " and hidden " + std::to_string(hidden));
  }
  const Var xh[] = {input, state.hidden};
  Var pre = tape.add(tape.matvec(w.weights, tape.concat(xh)), w.bias);
  Var i = tape.sigmoid(tape.slice(pre, 0, hidden));
  Var f = tape.sigmoid(tape.slice(pre, hidden, hidden));
  Var g = tape.tanh(tape.slice(pre, 2 * hidden, hidden));
  Var o = tape.sigmoid(tape.slice(pre, 3 * hidden, hidden));
  Var c = tape.add(tape.mul(f, state.cell), tape.mul(i, g));
  Var h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

LstmTensors lstm_cell_step(const Tensor& weights, const Tensor& bias, const Tensor& input,
                           const LstmTensors& state) {
  Tape tape(false);
  LstmWeights w{tape.constant(weights), tape.constant(bias)};
  LstmState s{tape.constant(state.hidden), tape.constant(state.cell)};
  LstmState next = lstm_cell_step(tape, w, tape.constant(input), s);
  return {tape.value(next.hidden), tape.value(next.cell)};
}

double global_grad_norm(const ParameterStore& store) {
  double sq = 0.0;
  for (const Parameter& p : store) {
    for (double g : p.grad.values()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_gradients(ParameterStore& store, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip max-norm must be positive");
  for (const Parameter& p : store) {
    if (!p.grad.all_finite()) throw NumericError("non-finite gradient in parameter '" + p.name + "'");
  }
  const double norm = global_grad_norm(store);
  // Rescaled gradients can land a few ulps above max_norm; treating those as
  // within bounds keeps a second clip a no-op.
  if (norm <= max_norm * (1.0 + 1e-12)) return 1.0;
  const double factor = max_norm / norm;
  for (Parameter& p : store) {
    for (double& g : p.grad.values()) g *= factor;
  }
  return factor;
}

void AdamConfig::validate() const {
  // A zero learning rate is accepted and leaves parameters untouched.
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be a finite non-negative number");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

void adam_step(ParameterStore& store, const AdamConfig& config) {
  config.validate();
  store.advance_step();
  const double t = static_cast<double>(store.step());
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (Parameter& p : store) {
    auto value = p.value.values();
    auto grad = p.grad.values();
    auto m = p.first_moment.values();
    auto v = p.second_moment.values();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

GradCheckReport finite_difference_check(ParameterStore& store, const std::function<double()>& loss,
                                        double epsilon, std::size_t samples, RngStream& rng) {
  if (!(epsilon > 0.0)) throw ConfigError("finite-difference epsilon must be positive");
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  if (samples == 0) {
    for (std::size_t p = 0; p < store.size(); ++p)
      for (std::size_t i = 0; i < store[p].value.size(); ++i) coords.emplace_back(p, i);
  } else {
    const std::size_t total = store.parameter_count();
    if (total == 0) throw UsageError("finite_difference_check on an empty parameter store");
    for (std::size_t s = 0; s < samples; ++s) {
      std::size_t flat = static_cast<std::size_t>(rng.below(total));
      std::size_t p = 0;
      while (flat >= store[p].value.size()) flat -= store[p].value.size(), ++p;
      coords.emplace_back(p, flat);
    }
  }

  GradCheckReport report;
  for (auto [p, i] : coords) {
    Parameter& param = store[p];
    const double analytic = param.grad[i];
    const double saved = param.value[i];
    param.value[i] = saved + epsilon;
    const double up = loss();
    param.value[i] = saved - epsilon;
    const double down = loss();
    param.value[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      report.failure = "non-finite loss probing " + param.name + "[" + std::to_string(i) + "]";
      return report;
    }
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err = std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic));
    ++report.coordinates_checked;
    if (err > report.max_relative_error || report.coordinates_checked == 1) {
      report.max_relative_error = std::max(err, report.max_relative_error);
      report.worst_parameter = param.name;
      report.worst_index = i;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace sgm
