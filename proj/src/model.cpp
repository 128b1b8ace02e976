#include "sgm/model.hpp"

#include <algorithm>
#include <cmath>

#include "sgm/errors.hpp"
#include "sgm/rng.hpp"

namespace sgm {

std::string to_string(GlobalEmbeddingMode mode) {
  switch (mode) {
    case GlobalEmbeddingMode::off: return "off";
    case GlobalEmbeddingMode::gate: return "gate";
    case GlobalEmbeddingMode::fixed_lambda: return "lambda";
  }
  return "?";
}

GlobalEmbeddingMode parse_global_embedding_mode(std::string_view text) {
  if (text == "off") return GlobalEmbeddingMode::off;
  if (text == "gate") return GlobalEmbeddingMode::gate;
  if (text == "lambda") return GlobalEmbeddingMode::fixed_lambda;
  throw ConfigError("unknown global-embedding mode '" + std::string(text) +
                    "' (expected off, gate or lambda)");
}

void ModelConfig::validate() const {
  if (embedding_size < 1 || encoder_hidden < 1 || decoder_hidden < 1 || encoder_layers < 1 ||
      decoder_layers < 1) {
    throw ConfigError("model sizes and layer counts must be at least 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (ge_mode == GlobalEmbeddingMode::fixed_lambda && !(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("lambda must lie in [0, 1]");
  }
  if (!(init_scale > 0.0)) throw ConfigError("init scale must be positive");
}

// ---------------------------------------------------------------------------

AttentionResult attend(Tape& tape, Var decoder_hidden, const EncoderOutput& encoded, Var w_a,
                       Var v_a) {
  Var query = tape.matvec(w_a, decoder_hidden);
  Var scores = tape.matvec(tape.tanh(tape.add_to_rows(encoded.keys, query)), v_a);
  Var weights = tape.softmax(scores);
  Var context = tape.matvec_transposed(encoded.stacked, weights);
  return {weights, context};
}

std::size_t argmax_class(std::span<const double> distribution) {
  if (distribution.empty()) throw ShapeError("argmax of an empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < distribution.size(); ++i) {
    if (distribution[i] > distribution[best]) best = i;
  }
  return best;
}

Var gated_mix(Tape& tape, Var e, Var e_bar, Var w1, Var w2, std::optional<double> forced_gate) {
  Var gate;
  if (forced_gate) {
    gate = tape.constant(Tensor(tape.value(e).shape(), *forced_gate));
  } else {
    gate = tape.sigmoid(tape.add(tape.matvec(w1, e), tape.matvec(w2, e_bar)));
  }
  return tape.add(tape.mul(tape.one_minus(gate), e), tape.mul(gate, e_bar));
}

Var lambda_mix(Tape& tape, Var e, Var e_bar, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  return tape.add(tape.scale(e, 1.0 - lambda), tape.scale(e_bar, lambda));
}

Var global_embedding(Tape& tape, Var distribution, Var label_table, Var w1, Var w2,
                     std::optional<double> forced_gate) {
  Var e = tape.row(label_table, argmax_class(tape.value(distribution).values()));
  Var e_bar = tape.matvec_transposed(label_table, distribution);
  return gated_mix(tape, e, e_bar, w1, w2, forced_gate);
}

Var fixed_lambda_embedding(Tape& tape, Var distribution, Var label_table, double lambda) {
  Var e = tape.row(label_table, argmax_class(tape.value(distribution).values()));
  Var e_bar = tape.matvec_transposed(label_table, distribution);
  return lambda_mix(tape, e, e_bar, lambda);
}

std::vector<double> update_mask(std::span<const double> mask, int emitted, int eos) {
  if (emitted < 0 || emitted > eos || static_cast<std::size_t>(eos) + 1 != mask.size()) {
    throw UsageError("update_mask: class " + std::to_string(emitted) + " invalid for mask of " +
                     std::to_string(mask.size()) + " entries");
  }
  std::vector<double> next(mask.begin(), mask.end());
  if (emitted == eos) return next;
  if (next[static_cast<std::size_t>(emitted)] == kNegInf) {
    throw UsageError("label " + std::to_string(emitted) + " emitted twice under an active mask");
  }
  next[static_cast<std::size_t>(emitted)] = kNegInf;
  return next;
}

// ---------------------------------------------------------------------------

SgmModel::SgmModel(ModelConfig config, std::size_t vocab_size, std::size_t label_count,
                   std::uint64_t seed)
    : config_(config), vocab_size_(vocab_size), label_count_(label_count) {
  config_.validate();
  if (vocab_size < 1 || label_count < 1) {
    throw ConfigError("model needs a non-empty vocabulary and label set");
  }
  RngStream rng(seed);
  const double s = config_.init_scale;
  const std::size_t k = config_.embedding_size;
  const std::size_t he = config_.encoder_hidden;
  const std::size_t hd = config_.decoder_hidden;

  word_embedding_ = params_.add_uniform("embedding.words", {vocab_size, k}, s, rng);
  label_embedding_ = params_.add_uniform("embedding.labels", {label_count + 1, k}, s, rng);
  bos_embedding_ = params_.add_uniform("embedding.bos", {k}, s, rng);
  for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
    const std::size_t in = l == 0 ? k : 2 * he;
    const std::string prefix = "encoder.l" + std::to_string(l);
    encoder_forward_.push_back(add_lstm(prefix + ".fwd", in, he, rng));
    encoder_backward_.push_back(add_lstm(prefix + ".bwd", in, he, rng));
  }
  for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
    const std::size_t in = l == 0 ? k + 2 * he : hd;
    decoder_.push_back(add_lstm("decoder.l" + std::to_string(l), in, hd, rng));
  }
  w_a_ = params_.add_uniform("attention.W_a", {hd, hd}, s, rng);
  u_a_ = params_.add_uniform("attention.U_a", {hd, 2 * he}, s, rng);
  v_a_ = params_.add_uniform("attention.v_a", {hd}, s, rng);
  w_d_ = params_.add_uniform("output.W_d", {hd, hd}, s, rng);
  v_d_ = params_.add_uniform("output.V_d", {hd, 2 * he}, s, rng);
  w_o_ = params_.add_uniform("output.W_o", {label_count + 1, hd}, s, rng);
  // Created in every mode so that all variants share one parameter layout.
  w_1_ = params_.add_uniform("global.W_1", {k, k}, s, rng);
  w_2_ = params_.add_uniform("global.W_2", {k, k}, s, rng);
}

SgmModel::LstmIds SgmModel::add_lstm(const std::string& prefix, std::size_t input,
                                     std::size_t hidden, RngStream& rng) {
  LstmIds ids;
  ids.weights = params_.add_uniform(prefix + ".W", {4 * hidden, input + hidden},
                                    config_.init_scale, rng);
  Tensor bias({4 * hidden});
  for (std::size_t i = hidden; i < 2 * hidden; ++i) bias[i] = 1.0;  // forget gate
  ids.bias = params_.add(prefix + ".b", std::move(bias));
  return ids;
}

LstmWeights SgmModel::lstm(Tape& tape, const LstmIds& ids) {
  return {p(tape, ids.weights), p(tape, ids.bias)};
}

void SgmModel::set_global_embedding(GlobalEmbeddingMode mode, double lambda) {
  ModelConfig next = config_;
  next.ge_mode = mode;
  next.lambda = lambda;
  next.validate();
  config_ = next;
}

void SgmModel::set_use_mask(bool use_mask) { config_.use_mask = use_mask; }

std::vector<Var> SgmModel::embed(Tape& tape, std::span<const int> tokens) {
  Var table = p(tape, word_embedding_);
  std::vector<Var> out;
  out.reserve(tokens.size());
  for (int id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) {
      throw DataError("token id " + std::to_string(id) + " outside vocabulary of " +
                      std::to_string(vocab_size_));
    }
    out.push_back(tape.row(table, static_cast<std::size_t>(id)));
  }
  return out;
}

EncoderOutput SgmModel::encode(Tape& tape, std::span<const int> tokens, Phase phase,
                               RngStream* rng) {
  if (tokens.empty()) throw DataError("cannot encode an empty token sequence");
  const std::size_t m = tokens.size();
  const std::size_t he = config_.encoder_hidden;
  std::vector<Var> inputs = embed(tape, tokens);
  for (Var& x : inputs) x = tape.dropout(x, config_.dropout, phase, rng);

  const Tensor zeros({he});
  std::vector<Var> outputs(m);
  for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
    if (l > 0) {
      for (Var& x : inputs) x = tape.dropout(x, config_.dropout, phase, rng);
    }
    LstmWeights fwd = lstm(tape, encoder_forward_[l]);
    LstmWeights bwd = lstm(tape, encoder_backward_[l]);
    std::vector<Var> forward(m), backward(m);
    LstmState s{tape.constant(zeros), tape.constant(zeros)};
    for (std::size_t i = 0; i < m; ++i) {
      s = lstm_cell_step(tape, fwd, inputs[i], s);
      forward[i] = s.hidden;
    }
    s = {tape.constant(zeros), tape.constant(zeros)};
    for (std::size_t i = m; i-- > 0;) {
      s = lstm_cell_step(tape, bwd, inputs[i], s);
      backward[i] = s.hidden;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const Var both[] = {forward[i], backward[i]};
      outputs[i] = tape.concat(both);
    }
    inputs = outputs;
  }

  EncoderOutput enc;
  enc.states = outputs;
  enc.stacked = tape.stack_rows(outputs);
  Var u_a = p(tape, u_a_);
  std::vector<Var> keys;
  keys.reserve(m);
  for (Var h : outputs) keys.push_back(tape.matvec(u_a, h));
  enc.keys = tape.stack_rows(keys);
  return enc;
}

AttentionResult SgmModel::attend(Tape& tape, Var decoder_hidden, const EncoderOutput& encoded) {
  return sgm::attend(tape, decoder_hidden, encoded, p(tape, w_a_), p(tape, v_a_));
}

DecoderState SgmModel::initial_state(Tape& tape) const {
  DecoderState s;
  const Tensor zeros({config_.decoder_hidden});
  for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
    s.layers.push_back({tape.constant(zeros), tape.constant(zeros)});
  }
  s.context = tape.constant(Tensor({2 * config_.encoder_hidden}));
  s.previous = bos();
  s.mask.assign(output_classes(), 0.0);
  return s;
}

Var SgmModel::input_embedding(Tape& tape, const DecoderState& state) {
  if (state.previous == bos()) return p(tape, bos_embedding_);
  if (state.previous < 0 || state.previous >= eos()) {
    throw UsageError("decoder input must be bos or a real label, got class " +
                     std::to_string(state.previous));
  }
  Var table = p(tape, label_embedding_);
  Var e = tape.row(table, static_cast<std::size_t>(state.previous));
  if (config_.ge_mode == GlobalEmbeddingMode::off) return e;
  if (!state.distribution.valid()) throw UsageError("global embedding needs y_{t-1}");
  Var e_bar = tape.matvec_transposed(table, state.distribution);
  if (config_.ge_mode == GlobalEmbeddingMode::fixed_lambda) {
    return lambda_mix(tape, e, e_bar, config_.lambda);
  }
  return gated_mix(tape, e, e_bar, p(tape, w_1_), p(tape, w_2_), forced_gate_);
}

StepOutput SgmModel::decoder_step(Tape& tape, const DecoderState& state, Var g,
                                  const EncoderOutput& encoded, Phase phase, RngStream* rng) {
  if (tape.value(g).size() != config_.embedding_size) {
    throw ShapeError("decoder input has " + std::to_string(tape.value(g).size()) +
                     " entries, expected " + std::to_string(config_.embedding_size));
  }
  if (state.mask.size() != output_classes()) throw ShapeError("mask size mismatch");
  StepOutput out;
  out.state = state;
  const Var first_input[] = {g, state.context};
  Var input = tape.concat(first_input);
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    if (l > 0) input = tape.dropout(input, config_.dropout, phase, rng);
    out.state.layers[l] = lstm_cell_step(tape, lstm(tape, decoder_[l]), input, state.layers[l]);
    input = out.state.layers[l].hidden;
  }
  Var top = out.state.layers.back().hidden;
  AttentionResult att = attend(tape, top, encoded);
  Var hidden = tape.tanh(tape.add(tape.matvec(p(tape, w_d_), top),
                                  tape.matvec(p(tape, v_d_), att.context)));
  hidden = tape.dropout(hidden, config_.dropout, phase, rng);
  Var logits = tape.matvec(p(tape, w_o_), hidden);
  out.distribution = tape.softmax_masked(logits, state.mask);
  out.attention = att.weights;
  out.state.context = att.context;
  out.state.distribution = out.distribution;
  return out;
}

StepOutput SgmModel::step(Tape& tape, const DecoderState& state, const EncoderOutput& encoded,
                          Phase phase, RngStream* rng) {
  Var g = input_embedding(tape, state);
  if (phase == Phase::train) g = tape.dropout(g, config_.dropout, phase, rng);
  return decoder_step(tape, state, g, encoded, phase, rng);
}

DecoderState SgmModel::emit(DecoderState state, int cls) const {
  if (cls < 0 || cls > eos()) throw UsageError("emitted class " + std::to_string(cls) + " out of range");
  if (config_.use_mask) state.mask = update_mask(state.mask, cls, eos());
  state.previous = cls;
  return state;
}

}  // namespace sgm
