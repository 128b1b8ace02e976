#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgm/autodiff.hpp"
#include "sgm/numerics.hpp"
#include "sgm/parameters.hpp"

namespace sgm {

class RngStream;

// How the decoder input g(y_{t-1}) is built from the previous step.
enum class GlobalEmbeddingMode {
  off,           // embedding of the previous label only
  gate,          // learned elementwise transform gate between e and the expected embedding
  fixed_lambda,  // constant mixture (1 - lambda) e + lambda e_bar
};

std::string to_string(GlobalEmbeddingMode mode);
GlobalEmbeddingMode parse_global_embedding_mode(std::string_view text);

struct ModelConfig {
  std::size_t embedding_size = 64;  // word and label embedding width
  std::size_t encoder_hidden = 64;  // per direction
  std::size_t decoder_hidden = 64;  // also the attention width
  std::size_t encoder_layers = 1;
  std::size_t decoder_layers = 1;
  double dropout = 0.0;
  GlobalEmbeddingMode ge_mode = GlobalEmbeddingMode::gate;
  double lambda = 0.0;  // fixed_lambda mode only
  bool use_mask = true;
  double init_scale = 0.1;

  void validate() const;
};

// Top-layer encoder states h_i = [forward_i; backward_i] for the unpadded
// source positions, plus the attention keys U_a h_i computed once per input.
struct EncoderOutput {
  std::vector<Var> states;
  Var stacked;  // m x (2 * encoder_hidden)
  Var keys;     // m x decoder_hidden
  std::size_t length() const { return states.size(); }
};

struct DecoderState {
  std::vector<LstmState> layers;
  Var context;       // c_{t-1}
  Var distribution;  // y_{t-1}; invalid before the first step
  int previous = -1;  // class whose embedding is e at the next step
  std::vector<double> mask;  // I_t over L labels + eos, entries 0 or -inf
};

struct StepOutput {
  DecoderState state;  // carries c_t and y_t; `previous` and mask not yet advanced
  Var distribution;    // y_t
  Var attention;       // alpha_t over source positions
};

struct AttentionResult {
  Var weights;
  Var context;
};

// e_i = v_a . tanh(W_a s + U_a h_i), alpha = softmax(e), c = sum_i alpha_i h_i.
AttentionResult attend(Tape& tape, Var decoder_hidden, const EncoderOutput& encoded, Var w_a,
                       Var v_a);

// Lowest class id among the maxima.
std::size_t argmax_class(std::span<const double> distribution);

// (1 - H) * e + H * e_bar with H = sigmoid(W_1 e + W_2 e_bar), or H filled
// with `forced_gate` when given.
Var gated_mix(Tape& tape, Var e, Var e_bar, Var w1, Var w2,
              std::optional<double> forced_gate = std::nullopt);
// (1 - lambda) * e + lambda * e_bar.
Var lambda_mix(Tape& tape, Var e, Var e_bar, double lambda);

// Global embedding of a distribution over output classes: e is the row of
// the argmax class, e_bar the probability-weighted sum of all rows.
Var global_embedding(Tape& tape, Var distribution, Var label_table, Var w1, Var w2,
                     std::optional<double> forced_gate = std::nullopt);
Var fixed_lambda_embedding(Tape& tape, Var distribution, Var label_table, double lambda);

// Sets the emitted real label's entry to -inf. Emitting eos leaves the mask
// unchanged. Throws UsageError when the label is already masked.
std::vector<double> update_mask(std::span<const double> mask, int emitted, int eos);

class SgmModel {
 public:
  SgmModel(ModelConfig config, std::size_t vocab_size, std::size_t label_count,
           std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t label_count() const { return label_count_; }
  std::size_t output_classes() const { return label_count_ + 1; }
  int eos() const { return static_cast<int>(label_count_); }
  int bos() const { return static_cast<int>(label_count_) + 1; }

  // Switch the decoder-input variant or the mask on the same parameters.
  void set_global_embedding(GlobalEmbeddingMode mode, double lambda = 0.0);
  void set_use_mask(bool use_mask);
  // Pins every entry of the transform gate H (gate mode); nullopt restores it.
  void force_gate(std::optional<double> value) { forced_gate_ = value; }

  std::vector<Var> embed(Tape& tape, std::span<const int> tokens);
  EncoderOutput encode(Tape& tape, std::span<const int> tokens, Phase phase, RngStream* rng);
  AttentionResult attend(Tape& tape, Var decoder_hidden, const EncoderOutput& encoded);

  // s_0 = 0, c_0 = 0, previous = bos, fresh mask.
  DecoderState initial_state(Tape& tape) const;
  // g(y_{t-1}) for the given state.
  Var input_embedding(Tape& tape, const DecoderState& state);
  // One decoder step with an explicit input embedding g.
  StepOutput decoder_step(Tape& tape, const DecoderState& state, Var g,
                          const EncoderOutput& encoded, Phase phase, RngStream* rng);
  // input_embedding + decoder_step.
  StepOutput step(Tape& tape, const DecoderState& state, const EncoderOutput& encoded,
                  Phase phase, RngStream* rng);
  // Records that `cls` was emitted: it becomes the next input label and,
  // with the mask enabled, a real label is masked from now on.
  DecoderState emit(DecoderState state, int cls) const;

 private:
  struct LstmIds {
    std::size_t weights;
    std::size_t bias;
  };

  LstmIds add_lstm(const std::string& prefix, std::size_t input, std::size_t hidden,
                   RngStream& rng);
  LstmWeights lstm(Tape& tape, const LstmIds& ids);
  Var p(Tape& tape, std::size_t id) { return tape.param(params_, id); }

  ModelConfig config_;
  std::size_t vocab_size_;
  std::size_t label_count_;
  ParameterStore params_;
  std::optional<double> forced_gate_;

  std::size_t word_embedding_ = 0;
  std::size_t label_embedding_ = 0;
  std::size_t bos_embedding_ = 0;
  std::vector<LstmIds> encoder_forward_;
  std::vector<LstmIds> encoder_backward_;
  std::vector<LstmIds> decoder_;
  std::size_t w_a_ = 0, u_a_ = 0, v_a_ = 0;
  std::size_t w_d_ = 0, v_d_ = 0, w_o_ = 0;
  std::size_t w_1_ = 0, w_2_ = 0;
};

}  // namespace sgm
