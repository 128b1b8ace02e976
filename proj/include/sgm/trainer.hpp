#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sgm/corpus.hpp"
#include "sgm/metrics.hpp"
#include "sgm/model.hpp"
#include "sgm/numerics.hpp"

namespace sgm {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  AdamConfig adam;
  double clip_norm = 10.0;
  std::uint64_t seed = 1;
  bool shuffle_batches = true;
  // Decode limit for validation; 0 means (largest training label set) + 1.
  std::size_t max_decode_steps = 0;

  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_loss;       // mean per-example training loss
  std::vector<double> valid_f1;         // greedy-decoded validation micro-F1
  std::vector<double> epoch_seconds;
  std::size_t selected_epoch = 0;       // 1-based
  double best_valid_f1 = 0.0;

  std::string to_json() const;
};

// Teacher-forced negative log-likelihood of [bos, y1..yn, eos]: the sum over
// the n + 1 predicted positions of -ln y_t[target_t]. The input embedding at
// each step comes from the ground-truth previous label; global-embedding
// modes mix it with the model's own previous distribution.
Var sequence_loss(Tape& tape, SgmModel& model, std::span<const int> tokens,
                  std::span<const int> framed_labels, Phase phase, RngStream* rng);

// Evaluation-mode loss of a single example.
double example_loss(SgmModel& model, const Example& example);

// Sum of per-example losses over the unpadded rows of a batch.
double batch_loss(SgmModel& model, const Batch& batch);

// One pass over `batches`: for each batch the mean example loss is
// backpropagated, gradients are clipped and Adam takes a step. Returns the
// mean per-example loss. Throws NumericError naming the batch when the loss
// is not finite.
double train_epoch(SgmModel& model, std::span<const Batch> batches, const TrainConfig& config,
                   RngStream& dropout_rng);

// Index (1-based) of the largest score; the earliest wins ties.
std::size_t select_best_epoch(std::span<const double> scores);

// Largest label-set size among the examples plus one.
std::size_t default_max_steps(std::span<const Example> examples);

// Greedy-decodes each example and scores the predicted label sets.
MetricsReport evaluate_greedy(SgmModel& model, std::span<const Example> examples,
                              std::size_t max_steps, bool lls_buckets = false);
// Beam-decodes each example and scores the predicted label sets.
MetricsReport evaluate_beam(SgmModel& model, std::span<const Example> examples,
                            std::size_t beam_size, std::size_t max_steps, bool lls_buckets = false);

// Trains for config.epochs epochs, scoring the validation set after each,
// and leaves the model holding the parameters of the best epoch.
TrainReport fit(SgmModel& model, std::span<const Example> train, std::span<const Example> valid,
                const TrainConfig& config);

// ---- ablations ----

struct AblationFlags {
  bool no_mask = false;         // I_t = 0 during training and decoding
  bool shuffle_labels = false;  // random per-example label order instead of frequency order
};

struct Pipeline {
  ModelConfig model;
  ExampleOptions examples;
};

Pipeline apply_ablation(ModelConfig model, ExampleOptions examples, const AblationFlags& flags,
                        std::uint64_t seed);

}  // namespace sgm
