#include "sgm/trainer.hpp"

#include <chrono>
#include <cmath>

#include <json.hpp>

#include "sgm/errors.hpp"
#include "sgm/inference.hpp"
#include "sgm/rng.hpp"

namespace sgm {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(clip_norm > 0.0)) throw ConfigError("clip max-norm must be positive");
  adam.validate();
}

std::string TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["epoch_loss"] = epoch_loss;
  j["valid_f1"] = valid_f1;
  j["epoch_seconds"] = epoch_seconds;
  j["selected_epoch"] = selected_epoch;
  j["best_valid_f1"] = best_valid_f1;
  return j.dump(2);
}

Var sequence_loss(Tape& tape, SgmModel& model, std::span<const int> tokens,
                  std::span<const int> framed_labels, Phase phase, RngStream* rng) {
  if (framed_labels.size() < 2 || framed_labels.front() != model.bos() ||
      framed_labels.back() != model.eos()) {
    throw DataError("label sequence must be framed as [bos, ..., eos]");
  }
  const EncoderOutput enc = model.encode(tape, tokens, phase, rng);
  DecoderState state = model.initial_state(tape);
  Var total;
  for (std::size_t t = 1; t < framed_labels.size(); ++t) {
    const int target = framed_labels[t];
    if (target < 0 || target > model.eos() || (target == model.eos()) != (t + 1 == framed_labels.size())) {
      throw DataError("invalid label id " + std::to_string(target) + " in framed sequence");
    }
    StepOutput out = model.step(tape, state, enc, phase, rng);
    Var nll = tape.neg_log_prob(out.distribution, static_cast<std::size_t>(target));
    total = total.valid() ? tape.add(total, nll) : nll;
    if (target != model.eos()) state = model.emit(std::move(out.state), target);
  }
  return total;
}

double example_loss(SgmModel& model, const Example& example) {
  Tape tape(false);
  return tape.scalar_value(sequence_loss(tape, model, example.tokens, example.labels, Phase::eval, nullptr));
}

namespace {

std::span<const int> unpadded(const std::vector<int>& row, std::size_t length) {
  return std::span<const int>(row).first(length);
}

}  // namespace

double batch_loss(SgmModel& model, const Batch& batch) {
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Tape tape(false);
    Var loss = sequence_loss(tape, model, unpadded(batch.tokens[i], batch.token_lengths[i]),
                             unpadded(batch.labels[i], batch.label_lengths[i]), Phase::eval, nullptr);
    total += tape.scalar_value(loss);
  }
  return total;
}

double train_epoch(SgmModel& model, std::span<const Batch> batches, const TrainConfig& config,
                   RngStream& dropout_rng) {
  config.validate();
  if (batches.empty()) throw DataError("train_epoch needs at least one batch");
  ParameterStore& params = model.params();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const Batch& batch = batches[b];
    params.zero_grad();
    const double weight = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Tape tape;
      Var loss;
      try {
        loss = sequence_loss(tape, model, unpadded(batch.tokens[i], batch.token_lengths[i]),
                             unpadded(batch.labels[i], batch.label_lengths[i]), Phase::train,
                             &dropout_rng);
      } catch (const NumericError& e) {
        throw NumericError("non-finite training loss in batch " + std::to_string(b) + ": " + e.what());
      }
      const double value = tape.scalar_value(loss);
      if (!std::isfinite(value)) {
        throw NumericError("non-finite training loss in batch " + std::to_string(b));
      }
      tape.backward(loss, weight);
      total += value;
      ++count;
    }
    clip_gradients(params, config.clip_norm);
    adam_step(params, config.adam);
  }
  return total / static_cast<double>(count);
}

std::size_t select_best_epoch(std::span<const double> scores) {
  if (scores.empty()) throw UsageError("no epochs to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best + 1;
}

std::size_t default_max_steps(std::span<const Example> examples) {
  std::size_t longest = 0;
  for (const Example& ex : examples) longest = std::max(longest, ex.targets().size());
  return longest + 1;
}

namespace {

template <typename Decode>
MetricsReport evaluate_with(SgmModel& model, std::span<const Example> examples, Decode decode,
                            bool lls_buckets) {
  std::vector<LabelSet> predicted, truth;
  predicted.reserve(examples.size());
  truth.reserve(examples.size());
  for (const Example& ex : examples) {
    const DecodeResult r = decode(ex.tokens);
    predicted.push_back(make_label_set(extract_label_set(r.sequence, model.eos())));
    truth.push_back(make_label_set(ex.targets()));
  }
  if (lls_buckets) return bucket_by_lls(predicted, truth, model.label_count());
  return evaluate_sets(predicted, truth, model.label_count());
}

}  // namespace

MetricsReport evaluate_greedy(SgmModel& model, std::span<const Example> examples,
                              std::size_t max_steps, bool lls_buckets) {
  return evaluate_with(
      model, examples,
      [&](std::span<const int> tokens) { return greedy_decode(model, tokens, max_steps); },
      lls_buckets);
}

MetricsReport evaluate_beam(SgmModel& model, std::span<const Example> examples,
                            std::size_t beam_size, std::size_t max_steps, bool lls_buckets) {
  return evaluate_with(
      model, examples,
      [&](std::span<const int> tokens) { return beam_search(model, tokens, beam_size, max_steps); },
      lls_buckets);
}

TrainReport fit(SgmModel& model, std::span<const Example> train, std::span<const Example> valid,
                const TrainConfig& config) {
  config.validate();
  if (train.empty() || valid.empty()) throw DataError("fit needs non-empty training and validation sets");
  const RngStream root(config.seed);
  RngStream batch_rng = root.derive(1);
  RngStream dropout_rng = root.derive(2);
  const std::size_t max_steps =
      config.max_decode_steps > 0 ? config.max_decode_steps : default_max_steps(train);

  TrainReport report;
  ParameterStore best = model.params();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto batches = make_batches(train, config.batch_size, batch_rng, config.shuffle_batches);
    report.epoch_loss.push_back(train_epoch(model, batches, config, dropout_rng));
    const double f1 = evaluate_greedy(model, valid, max_steps).f1;
    if (epoch == 0 || f1 > report.best_valid_f1) {
      report.best_valid_f1 = f1;
      best = model.params();
    }
    report.valid_f1.push_back(f1);
    report.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  report.selected_epoch = select_best_epoch(report.valid_f1);
  model.params().assign_from(best);
  return report;
}

Pipeline apply_ablation(ModelConfig model, ExampleOptions examples, const AblationFlags& flags,
                        std::uint64_t seed) {
  if (flags.no_mask) model.use_mask = false;
  if (flags.shuffle_labels) {
    examples.shuffle_labels = true;
    examples.shuffle_seed = RngStream(seed).derive(3).seed();
  }
  return {model, examples};
}

}  // namespace sgm
