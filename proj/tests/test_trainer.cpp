#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "sgm/corpus.hpp"
#include "sgm/errors.hpp"
#include "sgm/model.hpp"
#include "sgm/rng.hpp"
#include "sgm/trainer.hpp"
#include "synthetic.hpp"

using namespace sgm;
using namespace sgm::testing;

namespace {

struct Prepared {
  Vocabulary vocab;
  LabelVocabulary labels;
  std::vector<Example> examples;
};

Prepared prepare(const std::vector<RawRecord>& records, const ExampleOptions& options = {}) {
  Prepared p{build_vocab(records, 1000), build_label_vocab(records), {}};
  p.examples = make_examples(records, p.vocab, p.labels, options);
  return p;
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.embedding_size = 8;
  cfg.encoder_hidden = 8;
  cfg.decoder_hidden = 8;
  return cfg;
}

void zero_all(SgmModel& model) {
  for (auto& p : model.params())
    for (double& v : p.value.values()) v = 0.0;
}

bool same_values(const ParameterStore& a, const ParameterStore& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i].value == b[i].value)) return false;
  return true;
}

}  // namespace

TEST_CASE("zero weights give the uniform-over-unmasked loss") {
  // L = 3, so 4 output classes; target [bos, 0, 1, eos]. Step 1 sees all four
  // classes, step 2 three (0 masked), step 3 two.
  SgmModel model(small_config(), 10, 3, 1);
  zero_all(model);
  std::vector<int> tokens = {4, 5, 6};
  std::vector<int> framed = {model.bos(), 0, 1, model.eos()};
  Tape tape(false);
  double loss = tape.scalar_value(sequence_loss(tape, model, tokens, framed, Phase::eval, nullptr));
  CHECK(loss == doctest::Approx(std::log(4.0) + std::log(3.0) + std::log(2.0)).epsilon(1e-12));

  std::vector<int> empty_set = {model.bos(), model.eos()};
  Tape t2(false);
  CHECK(t2.scalar_value(sequence_loss(t2, model, tokens, empty_set, Phase::eval, nullptr)) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("sequence_loss rejects badly framed sequences") {
  SgmModel model(small_config(), 10, 3, 1);
  std::vector<int> tokens = {4};
  Tape tape(false);
  std::vector<int> unframed = {0, 1};
  CHECK_THROWS_AS(sequence_loss(tape, model, tokens, unframed, Phase::eval, nullptr), DataError);
  std::vector<int> early_eos = {model.bos(), model.eos(), 0, model.eos()};
  CHECK_THROWS_AS(sequence_loss(tape, model, tokens, early_eos, Phase::eval, nullptr), DataError);
  std::vector<int> out_of_range = {model.bos(), 7, model.eos()};
  CHECK_THROWS_AS(sequence_loss(tape, model, tokens, out_of_range, Phase::eval, nullptr), DataError);
}

TEST_CASE("batch loss is the sum of unbatched example losses") {
  Prepared p = prepare(overfit_corpus(3));
  SgmModel model(small_config(), p.vocab.size(), p.labels.label_count(), 4);
  RngStream rng(5);
  auto batches = make_batches(p.examples, 6, rng, true);
  double over_batches = 0.0, direct = 0.0;
  for (const Batch& b : batches) {
    double sum = 0.0;
    for (const Example* ex : b.examples) sum += example_loss(model, *ex);
    CHECK(batch_loss(model, b) == doctest::Approx(sum).epsilon(1e-9));
    over_batches += batch_loss(model, b);
  }
  for (const Example& ex : p.examples) direct += example_loss(model, ex);
  CHECK(over_batches == doctest::Approx(direct).epsilon(1e-9));

  // Duplicating every example doubles the batch loss.
  std::vector<Example> doubled = p.examples;
  doubled.insert(doubled.end(), p.examples.begin(), p.examples.end());
  RngStream keep(0);
  auto one = make_batches(p.examples, p.examples.size(), keep, false);
  auto two = make_batches(doubled, doubled.size(), keep, false);
  CHECK(batch_loss(model, two[0]) == doctest::Approx(2.0 * batch_loss(model, one[0])).epsilon(1e-12));
}

TEST_CASE("a zero learning rate leaves parameters unchanged") {
  Prepared p = prepare(overfit_corpus(7));
  SgmModel model(small_config(), p.vocab.size(), p.labels.label_count(), 8);
  ParameterStore before = model.params();
  TrainConfig cfg;
  cfg.adam.learning_rate = 0.0;
  RngStream batch_rng(1), dropout_rng(2);
  auto batches = make_batches(p.examples, 4, batch_rng, true);
  train_epoch(model, batches, cfg, dropout_rng);
  CHECK(same_values(before, model.params()));
}

TEST_CASE("training is deterministic for a fixed seed") {
  Prepared p = prepare(overfit_corpus(9));
  auto run = [&] {
    ModelConfig mc = small_config();
    mc.dropout = 0.3;
    SgmModel model(mc, p.vocab.size(), p.labels.label_count(), 10);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 11;
    TrainReport r = fit(model, p.examples, p.examples, cfg);
    return std::make_pair(r.epoch_loss, model.params());
  };
  auto [loss_a, params_a] = run();
  auto [loss_b, params_b] = run();
  CHECK(loss_a == loss_b);
  CHECK(same_values(params_a, params_b));
}

TEST_CASE("training loss falls over the first epochs") {
  Prepared p = prepare(overfit_corpus(61));
  SgmModel model(ModelConfig{}, p.vocab.size(), p.labels.label_count(), 62);
  TrainConfig cfg;
  cfg.epochs = 5;
  TrainReport r = fit(model, p.examples, p.examples, cfg);
  REQUIRE(r.epoch_loss.size() == 5);
  for (std::size_t e = 1; e < 5; ++e) CHECK(r.epoch_loss[e] < r.epoch_loss[e - 1]);
}

TEST_CASE("select_best_epoch") {
  std::vector<double> scores = {0.2, 0.5, 0.5};
  CHECK(select_best_epoch(scores) == 2);
  std::vector<double> one = {0.0};
  CHECK(select_best_epoch(one) == 1);
  std::vector<double> none;
  CHECK_THROWS_AS(select_best_epoch(none), UsageError);
}

TEST_CASE("fit keeps the parameters of the selected epoch") {
  Prepared p = prepare(overfit_corpus(13));
  SgmModel model(small_config(), p.vocab.size(), p.labels.label_count(), 14);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.adam.learning_rate = 0.01;
  TrainReport r = fit(model, p.examples, p.examples, cfg);
  REQUIRE(r.valid_f1.size() == 6);
  CHECK(r.selected_epoch == select_best_epoch(r.valid_f1));
  CHECK(r.best_valid_f1 == r.valid_f1[r.selected_epoch - 1]);
  CHECK(evaluate_greedy(model, p.examples, default_max_steps(p.examples)).f1 == r.best_valid_f1);

  auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["selected_epoch"] == r.selected_epoch);
  CHECK(j["epoch_loss"].size() == 6);
  CHECK(j["best_valid_f1"].get<double>() == r.best_valid_f1);
}

TEST_CASE("non-finite loss names the batch") {
  Prepared p = prepare(overfit_corpus(15));
  SgmModel model(small_config(), p.vocab.size(), p.labels.label_count(), 16);
  RngStream keep(0), dropout_rng(1);
  auto batches = make_batches(p.examples, 10, keep, false);
  REQUIRE(batches.size() == 2);
  // Poison only the tokens that never occur in the first batch.
  std::vector<bool> in_first(p.vocab.size(), false);
  for (const Example* ex : batches[0].examples)
    for (int t : ex->tokens) in_first[t] = true;
  auto& words = model.params().at("embedding.words").value;
  for (std::size_t r = 0; r < p.vocab.size(); ++r)
    if (!in_first[r])
      for (std::size_t c = 0; c < words.cols(); ++c) words.at(r, c) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  try {
    train_epoch(model, batches, cfg, dropout_rng);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    INFO(std::string(e.what()));
    CHECK(std::string(e.what()).find("batch 1") != std::string::npos);
  }
}

TEST_CASE("default_max_steps") {
  Prepared p = prepare(overfit_corpus(17));
  std::size_t longest = 0;
  for (const Example& ex : p.examples) longest = std::max(longest, ex.targets().size());
  CHECK(default_max_steps(p.examples) == longest + 1);
}

TEST_CASE("apply_ablation") {
  ModelConfig mc;
  ExampleOptions eo;
  Pipeline plain = apply_ablation(mc, eo, AblationFlags{}, 3);
  CHECK(plain.model.use_mask);
  CHECK_FALSE(plain.examples.shuffle_labels);

  AblationFlags flags;
  flags.no_mask = true;
  CHECK_FALSE(apply_ablation(mc, eo, flags, 3).model.use_mask);

  AblationFlags shuffle;
  shuffle.shuffle_labels = true;
  Pipeline a = apply_ablation(mc, eo, shuffle, 3), b = apply_ablation(mc, eo, shuffle, 3);
  CHECK(a.examples.shuffle_labels);
  CHECK(a.examples.shuffle_seed == b.examples.shuffle_seed);
  CHECK(a.model.use_mask);

  auto records = overfit_corpus(19);
  Prepared sorted = prepare(records);
  Prepared x = prepare(records, a.examples), y = prepare(records, b.examples);
  bool any_reordered = false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(x.examples[i].labels == y.examples[i].labels);
    CHECK(make_label_set(x.examples[i].targets()) == make_label_set(sorted.examples[i].targets()));
    any_reordered = any_reordered || x.examples[i].labels != sorted.examples[i].labels;
  }
  CHECK(any_reordered);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS(cfg.validate());
  TrainConfig no_epochs;
  no_epochs.epochs = 0;
  CHECK_THROWS(no_epochs.validate());
}
