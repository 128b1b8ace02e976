// Acceptance suite. Each criterion prints one PASS/FAIL line; the process
// exits non-zero when any criterion fails. Pass criterion numbers as
// arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgm/checkpoint.hpp"
#include "sgm/commands.hpp"
#include "sgm/corpus.hpp"
#include "sgm/inference.hpp"
#include "sgm/metrics.hpp"
#include "sgm/model.hpp"
#include "sgm/numerics.hpp"
#include "sgm/rng.hpp"
#include "sgm/trainer.hpp"
#include "synthetic.hpp"

using namespace sgm;
using namespace sgm::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Distributions y_1..y_T obtained by feeding `sequence` back one class at a time.
std::vector<std::vector<double>> distributions_along(SgmModel& model, std::span<const int> tokens,
                                                     std::span<const int> sequence) {
  Tape tape(false);
  EncoderOutput enc = model.encode(tape, tokens, Phase::eval, nullptr);
  DecoderState state = model.initial_state(tape);
  std::vector<std::vector<double>> out;
  for (int cls : sequence) {
    StepOutput step = model.step(tape, state, enc, Phase::eval, nullptr);
    out.push_back(tape.value(step.distribution).raw());
    state = model.emit(step.state, cls);
  }
  return out;
}

double sequence_log_prob(SgmModel& model, std::span<const int> tokens, std::span<const int> seq) {
  auto dists = distributions_along(model, tokens, seq);
  double total = 0.0;
  for (std::size_t t = 0; t < seq.size(); ++t) total += std::log(dists[t][seq[t]]);
  return total;
}

// Every ordered, duplicate-free subset of {0..L-1}, each closed with eos.
void enumerate_sequences(std::size_t labels, std::vector<int>& prefix, std::vector<bool>& used,
                         std::vector<std::vector<int>>& out) {
  std::vector<int> closed = prefix;
  closed.push_back(static_cast<int>(labels));
  out.push_back(closed);
  for (std::size_t l = 0; l < labels; ++l) {
    if (used[l]) continue;
    used[l] = true;
    prefix.push_back(static_cast<int>(l));
    enumerate_sequences(labels, prefix, used, out);
    prefix.pop_back();
    used[l] = false;
  }
}

std::vector<Example> examples_for(const std::vector<RawRecord>& records, const Vocabulary& vocab,
                                  const LabelVocabulary& labels, const ExampleOptions& options = {}) {
  return make_examples(records, vocab, labels, options);
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  auto start = std::chrono::steady_clock::now();
  ModelConfig cfg;
  cfg.embedding_size = 8;
  cfg.encoder_hidden = 8;
  cfg.decoder_hidden = 8;
  cfg.ge_mode = GlobalEmbeddingMode::gate;
  SgmModel model(cfg, 20, 4, 11);
  RngStream init(12);
  for (auto& p : model.params())
    for (double& v : p.value.values()) v = init.uniform(-0.5, 0.5);
  std::vector<int> tokens = random_tokens(20, 5, 13);
  std::vector<int> framed = {model.bos(), 2, 0, 3, model.eos()};

  auto loss = [&] {
    Tape tape(false);
    return tape.scalar_value(sequence_loss(tape, model, tokens, framed, Phase::eval, nullptr));
  };
  model.params().zero_grad();
  {
    Tape tape;
    tape.backward(sequence_loss(tape, model, tokens, framed, Phase::eval, nullptr));
  }
  RngStream pick(14);
  GradCheckReport report = finite_difference_check(model.params(), loss, 1e-5, 400, pick);
  double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Outcome o;
  o.pass = report.passed(1e-4) && report.coordinates_checked >= 200 && seconds < 60.0;
  o.detail = fmt("max rel err %.3e over %zu coordinates (worst %s[%zu]: analytic %.6e, numeric %.6e), %.2fs",
                 report.max_relative_error, report.coordinates_checked,
                 report.worst_parameter.c_str(), report.worst_index, report.worst_analytic,
                 report.worst_numeric, seconds);
  if (report.failure) o.detail += "; " + *report.failure;
  return o;
}

Outcome masked_softmax_guarantee() {
  RngStream rng(21);
  std::size_t violations = 0, repeats = 0, steps = 0;
  for (std::size_t run = 0; run < 1000; ++run) {
    std::size_t labels = 2 + rng.below(5);
    auto mode = static_cast<GlobalEmbeddingMode>(rng.below(3));
    SgmModel model = toy_model(12, labels, 4, 1000 + run, 1.5, mode);
    if (mode == GlobalEmbeddingMode::fixed_lambda) model.set_global_embedding(mode, rng.uniform());
    std::vector<int> tokens = random_tokens(12, 1 + rng.below(6), 5000 + run);

    // Sampled path: every step must give masked classes exactly zero mass.
    Tape tape(false);
    EncoderOutput enc = model.encode(tape, tokens, Phase::eval, nullptr);
    DecoderState state = model.initial_state(tape);
    std::set<int> emitted;
    for (std::size_t t = 0; t <= labels; ++t) {
      StepOutput out = model.step(tape, state, enc, Phase::eval, nullptr);
      const auto& y = tape.value(out.distribution).raw();
      ++steps;
      for (int l : emitted)
        if (y[l] != 0.0) ++violations;
      double u = rng.uniform(), acc = 0.0;
      int cls = model.eos();
      for (std::size_t c = 0; c < y.size(); ++c) {
        acc += y[c];
        if (u < acc && y[c] > 0.0) {
          cls = static_cast<int>(c);
          break;
        }
      }
      if (cls == model.eos()) break;
      if (!emitted.insert(cls).second) ++repeats;
      state = model.emit(out.state, cls);
    }

    std::size_t max_steps = labels + 1;
    for (const auto& seq : {greedy_decode(model, tokens, max_steps).sequence,
                            beam_search(model, tokens, 1 + rng.below(4), max_steps).sequence}) {
      std::set<int> seen;
      for (int c : seq)
        if (c != model.eos() && !seen.insert(c).second) ++repeats;
    }
  }
  Outcome o;
  o.pass = violations == 0 && repeats == 0;
  o.detail = fmt("1000 runs, %zu checked steps, %zu nonzero masked probabilities, %zu repeats",
                 steps, violations, repeats);
  return o;
}

Outcome beam_oracle() {
  RngStream rng(31);
  std::size_t mismatches = 0, greedy_mismatches = 0;
  double worst = 0.0;
  for (std::size_t run = 0; run < 100; ++run) {
    std::size_t labels = 1 + rng.below(4);
    SgmModel model = toy_model(10, labels, 4, 2000 + run, 1.5);
    std::vector<int> tokens = random_tokens(10, 1 + rng.below(5), 6000 + run);

    std::vector<std::vector<int>> all;
    std::vector<int> prefix;
    std::vector<bool> used(labels, false);
    enumerate_sequences(labels, prefix, used, all);
    std::vector<int> best;
    double best_score = -INFINITY;
    for (const auto& seq : all) {
      double s = sequence_log_prob(model, tokens, seq);
      bool better = s > best_score || (s == best_score && (seq.size() < best.size() ||
                                                           (seq.size() == best.size() && seq < best)));
      if (better) {
        best = seq;
        best_score = s;
      }
    }
    std::size_t max_steps = labels + 1;
    DecodeResult beam = beam_search(model, tokens, all.size(), max_steps);
    double diff = std::abs(beam.log_prob - best_score);
    worst = std::max(worst, diff);
    if (beam.sequence != best || !(diff < 1e-9)) ++mismatches;

    DecodeResult greedy = greedy_decode(model, tokens, max_steps);
    DecodeResult beam1 = beam_search(model, tokens, 1, max_steps);
    if (greedy.sequence != beam1.sequence || greedy.log_prob != beam1.log_prob) ++greedy_mismatches;
  }
  Outcome o;
  o.pass = mismatches == 0 && greedy_mismatches == 0;
  o.detail = fmt("100 models: %zu exhaustive mismatches (max |dlogp| %.2e), %zu beam-1/greedy mismatches",
                 mismatches, worst, greedy_mismatches);
  return o;
}

Outcome metric_oracle() {
  RngStream rng(41);
  std::size_t failures = 0;
  for (std::size_t c = 0; c < 1000; ++c) {
    std::size_t n = 1 + rng.below(10);
    std::size_t labels = 1 + rng.below(8);
    std::vector<LabelSet> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < labels; ++l) {
        if (rng.below(2)) pred[i].push_back(static_cast<int>(l));
        if (rng.below(2)) truth[i].push_back(static_cast<int>(l));
      }
    std::size_t tp = 0, fp = 0, fn = 0, wrong = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < labels; ++l) {
        bool p = std::count(pred[i].begin(), pred[i].end(), static_cast<int>(l)) > 0;
        bool t = std::count(truth[i].begin(), truth[i].end(), static_cast<int>(l)) > 0;
        tp += p && t;
        fp += p && !t;
        fn += !p && t;
        wrong += p != t;
      }
    double hl = static_cast<double>(wrong) / static_cast<double>(n * labels);
    double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;

    MetricsReport r = evaluate_sets(pred, truth, labels);
    bool ok = r.totals.true_positives == tp && r.totals.false_positives == fp &&
              r.totals.false_negatives == fn && r.hamming_loss == hl && r.precision == precision &&
              r.recall == recall && r.f1 == f1 && hamming_loss(pred, truth, labels) == hl;
    if (!ok) ++failures;
  }
  Outcome o;
  o.pass = failures == 0;
  o.detail = fmt("1000 cases (N<=10, L<=8), %zu disagreements", failures);
  return o;
}

Outcome ge_consistency() {
  RngStream rng(51);
  double worst = 0.0;
  std::size_t compared = 0;
  for (std::size_t run = 0; run < 50; ++run) {
    std::size_t labels = 2 + rng.below(5);
    SgmModel model = toy_model(15, labels, 6, 3000 + run, 1.0);
    std::vector<int> tokens = random_tokens(15, 1 + rng.below(8), 7000 + run);

    model.set_global_embedding(GlobalEmbeddingMode::off);
    std::vector<int> path = greedy_decode(model, tokens, labels + 1).sequence;
    // Also walk a fixed label path so late steps are exercised.
    std::vector<int> walk;
    for (std::size_t l = 0; l < labels; ++l) walk.push_back(static_cast<int>(labels - 1 - l));
    walk.push_back(model.eos());

    for (const auto& seq : {path, walk}) {
      model.set_global_embedding(GlobalEmbeddingMode::off);
      auto off = distributions_along(model, tokens, seq);
      model.set_global_embedding(GlobalEmbeddingMode::gate);
      model.force_gate(0.0);
      auto gate = distributions_along(model, tokens, seq);
      model.force_gate(std::nullopt);
      model.set_global_embedding(GlobalEmbeddingMode::fixed_lambda, 0.0);
      auto lambda = distributions_along(model, tokens, seq);
      for (std::size_t t = 0; t < off.size(); ++t)
        for (std::size_t c = 0; c < off[t].size(); ++c) {
          worst = std::max({worst, std::abs(off[t][c] - gate[t][c]),
                            std::abs(off[t][c] - lambda[t][c])});
          ++compared;
        }
    }
  }
  Outcome o;
  o.pass = worst < 1e-12;
  o.detail = fmt("%zu probabilities compared, max abs difference %.3e", compared, worst);
  return o;
}

struct Trained {
  Vocabulary vocab;
  LabelVocabulary labels;
  std::unique_ptr<SgmModel> model;
  TrainReport report;
};

Trained train_on(const std::vector<RawRecord>& train, const std::vector<RawRecord>& valid,
                 const TrainConfig& tc, const ModelConfig& mc, const ExampleOptions& options,
                 std::uint64_t model_seed) {
  Trained t;
  t.vocab = build_vocab(train, 50000);
  t.labels = build_label_vocab(train);
  auto train_ex = examples_for(train, t.vocab, t.labels, options);
  auto valid_ex = examples_for(valid, t.vocab, t.labels);
  t.model = std::make_unique<SgmModel>(mc, t.vocab.size(), t.labels.label_count(), model_seed);
  t.report = fit(*t.model, train_ex, valid_ex, tc);
  return t;
}

Outcome overfit_sanity() {
  auto start = std::chrono::steady_clock::now();
  auto corpus = overfit_corpus(61);
  TrainConfig tc;
  tc.epochs = 200;
  tc.seed = 61;
  Trained t = train_on(corpus, corpus, tc, ModelConfig{}, ExampleOptions{}, 62);
  auto examples = examples_for(corpus, t.vocab, t.labels);
  MetricsReport greedy = evaluate_greedy(*t.model, examples, default_max_steps(examples));
  MetricsReport beam = evaluate_beam(*t.model, examples, 5, default_max_steps(examples));
  double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::size_t first_perfect = 0;
  for (std::size_t e = 0; e < t.report.valid_f1.size(); ++e)
    if (t.report.valid_f1[e] == 1.0) {
      first_perfect = e + 1;
      break;
    }
  Outcome o;
  // Training-set scores are those of the selected checkpoint under the
  // validation decoder (greedy); beam scores are reported alongside.
  o.pass = t.vocab.token_count() == 50 && t.labels.label_count() == 5 && greedy.f1 == 1.0 &&
           greedy.hamming_loss == 0.0 && t.report.best_valid_f1 == 1.0 && seconds < 300.0;
  o.detail = fmt("vocab %zu, L=%zu; first F1=1 at epoch %zu; selected epoch %zu: F1 %.4f HL %.4f "
                 "(beam 5: F1 %.4f HL %.4f); %.1fs",
                 t.vocab.token_count(), t.labels.label_count(), first_perfect,
                 t.report.selected_epoch, greedy.f1, greedy.hamming_loss, beam.f1,
                 beam.hamming_loss, seconds);
  return o;
}

// Probability given to beta at the step right after the decoder emits alpha
// along its own greedy path; empty when alpha is never emitted.
std::optional<double> beta_after_alpha(SgmModel& model, std::span<const int> tokens, int alpha, int beta) {
  Tape tape(false);
  EncoderOutput enc = model.encode(tape, tokens, Phase::eval, nullptr);
  DecoderState state = model.initial_state(tape);
  bool after_alpha = false;
  for (std::size_t t = 0; t < model.output_classes(); ++t) {
    StepOutput out = model.step(tape, state, enc, Phase::eval, nullptr);
    const auto& y = tape.value(out.distribution).raw();
    if (after_alpha) return y[beta];
    int cls = static_cast<int>(argmax_class(y));
    if (cls == model.eos()) return std::nullopt;
    after_alpha = cls == alpha;
    state = model.emit(out.state, cls);
  }
  return std::nullopt;
}

TrainConfig synthetic_train_config(std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = 40;
  tc.seed = seed;
  return tc;
}

Outcome correlation_capture() {
  std::size_t passed = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto train = correlation_corpus(100 * seed + 1, {.records = 240});
    auto valid = correlation_corpus(100 * seed + 2, {.records = 30});
    auto held = correlation_corpus(100 * seed + 3, {.records = 60});
    Trained t = train_on(train, valid, synthetic_train_config(seed), ModelConfig{},
                         ExampleOptions{}, seed);
    int alpha = t.labels.id(kAlpha), beta = t.labels.id(kBeta);
    double lowest = 1.0;
    std::size_t inputs = 0, emitted = 0;
    for (const auto& rec : held) {
      if (std::find(rec.labels.begin(), rec.labels.end(), kAlpha) == rec.labels.end()) continue;
      auto tokens = encode_text(rec.text, t.vocab, 500);
      ++inputs;
      if (auto p = beta_after_alpha(*t.model, tokens, alpha, beta)) {
        lowest = std::min(lowest, *p);
        ++emitted;
      }
    }
    bool ok = emitted > 0 && lowest > 0.9;
    passed += ok;
    per_seed += fmt("%s%.3f(%zu/%zu)", per_seed.empty() ? "" : " ", lowest, emitted, inputs);
  }
  Outcome o;
  o.pass = passed >= 8;
  o.detail = fmt("%zu/10 seeds with P(beta|alpha) > 0.9 wherever alpha is emitted on held-out alpha inputs; "
                 "per-seed minimum (alpha emitted/inputs): %s",
                 passed, per_seed.c_str());
  return o;
}

Outcome ablation_direction() {
  double sorted_sum = 0.0, shuffled_sum = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto train = correlation_corpus(100 * seed + 11, {.records = 240});
    auto valid = correlation_corpus(100 * seed + 12, {.records = 30});
    auto test = correlation_corpus(100 * seed + 13, {.records = 60});
    double f1[2];
    for (int shuffled = 0; shuffled < 2; ++shuffled) {
      AblationFlags flags;
      flags.shuffle_labels = shuffled == 1;
      Pipeline pipe = apply_ablation(ModelConfig{}, ExampleOptions{}, flags, seed);
      Trained t = train_on(train, valid, synthetic_train_config(seed), pipe.model, pipe.examples, seed);
      auto test_ex = examples_for(test, t.vocab, t.labels);
      f1[shuffled] = evaluate_beam(*t.model, test_ex, 5, default_max_steps(test_ex)).f1;
    }
    sorted_sum += f1[0];
    shuffled_sum += f1[1];
    per_seed += fmt("%s%.3f/%.3f", per_seed.empty() ? "" : " ", f1[0], f1[1]);
  }
  Outcome o;
  o.pass = sorted_sum / 5 >= shuffled_sum / 5;
  o.detail = fmt("mean test micro-F1 sorted %.4f vs shuffled %.4f (per seed sorted/shuffled: %s)",
                 sorted_sum / 5, shuffled_sum / 5, per_seed.c_str());
  return o;
}

Outcome reproducibility() {
  TempDir dir("accept_repro");
  auto corpus = overfit_corpus(91);
  write_jsonl(dir.file("train.jsonl"), corpus);
  RunConfig cfg;
  cfg.train_path = dir.file("train.jsonl");
  cfg.valid_path = dir.file("train.jsonl");
  cfg.train.epochs = 4;
  cfg.train.seed = 91;
  cfg.model.dropout = 0.2;
  cfg.model.embedding_size = 16;
  cfg.model.encoder_hidden = 16;
  cfg.model.decoder_hidden = 16;

  cfg.checkpoint_path = dir.file("model.ckpt");
  cmd_train(cfg);
  std::string a = read_file(cfg.checkpoint_path);
  TrainOutcome first = cmd_train(cfg);
  std::string b = read_file(cfg.checkpoint_path);
  bool identical = !a.empty() && a == b;

  Checkpoint loaded = load_checkpoint(cfg.checkpoint_path);
  std::size_t probes = 0, differing = 0;
  for (const auto& rec : corpus) {
    auto tokens = encode_text(rec.text, first.vocab, 500);
    DecodeResult before = beam_search(*first.model, tokens, 3, 6);
    DecodeResult after = beam_search(*loaded.model, tokens, 3, 6);
    auto path = before.sequence;
    auto d0 = distributions_along(*first.model, tokens, path);
    auto d1 = distributions_along(*loaded.model, tokens, path);
    ++probes;
    if (before.sequence != after.sequence || before.log_prob != after.log_prob || d0 != d1)
      ++differing;
  }
  Outcome o;
  o.pass = identical && differing == 0;
  o.detail = fmt("checkpoints %s (%zu bytes); %zu/%zu probe inputs differ after round trip",
                 identical ? "byte-identical" : "DIFFER", a.size(), differing, probes);
  return o;
}

Outcome attention_traces() {
  RngStream rng(101);
  std::size_t rows = 0, bad = 0;
  double worst = 0.0;
  for (std::size_t run = 0; run < 200; ++run) {
    std::size_t labels = 1 + rng.below(5);
    SgmModel model = toy_model(30, labels, 5, 4000 + run, 1.0);
    std::size_t m = 1 + rng.below(12);
    std::vector<int> tokens = random_tokens(30, m, 8000 + run);
    std::vector<std::string> text(m);
    for (std::size_t i = 0; i < m; ++i) text[i] = "w" + std::to_string(tokens[i]);
    DecodeResult decoded = beam_search(model, tokens, 3, labels + 1);
    AttentionTrace trace = export_attention(model, tokens, decoded.sequence, text);
    std::size_t real = extract_label_set(decoded.sequence, model.eos()).size();
    if (trace.rows.size() != real) ++bad;
    for (const auto& row : trace.rows) {
      ++rows;
      double sum = std::accumulate(row.weights.begin(), row.weights.end(), 0.0);
      worst = std::max(worst, std::abs(sum - 1.0));
      if (row.weights.size() != m || !(std::abs(sum - 1.0) <= 1e-9)) ++bad;
    }
  }

  // The same through the predict command on padded-length inputs.
  TempDir dir("accept_attn");
  auto corpus = overfit_corpus(102);
  write_jsonl(dir.file("train.jsonl"), corpus);
  RunConfig cfg;
  cfg.train_path = cfg.valid_path = dir.file("train.jsonl");
  cfg.checkpoint_path = dir.file("m.ckpt");
  cfg.train.epochs = 30;
  cfg.max_len = 6;
  cmd_train(cfg);
  cfg.input_path = dir.file("train.jsonl");
  cfg.output_path = dir.file("pred.jsonl");
  cfg.attn_path = dir.file("attn.jsonl");
  cmd_predict(cfg);
  std::size_t cli_rows = 0;
  std::istringstream lines(read_file(cfg.attn_path));
  for (std::string line; std::getline(lines, line);) {
    auto j = nlohmann::json::parse(line);
    std::size_t input = j["input"].get<std::size_t>();
    std::size_t expected = std::min<std::size_t>(6, tokenize(corpus[input].text).size());
    auto weights = j["weights"].get<std::vector<double>>();
    double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    worst = std::max(worst, std::abs(sum - 1.0));
    if (weights.size() != expected || j["tokens"].size() != expected || !(std::abs(sum - 1.0) <= 1e-9))
      ++bad;
    ++cli_rows;
  }
  Outcome o;
  o.pass = bad == 0 && rows > 0 && cli_rows > 0;
  o.detail = fmt("%zu library rows + %zu exported rows, %zu violations, max |sum-1| %.2e", rows,
                 cli_rows, bad, worst);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", gradient_correctness},
      {2, "masked-softmax guarantee", masked_softmax_guarantee},
      {3, "beam oracle equivalence", beam_oracle},
      {4, "metric oracle equivalence", metric_oracle},
      {5, "global-embedding consistency", ge_consistency},
      {6, "overfit sanity", overfit_sanity},
      {7, "correlation capture", correlation_capture},
      {8, "ablation direction (sorting vs shuffled)", ablation_direction},
      {9, "reproducibility", reproducibility},
      {10, "attention traces", attention_traces},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("[%s] %d. %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
