#include "sgm/commands.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgm/errors.hpp"
#include "sgm/inference.hpp"
#include "sgm/rng.hpp"

namespace sgm {

using nlohmann::ordered_json;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("failed writing " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ordered_json metrics_to_json(const MetricsReport& r) {
  ordered_json j;
  j["instances"] = r.instances;
  j["hamming_loss"] = r.hamming_loss;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["true_positives"] = r.totals.true_positives;
  j["false_positives"] = r.totals.false_positives;
  j["false_negatives"] = r.totals.false_negatives;
  if (!r.by_label_count.empty()) {
    ordered_json buckets = ordered_json::array();
    for (const auto& [lls, sub] : r.by_label_count) {
      ordered_json b = metrics_to_json(sub);
      b["lls"] = lls;
      buckets.push_back(std::move(b));
    }
    j["lls_buckets"] = std::move(buckets);
  }
  return j;
}

std::vector<Example> examples_for(std::span<const RawRecord> records, const Vocabulary& vocab,
                                  const LabelVocabulary& labels, const ExampleOptions& options,
                                  const std::string& source) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (const auto& l : records[i].labels) {
      if (!labels.contains(l)) {
        throw DataError(source + ": record " + std::to_string(i + 1) + " has label '" + l +
                        "' missing from the label vocabulary");
      }
    }
  }
  return make_examples(records, vocab, labels, options);
}

struct Trained {
  TrainReport report;
  std::unique_ptr<SgmModel> model;
  SelectionRecord record;
};

Trained train_model(const RunConfig& config, const Vocabulary& vocab, const LabelVocabulary& labels,
                    std::span<const RawRecord> train_records,
                    std::span<const RawRecord> valid_records) {
  ExampleOptions base;
  base.max_len = config.max_len;
  const Pipeline pipeline =
      apply_ablation(config.effective_model(), base, config.ablation, config.train.seed);
  const auto train = examples_for(train_records, vocab, labels, pipeline.examples, config.train_path);
  const auto valid = examples_for(valid_records, vocab, labels, base, config.valid_path);

  Trained t;
  t.model = std::make_unique<SgmModel>(pipeline.model, vocab.size(), labels.label_count(),
                                       RngStream(config.train.seed).derive(0).seed());
  TrainConfig tc = config.train;
  tc.max_decode_steps = config.max_steps;
  t.report = fit(*t.model, train, valid, tc);
  t.record.selected_epoch = t.report.selected_epoch;
  t.record.best_valid_f1 = t.report.best_valid_f1;
  t.record.max_steps = config.max_steps > 0 ? config.max_steps : default_max_steps(train);
  return t;
}

VocabFiles vocab_for_training(const RunConfig& config, std::span<const RawRecord> train) {
  if (!config.vocab_path.empty()) {
    return {Vocabulary::deserialize(read_text(config.vocab_path)),
            LabelVocabulary::deserialize(read_text(config.labels_path))};
  }
  return {build_vocab(train, config.vocab_size), build_label_vocab(train)};
}

std::size_t decode_limit(const RunConfig& config, const Checkpoint& ck) {
  if (config.max_steps > 0) return config.max_steps;
  if (ck.record.max_steps > 0) return ck.record.max_steps;
  return ck.labels.label_count() + 1;
}

std::string format_lambda(double l) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", l);
  return buf;
}

}  // namespace

std::string metrics_json(const MetricsReport& report) { return metrics_to_json(report).dump(2); }

std::string parameter_digest(const ParameterStore& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (const Parameter& p : params) {
    for (char c : p.name) mix(static_cast<unsigned char>(c));
    for (double v : p.value.values()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) mix(static_cast<unsigned char>((bits >> (8 * b)) & 0xFF));
    }
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

VocabFiles cmd_build_vocab(const RunConfig& config) {
  config.validate(Command::build_vocab);
  const auto records = load_jsonl(config.train_path);
  VocabFiles files{build_vocab(records, config.vocab_size), build_label_vocab(records)};
  write_text(config.vocab_path, files.vocab.serialize());
  write_text(config.labels_path, files.labels.serialize());
  return files;
}

TrainOutcome cmd_train(const RunConfig& config) {
  config.validate(Command::train);
  const auto train_records = load_jsonl(config.train_path);
  const auto valid_records = load_jsonl(config.valid_path);
  VocabFiles vf = vocab_for_training(config, train_records);
  Trained t = train_model(config, vf.vocab, vf.labels, train_records, valid_records);
  save_checkpoint(config.checkpoint_path, config, vf.vocab, vf.labels, *t.model, t.record);
  if (!config.report_path.empty()) write_text(config.report_path, t.report.to_json() + "\n");
  return {std::move(t.report), std::move(vf.vocab), std::move(vf.labels), std::move(t.model), t.record};
}

MetricsReport cmd_evaluate(const RunConfig& config) {
  config.validate(Command::evaluate);
  Checkpoint ck = load_checkpoint(config.checkpoint_path);
  const auto records = load_jsonl(config.test_path);
  ExampleOptions options;
  options.max_len = ck.config.max_len;
  const auto examples = examples_for(records, ck.vocab, ck.labels, options, config.test_path);
  const std::size_t max_steps = decode_limit(config, ck);
  MetricsReport report;
  if (config.greedy) {
    report = evaluate_greedy(*ck.model, examples, max_steps, config.lls_buckets);
  } else {
    report = evaluate_beam(*ck.model, examples, config.beam_size, max_steps, config.lls_buckets);
  }
  if (!config.output_path.empty()) write_text(config.output_path, metrics_json(report) + "\n");
  return report;
}

std::size_t cmd_predict(const RunConfig& config) {
  config.validate(Command::predict);
  Checkpoint ck = load_checkpoint(config.checkpoint_path);
  const std::size_t max_steps = decode_limit(config, ck);
  std::ifstream in(config.input_path);
  if (!in) throw DataError("cannot read " + config.input_path);
  std::string predictions, traces;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json row;
    try {
      std::istringstream one(line);
      const auto parsed = parse_jsonl(one, config.input_path, false);
      const std::string& text = parsed.at(0).text;
      const auto tokens = encode_text(text, ck.vocab, ck.config.max_len);
      const DecodeResult r = config.greedy
                                 ? greedy_decode(*ck.model, tokens, max_steps)
                                 : beam_search(*ck.model, tokens, config.beam_size, max_steps);
      std::vector<std::string> names;
      for (int l : extract_label_set(r.sequence, ck.model->eos())) names.push_back(ck.labels.name(l));
      row["labels"] = names;
      row["log_probs"] = r.step_log_probs;
      if (!config.attn_path.empty()) {
        auto words = tokenize(text);
        words.resize(tokens.size());
        traces += attention_jsonl(export_attention(*ck.model, tokens, r.sequence, words), ck.labels,
                                  index);
      }
    } catch (const DataError& e) {
      row = ordered_json();
      row["error"] = e.what();
    }
    predictions += row.dump() + "\n";
    ++index;
  }
  write_text(config.output_path, predictions);
  if (!config.attn_path.empty()) write_text(config.attn_path, traces);
  return index;
}

std::vector<VariantResult> cmd_ablate(const RunConfig& config) {
  config.validate(Command::ablate);
  const auto train_records = load_jsonl(config.train_path);
  const auto valid_records = load_jsonl(config.valid_path);
  const auto test_records = load_jsonl(config.test_path);
  const VocabFiles vf = vocab_for_training(config, train_records);
  ExampleOptions options;
  options.max_len = config.max_len;
  const auto test = examples_for(test_records, vf.vocab, vf.labels, options, config.test_path);

  std::vector<std::string> names{"base"};
  std::set<std::string> seen{"base"};
  auto add = [&](const std::string& n) {
    if (seen.insert(n).second) names.push_back(n);
  };
  for (const auto& v : config.variants) add(v);
  for (double l : config.lambda_list) add("lambda=" + format_lambda(l));

  std::vector<VariantResult> results;
  for (const std::string& name : names) {
    RunConfig variant = config;
    if (name == "no_mask") {
      variant.ablation.no_mask = true;
    } else if (name == "shuffle") {
      variant.ablation.shuffle_labels = true;
    } else if (name == "ge_off") {
      variant.model.ge_mode = GlobalEmbeddingMode::off;
    } else if (name == "ge_gate") {
      variant.model.ge_mode = GlobalEmbeddingMode::gate;
    } else if (name.rfind("lambda=", 0) == 0) {
      variant.model.ge_mode = GlobalEmbeddingMode::fixed_lambda;
      variant.model.lambda = std::stod(name.substr(7));
    }
    Trained t = train_model(variant, vf.vocab, vf.labels, train_records, valid_records);
    VariantResult r;
    r.name = name;
    r.report = t.report;
    r.metrics = evaluate_beam(*t.model, test, config.beam_size, t.record.max_steps);
    r.parameter_digest = parameter_digest(t.model->params());
    results.push_back(std::move(r));
  }
  if (!config.output_path.empty()) write_text(config.output_path, ablation_json(results) + "\n");
  return results;
}

std::string ablation_json(const std::vector<VariantResult>& results) {
  ordered_json j = ordered_json::object();
  for (const auto& r : results) {
    ordered_json v;
    v["hamming_loss"] = r.metrics.hamming_loss;
    v["precision"] = r.metrics.precision;
    v["recall"] = r.metrics.recall;
    v["f1"] = r.metrics.f1;
    v["best_valid_f1"] = r.report.best_valid_f1;
    v["selected_epoch"] = r.report.selected_epoch;
    v["parameter_digest"] = r.parameter_digest;
    j[r.name] = std::move(v);
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------

namespace {

void bind_options(CLI::App& cmd, RunConfig& c, std::string& ge_mode) {
  cmd.add_option("--config", "key=value configuration file; flags override its values");
  cmd.add_option("--train", c.train_path, "training JSONL");
  cmd.add_option("--valid", c.valid_path, "validation JSONL");
  cmd.add_option("--test", c.test_path, "test JSONL");
  cmd.add_option("--input", c.input_path, "unlabelled JSONL for prediction");
  cmd.add_option("--vocab", c.vocab_path, "word vocabulary file");
  cmd.add_option("--labels", c.labels_path, "label vocabulary file");
  cmd.add_option("--checkpoint", c.checkpoint_path, "checkpoint file");
  cmd.add_option("--output", c.output_path, "output file");
  cmd.add_option("--report", c.report_path, "training report JSON");
  cmd.add_option("--attn", c.attn_path, "attention trace JSONL");
  cmd.add_option("--vocab-size", c.vocab_size, "maximum word vocabulary size");
  cmd.add_option("--max-len", c.max_len, "document truncation length");
  cmd.add_option("--embedding-size", c.model.embedding_size);
  cmd.add_option("--encoder-hidden", c.model.encoder_hidden);
  cmd.add_option("--decoder-hidden", c.model.decoder_hidden);
  cmd.add_option("--encoder-layers", c.model.encoder_layers);
  cmd.add_option("--decoder-layers", c.model.decoder_layers);
  cmd.add_option("--dropout", c.model.dropout);
  cmd.add_option("--ge-mode", ge_mode, "global embedding: off, gate or lambda");
  cmd.add_option("--lambda", c.model.lambda, "mixture weight for --ge-mode lambda");
  cmd.add_option("--epochs", c.train.epochs);
  cmd.add_option("--batch-size", c.train.batch_size);
  cmd.add_option("--lr", c.train.adam.learning_rate);
  cmd.add_option("--beta1", c.train.adam.beta1);
  cmd.add_option("--beta2", c.train.adam.beta2);
  cmd.add_option("--adam-eps", c.train.adam.epsilon);
  cmd.add_option("--clip-norm", c.train.clip_norm);
  cmd.add_option("--seed", c.train.seed);
  cmd.add_flag("--no-mask", c.ablation.no_mask, "disable the repeated-label mask");
  cmd.add_flag("--shuffle-labels", c.ablation.shuffle_labels, "random label order instead of frequency order");
  cmd.add_option("--beam", c.beam_size, "beam size");
  cmd.add_option("--max-steps", c.max_steps, "decode step limit (0: from training data)");
  cmd.add_flag("--lls-buckets", c.lls_buckets, "add per label-set-size breakdown");
  cmd.add_flag("--greedy", c.greedy, "greedy decoding instead of beam search");
  cmd.add_option("--lambda-list", c.lambda_list, "fixed-lambda variants for ablate")->delimiter(',');
  cmd.add_option("--variants", c.variants, "ablation variants: no_mask, shuffle, ge_off, ge_gate, lambda=<x>")
      ->delimiter(',');
}

std::string find_config(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig config;
  std::string ge_mode;
  CLI::App app{"Sequence-generation multi-label text classifier"};
  app.require_subcommand(1);
  struct Sub {
    Command command;
    const char* description;
  };
  const Sub subs[] = {
      {Command::build_vocab, "build word and label vocabularies from training data"},
      {Command::train, "train a model and write the best checkpoint"},
      {Command::evaluate, "decode a labelled set and report hamming loss and micro P/R/F1"},
      {Command::predict, "decode unlabelled text"},
      {Command::ablate, "train and evaluate ablation variants under one seed"},
  };
  std::vector<std::pair<CLI::App*, Command>> commands;
  for (const Sub& s : subs) {
    CLI::App* cmd = app.add_subcommand(to_string(s.command), s.description);
    bind_options(*cmd, config, ge_mode);
    commands.emplace_back(cmd, s.command);
  }

  try {
    const std::string config_file = find_config(argc, argv);
    if (!config_file.empty()) {
      if (!std::filesystem::is_regular_file(config_file)) {
        throw ConfigError("config file not found: " + config_file);
      }
      config.apply_kv(read_text(config_file));
    }
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitUsage;
    }
    if (!ge_mode.empty()) config.model.ge_mode = parse_global_embedding_mode(ge_mode);

    Command command = Command::train;
    for (const auto& [cmd, c] : commands) {
      if (cmd->parsed()) command = c;
    }
    switch (command) {
      case Command::build_vocab: {
        const VocabFiles f = cmd_build_vocab(config);
        out << "vocabulary: " << f.vocab.token_count() << " tokens, " << f.labels.label_count()
            << " labels\n";
        break;
      }
      case Command::train: {
        const TrainOutcome t = cmd_train(config);
        out << "selected epoch " << t.report.selected_epoch << " (validation micro-F1 "
            << t.report.best_valid_f1 << "), checkpoint " << config.checkpoint_path << "\n";
        break;
      }
      case Command::evaluate: {
        const MetricsReport r = cmd_evaluate(config);
        if (config.output_path.empty()) out << metrics_json(r) << "\n";
        break;
      }
      case Command::predict: {
        const std::size_t n = cmd_predict(config);
        out << n << " predictions written to " << config.output_path << "\n";
        break;
      }
      case Command::ablate: {
        const auto results = cmd_ablate(config);
        if (config.output_path.empty()) out << ablation_json(results) << "\n";
        break;
      }
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace sgm
