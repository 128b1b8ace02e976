#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sgm/model.hpp"
#include "sgm/trainer.hpp"

namespace sgm {

enum class Command { build_vocab, train, evaluate, predict, ablate };

std::string to_string(Command command);

// Everything a command needs. Serialised as flat `key=value` lines; the
// same format is accepted by --config and embedded in checkpoints.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  AblationFlags ablation;

  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string input_path;
  std::string vocab_path;
  std::string labels_path;
  std::string checkpoint_path;
  std::string output_path;
  std::string report_path;
  std::string attn_path;

  std::size_t vocab_size = 50000;
  std::size_t max_len = 500;
  std::size_t beam_size = 5;
  std::size_t max_steps = 0;  // 0: derived from the training data
  bool lls_buckets = false;
  bool greedy = false;
  std::vector<double> lambda_list;
  std::vector<std::string> variants;

  // Numeric ranges plus the inputs each command requires; nothing is read.
  void validate(Command command) const;
  // Model configuration with ablation flags applied.
  ModelConfig effective_model() const;

  std::string to_kv() const;
  static RunConfig from_kv(std::string_view text);
  // Overlays the keys present in `text` onto this configuration.
  void apply_kv(std::string_view text);
};

std::map<std::string, std::string> parse_kv(std::string_view text);

}  // namespace sgm
