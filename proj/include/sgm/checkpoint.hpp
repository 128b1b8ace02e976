#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

#include "sgm/corpus.hpp"
#include "sgm/model.hpp"
#include "sgm/run_config.hpp"

namespace sgm {

inline constexpr const char* kCheckpointMagic = "SGM-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

struct SelectionRecord {
  std::size_t selected_epoch = 0;
  double best_valid_f1 = 0.0;
  std::size_t max_steps = 0;  // decode limit derived at training time
};

struct Checkpoint {
  RunConfig config;
  Vocabulary vocab;
  LabelVocabulary labels;
  SelectionRecord record;
  std::unique_ptr<SgmModel> model;
};

// Container layout:
//
//   SGM-CHECKPOINT <version>\n
//   section <name> <byte count>\n<bytes>\n        (config, vocab, labels, record)
//   tensor <name> <rank> <dims...>\n<little-endian float64 values>\n
//   adam <step>\n                                  (optional)
//   tensor adam.m/<name> ...  tensor adam.v/<name> ...
//   end\n
//
// Text sections use the key=value and vocabulary-file formats.
std::string serialize_checkpoint(const RunConfig& config, const Vocabulary& vocab,
                                 const LabelVocabulary& labels, const SgmModel& model,
                                 const SelectionRecord& record, bool include_optimizer = true);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config,
                     const Vocabulary& vocab, const LabelVocabulary& labels, const SgmModel& model,
                     const SelectionRecord& record, bool include_optimizer = true);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sgm
