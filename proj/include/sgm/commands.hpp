#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sgm/checkpoint.hpp"
#include "sgm/metrics.hpp"
#include "sgm/run_config.hpp"
#include "sgm/trainer.hpp"

namespace sgm {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

struct VocabFiles {
  Vocabulary vocab;
  LabelVocabulary labels;
};

VocabFiles cmd_build_vocab(const RunConfig& config);

struct TrainOutcome {
  TrainReport report;
  Vocabulary vocab;
  LabelVocabulary labels;
  std::unique_ptr<SgmModel> model;
  SelectionRecord record;
};

TrainOutcome cmd_train(const RunConfig& config);

MetricsReport cmd_evaluate(const RunConfig& config);

// Returns the number of input lines processed.
std::size_t cmd_predict(const RunConfig& config);

struct VariantResult {
  std::string name;
  MetricsReport metrics;
  TrainReport report;
  std::string parameter_digest;  // FNV-1a over the trained parameter bytes
};

std::vector<VariantResult> cmd_ablate(const RunConfig& config);

std::string metrics_json(const MetricsReport& report);
std::string ablation_json(const std::vector<VariantResult>& results);
std::string parameter_digest(const ParameterStore& params);

// Parses argv, runs the command and maps errors to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sgm
