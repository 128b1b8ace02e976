#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgm/model.hpp"

namespace sgm {

class LabelVocabulary;

// A decoded path. `sequence` holds the emitted classes (bos excluded) and
// always ends with eos; `step_log_probs[t]` is ln y_t of the class chosen at
// step t and `log_prob` their sum.
struct DecodeResult {
  std::vector<int> sequence;
  std::vector<double> step_log_probs;
  double log_prob = 0.0;
};

// Argmax decoding under the model's mask. After `max_steps` steps without
// eos the path is closed by appending eos with its log-probability from one
// further step.
DecodeResult greedy_decode(SgmModel& model, std::span<const int> tokens, std::size_t max_steps);

// Beam search over the L + 1 output classes. Each step keeps the best
// `beam_size` expansions (raw summed log-probability; ties prefer shorter,
// then lexicographically smaller class sequences); eos-terminated ones move
// to the candidate set. Stops once `beam_size` candidates are finished or
// after `max_steps` steps, when survivors are closed with eos as in
// greedy_decode. Returns the best candidate under the same ordering.
DecodeResult beam_search(SgmModel& model, std::span<const int> tokens, std::size_t beam_size,
                         std::size_t max_steps);

// Strict weak ordering used for ranking hypotheses: true when `a` ranks
// before `b`.
bool ranks_before(double score_a, std::span<const int> a, double score_b, std::span<const int> b);

// Labels in emission order with eos dropped and repeats removed.
std::vector<int> extract_label_set(std::span<const int> sequence, int eos);

struct AttentionRow {
  int label = 0;
  std::vector<double> weights;  // one per source token
};

struct AttentionTrace {
  std::vector<std::string> tokens;
  std::vector<AttentionRow> rows;  // emission order, real labels only
};

// Replays `sequence` through the decoder and records alpha_t for each
// emitted real label. `token_text` names the source positions and must be
// as long as `tokens`.
AttentionTrace export_attention(SgmModel& model, std::span<const int> tokens,
                                std::span<const int> sequence,
                                std::span<const std::string> token_text);

// One JSON object per row: {"label": ..., "tokens": [...], "weights": [...]},
// prefixed by "input": <index> when an input index is given.
std::string attention_jsonl(const AttentionTrace& trace, const LabelVocabulary& labels,
                            std::optional<std::size_t> input_index = std::nullopt);

}  // namespace sgm
