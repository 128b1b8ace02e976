#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sgm {

class RngStream;

// One line of a JSONL dataset: {"text": "...", "labels": ["...", ...]}.
struct RawRecord {
  std::string text;
  std::vector<std::string> labels;
};

// Reads a JSON-lines dataset. With `require_labels` every record must carry
// a non-empty "labels" array; otherwise the field is optional (prediction
// inputs). Throws DataError naming the file and line of the first bad record.
std::vector<RawRecord> load_jsonl(const std::filesystem::path& path, bool require_labels = true);
std::vector<RawRecord> parse_jsonl(std::istream& in, const std::string& source,
                                   bool require_labels = true);

// Lowercase, split on whitespace, strip ASCII punctuation from token edges.
std::vector<std::string> tokenize(std::string_view text);

// ---------------------------------------------------------------------------

struct FrequencyEntry {
  std::string name;
  std::uint64_t count = 0;
};

// Word vocabulary. Ids 0 and 1 are reserved for padding and unknown words;
// retained tokens follow in rank order (descending training frequency, ties
// by first occurrence).
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr std::size_t kReserved = 2;

  Vocabulary() = default;
  explicit Vocabulary(std::vector<FrequencyEntry> ranked);

  std::size_t size() const { return kReserved + entries_.size(); }
  std::size_t token_count() const { return entries_.size(); }
  int id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  std::uint64_t frequency(int id) const;
  const std::vector<FrequencyEntry>& entries() const { return entries_; }

  // One "token<TAB>count" line per retained token, in id order.
  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<FrequencyEntry> entries_;
  std::unordered_map<std::string, int> ids_;
};

inline bool operator==(const FrequencyEntry& a, const FrequencyEntry& b) {
  return a.name == b.name && a.count == b.count;
}

Vocabulary build_vocab(std::span<const RawRecord> train, std::size_t max_size);

std::vector<int> encode_text(std::string_view text, const Vocabulary& vocab, std::size_t max_len);

// Label space. Real labels take ids 0..L-1 in rank order (descending
// training frequency, ties by first occurrence); eos is L and bos is L+1.
// Only the L real labels and eos are decoder output classes.
class LabelVocabulary {
 public:
  LabelVocabulary() = default;
  explicit LabelVocabulary(std::vector<FrequencyEntry> labels);

  std::size_t label_count() const { return entries_.size(); }
  int eos() const { return static_cast<int>(entries_.size()); }
  int bos() const { return static_cast<int>(entries_.size()) + 1; }
  std::size_t output_classes() const { return entries_.size() + 1; }

  bool contains(std::string_view label) const;
  int id(std::string_view label) const;  // throws DataError when unknown
  const std::string& name(int id) const;
  std::uint64_t frequency(int id) const;
  const std::vector<FrequencyEntry>& entries() const { return entries_; }

  std::string serialize() const;
  static LabelVocabulary deserialize(std::string_view text);

  friend bool operator==(const LabelVocabulary& a, const LabelVocabulary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<FrequencyEntry> entries_;
  std::unordered_map<std::string, int> ids_;
};

LabelVocabulary build_label_vocab(std::span<const RawRecord> train);

// Descending training frequency, ties by ascending id.
std::vector<int> sort_labels(std::span<const std::string> labels, const LabelVocabulary& vocab);
std::vector<int> sort_label_ids(std::span<const int> ids, const LabelVocabulary& vocab);

// [bos, labels..., eos]; throws DataError on duplicates.
std::vector<int> frame_labels(std::span<const int> ordered, const LabelVocabulary& vocab);

// Uniform permutation (Fisher-Yates) driven by rng.
std::vector<int> shuffle_labels(std::span<const int> ordered, RngStream& rng);

// ---------------------------------------------------------------------------

struct Example {
  std::vector<int> tokens;       // truncated token ids, at least one
  std::vector<int> labels;       // [bos, y1..yn, eos]
  std::vector<std::string> raw;  // label names as given in the record

  // Real label ids without the bos/eos frame.
  std::span<const int> targets() const {
    return std::span<const int>(labels).subspan(1, labels.size() - 2);
  }
};

struct ExampleOptions {
  std::size_t max_len = 500;
  // Replace frequency order with a per-example random permutation.
  bool shuffle_labels = false;
  std::uint64_t shuffle_seed = 0;
};

std::vector<Example> make_examples(std::span<const RawRecord> records, const Vocabulary& vocab,
                                   const LabelVocabulary& labels, const ExampleOptions& options);

inline constexpr int kLabelPad = -1;

// Examples plus right-padded id matrices. Padding never feeds the model:
// consumers read rows only up to the recorded true lengths.
struct Batch {
  std::vector<const Example*> examples;
  std::vector<std::vector<int>> tokens;  // padded with Vocabulary::kPad
  std::vector<std::size_t> token_lengths;
  std::vector<std::vector<int>> labels;  // framed sequences padded with kLabelPad
  std::vector<std::size_t> label_lengths;

  std::size_t size() const { return examples.size(); }
};

// Covers every example exactly once. Without `shuffle` corpus order is kept
// and rng is not touched.
std::vector<Batch> make_batches(std::span<const Example> examples, std::size_t batch_size,
                                RngStream& rng, bool shuffle);

// ---------------------------------------------------------------------------

struct CorpusStats {
  std::size_t samples = 0;
  std::size_t distinct_labels = 0;
  double words_per_sample = 0.0;
  double labels_per_sample = 0.0;
  std::size_t max_labels = 0;
};

CorpusStats corpus_stats(std::span<const RawRecord> records);

// Splits records into consecutive, disjoint parts of the given sizes.
std::vector<std::vector<RawRecord>> partition(std::span<const RawRecord> records,
                                              std::span<const std::size_t> sizes);

}  // namespace sgm
