#include "sgm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "sgm/errors.hpp"
#include "sgm/rng.hpp"

namespace sgm {

using nlohmann::json;

std::vector<RawRecord> parse_jsonl(std::istream& in, const std::string& source,
                                   bool require_labels) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) -> DataError {
    return DataError(source + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw fail(std::string("malformed JSON (") + e.what() + ")");
    }
    if (!doc.is_object()) throw fail("record is not a JSON object");
    RawRecord rec;
    auto text = doc.find("text");
    if (text == doc.end() || !text->is_string()) throw fail("missing string field \"text\"");
    rec.text = text->get<std::string>();
    if (require_labels && tokenize(rec.text).empty()) throw fail("empty text");
    auto labels = doc.find("labels");
    if (labels != doc.end()) {
      if (!labels->is_array()) throw fail("\"labels\" must be an array of strings");
      std::unordered_set<std::string> seen;
      for (const auto& l : *labels) {
        if (!l.is_string() || l.get<std::string>().empty()) {
          throw fail("\"labels\" must contain non-empty strings");
        }
        auto name = l.get<std::string>();
        if (seen.insert(name).second) rec.labels.push_back(std::move(name));
      }
    }
    if (require_labels && rec.labels.empty()) throw fail("empty label set");
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<RawRecord> load_jsonl(const std::filesystem::path& path, bool require_labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return parse_jsonl(in, path.string(), require_labels);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t b = i, e = j;
    while (b < e && std::ispunct(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e) {
      std::string tok(text.substr(b, e - b));
      for (char& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      tokens.push_back(std::move(tok));
    }
    i = j;
  }
  return tokens;
}

// ---------------------------------------------------------------------------

namespace {

// Counts names and returns them ranked by descending count, ties by first occurrence.
class FrequencyCounter {
 public:
  void add(const std::string& name) {
    auto [it, inserted] = index_.try_emplace(name, counts_.size());
    if (inserted) counts_.push_back({name, 0});
    ++counts_[it->second].count;
  }

  std::vector<FrequencyEntry> ranked() const {
    std::vector<FrequencyEntry> out = counts_;
    std::stable_sort(out.begin(), out.end(),
                     [](const FrequencyEntry& a, const FrequencyEntry& b) { return a.count > b.count; });
    return out;
  }

 private:
  std::vector<FrequencyEntry> counts_;  // first-occurrence order
  std::unordered_map<std::string, std::size_t> index_;
};

std::string serialize_entries(const std::vector<FrequencyEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += e.name;
    out += '\t';
    out += std::to_string(e.count);
    out += '\n';
  }
  return out;
}

std::vector<FrequencyEntry> deserialize_entries(std::string_view text, const char* what) {
  std::vector<FrequencyEntry> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size()) {
      throw DataError(std::string(what) + " line " + std::to_string(line_no) +
                      ": expected '<name>\\t<count>'");
    }
    FrequencyEntry e;
    e.name = std::string(line.substr(0, tab));
    const std::string count(line.substr(tab + 1));
    std::size_t used = 0;
    try {
      e.count = std::stoull(count, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != count.size()) {
      throw DataError(std::string(what) + " line " + std::to_string(line_no) + ": bad count '" +
                      count + "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<FrequencyEntry> ranked) : entries_(std::move(ranked)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!ids_.emplace(entries_[i].name, static_cast<int>(kReserved + i)).second) {
      throw DataError("duplicate vocabulary token '" + entries_[i].name + "'");
    }
  }
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.count(std::string(token)) != 0;
}

const std::string& Vocabulary::token(int id) const {
  static const std::string pad = "<pad>", unk = "<unk>";
  if (id == kPad) return pad;
  if (id == kUnk) return unk;
  if (id < 0 || static_cast<std::size_t>(id) >= size()) {
    throw DataError("token id " + std::to_string(id) + " out of range");
  }
  return entries_[static_cast<std::size_t>(id) - kReserved].name;
}

std::uint64_t Vocabulary::frequency(int id) const {
  if (id < static_cast<int>(kReserved) || static_cast<std::size_t>(id) >= size()) return 0;
  return entries_[static_cast<std::size_t>(id) - kReserved].count;
}

std::string Vocabulary::serialize() const { return serialize_entries(entries_); }

Vocabulary Vocabulary::deserialize(std::string_view text) {
  return Vocabulary(deserialize_entries(text, "vocabulary"));
}

Vocabulary build_vocab(std::span<const RawRecord> train, std::size_t max_size) {
  if (max_size < 1) throw ConfigError("vocabulary size must be at least 1");
  FrequencyCounter counter;
  bool any = false;
  for (const auto& rec : train) {
    for (const auto& tok : tokenize(rec.text)) {
      counter.add(tok);
      any = true;
    }
  }
  if (!any) throw DataError("cannot build a vocabulary from an empty corpus");
  auto ranked = counter.ranked();
  if (ranked.size() > max_size) ranked.resize(max_size);
  return Vocabulary(std::move(ranked));
}

std::vector<int> encode_text(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 1) throw ConfigError("max_len must be at least 1");
  auto tokens = tokenize(text);
  if (tokens.empty()) throw DataError("text is empty after tokenization");
  if (tokens.size() > max_len) tokens.resize(max_len);
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

// ---------------------------------------------------------------------------

LabelVocabulary::LabelVocabulary(std::vector<FrequencyEntry> labels) : entries_(std::move(labels)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!ids_.emplace(entries_[i].name, static_cast<int>(i)).second) {
      throw DataError("duplicate label '" + entries_[i].name + "'");
    }
  }
}

bool LabelVocabulary::contains(std::string_view label) const {
  return ids_.count(std::string(label)) != 0;
}

int LabelVocabulary::id(std::string_view label) const {
  auto it = ids_.find(std::string(label));
  if (it == ids_.end()) throw DataError("unknown label '" + std::string(label) + "'");
  return it->second;
}

const std::string& LabelVocabulary::name(int id) const {
  static const std::string eos_name = "<eos>", bos_name = "<bos>";
  if (id == eos()) return eos_name;
  if (id == bos()) return bos_name;
  if (id < 0 || static_cast<std::size_t>(id) >= entries_.size()) {
    throw DataError("label id " + std::to_string(id) + " out of range");
  }
  return entries_[static_cast<std::size_t>(id)].name;
}

std::uint64_t LabelVocabulary::frequency(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= entries_.size()) {
    throw DataError("label id " + std::to_string(id) + " out of range");
  }
  return entries_[static_cast<std::size_t>(id)].count;
}

std::string LabelVocabulary::serialize() const { return serialize_entries(entries_); }

LabelVocabulary LabelVocabulary::deserialize(std::string_view text) {
  return LabelVocabulary(deserialize_entries(text, "label vocabulary"));
}

LabelVocabulary build_label_vocab(std::span<const RawRecord> train) {
  FrequencyCounter counter;
  for (const auto& rec : train)
    for (const auto& l : rec.labels) counter.add(l);
  auto ranked = counter.ranked();
  if (ranked.empty()) throw DataError("cannot build a label vocabulary from an empty corpus");
  return LabelVocabulary(std::move(ranked));
}

std::vector<int> sort_label_ids(std::span<const int> ids, const LabelVocabulary& vocab) {
  std::vector<int> out(ids.begin(), ids.end());
  for (int id : out) vocab.frequency(id);  // range check
  std::sort(out.begin(), out.end(), [&](int a, int b) {
    const auto fa = vocab.frequency(a), fb = vocab.frequency(b);
    if (fa != fb) return fa > fb;
    return a < b;
  });
  return out;
}

std::vector<int> sort_labels(std::span<const std::string> labels, const LabelVocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(labels.size());
  for (const auto& l : labels) ids.push_back(vocab.id(l));
  return sort_label_ids(ids, vocab);
}

std::vector<int> frame_labels(std::span<const int> ordered, const LabelVocabulary& vocab) {
  std::unordered_set<int> seen;
  std::vector<int> out;
  out.reserve(ordered.size() + 2);
  out.push_back(vocab.bos());
  for (int id : ordered) {
    if (!seen.insert(id).second) {
      throw DataError("duplicate label '" + vocab.name(id) + "' in label sequence");
    }
    out.push_back(id);
  }
  out.push_back(vocab.eos());
  return out;
}

std::vector<int> shuffle_labels(std::span<const int> ordered, RngStream& rng) {
  std::vector<int> out(ordered.begin(), ordered.end());
  rng.shuffle(std::span<int>(out));
  return out;
}

std::vector<Example> make_examples(std::span<const RawRecord> records, const Vocabulary& vocab,
                                   const LabelVocabulary& labels, const ExampleOptions& options) {
  RngStream rng(options.shuffle_seed);
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    Example ex;
    ex.tokens = encode_text(rec.text, vocab, options.max_len);
    auto ordered = sort_labels(rec.labels, labels);
    if (options.shuffle_labels) ordered = shuffle_labels(ordered, rng);
    ex.labels = frame_labels(ordered, labels);
    ex.raw = rec.labels;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Batch> make_batches(std::span<const Example> examples, std::size_t batch_size,
                                RngStream& rng, bool shuffle) {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (shuffle) rng.shuffle(std::span<std::size_t>(order));

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    Batch b;
    std::size_t max_tokens = 0, max_labels = 0;
    for (std::size_t k = start; k < end; ++k) {
      const Example& ex = examples[order[k]];
      b.examples.push_back(&ex);
      max_tokens = std::max(max_tokens, ex.tokens.size());
      max_labels = std::max(max_labels, ex.labels.size());
    }
    for (const Example* ex : b.examples) {
      auto row = ex->tokens;
      b.token_lengths.push_back(row.size());
      row.resize(max_tokens, Vocabulary::kPad);
      b.tokens.push_back(std::move(row));
      auto lab = ex->labels;
      b.label_lengths.push_back(lab.size());
      lab.resize(max_labels, kLabelPad);
      b.labels.push_back(std::move(lab));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

CorpusStats corpus_stats(std::span<const RawRecord> records) {
  CorpusStats s;
  s.samples = records.size();
  std::unordered_set<std::string> labels;
  std::size_t words = 0, label_total = 0;
  for (const auto& r : records) {
    words += tokenize(r.text).size();
    label_total += r.labels.size();
    s.max_labels = std::max(s.max_labels, r.labels.size());
    labels.insert(r.labels.begin(), r.labels.end());
  }
  s.distinct_labels = labels.size();
  if (!records.empty()) {
    s.words_per_sample = static_cast<double>(words) / static_cast<double>(records.size());
    s.labels_per_sample = static_cast<double>(label_total) / static_cast<double>(records.size());
  }
  return s;
}

std::vector<std::vector<RawRecord>> partition(std::span<const RawRecord> records,
                                              std::span<const std::size_t> sizes) {
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  if (total != records.size()) {
    throw ConfigError("partition sizes sum to " + std::to_string(total) + " but corpus has " +
                      std::to_string(records.size()) + " records");
  }
  std::vector<std::vector<RawRecord>> parts;
  std::size_t offset = 0;
  for (std::size_t s : sizes) {
    parts.emplace_back(records.begin() + static_cast<std::ptrdiff_t>(offset),
                       records.begin() + static_cast<std::ptrdiff_t>(offset + s));
    offset += s;
  }
  return parts;
}

}  // namespace sgm
