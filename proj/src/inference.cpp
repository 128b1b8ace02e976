#include "sgm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <json.hpp>

#include "sgm/corpus.hpp"
#include "sgm/errors.hpp"

namespace sgm {

namespace {

void check_decode_args(std::span<const int> tokens, std::size_t max_steps) {
  if (tokens.empty()) throw DataError("cannot decode an empty token sequence");
  if (max_steps < 1) throw ConfigError("max_steps must be at least 1");
}

}  // namespace

bool ranks_before(double score_a, std::span<const int> a, double score_b, std::span<const int> b) {
  if (score_a != score_b) return score_a > score_b;
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

DecodeResult greedy_decode(SgmModel& model, std::span<const int> tokens, std::size_t max_steps) {
  check_decode_args(tokens, max_steps);
  Tape tape(false);
  const EncoderOutput enc = model.encode(tape, tokens, Phase::eval, nullptr);
  DecoderState state = model.initial_state(tape);
  DecodeResult result;
  const int eos = model.eos();
  for (std::size_t t = 0; t < max_steps; ++t) {
    StepOutput out = model.step(tape, state, enc, Phase::eval, nullptr);
    const auto y = tape.value(out.distribution).values();
    const int cls = static_cast<int>(argmax_class(y));
    const double lp = std::log(y[static_cast<std::size_t>(cls)]);
    result.sequence.push_back(cls);
    result.step_log_probs.push_back(lp);
    result.log_prob += lp;
    if (cls == eos) return result;
    state = model.emit(std::move(out.state), cls);
  }
  StepOutput out = model.step(tape, state, enc, Phase::eval, nullptr);
  const double lp = std::log(tape.value(out.distribution)[static_cast<std::size_t>(eos)]);
  result.sequence.push_back(eos);
  result.step_log_probs.push_back(lp);
  result.log_prob += lp;
  return result;
}

namespace {

struct Hypothesis {
  std::vector<int> sequence;
  std::vector<double> step_log_probs;
  double score = 0.0;
  DecoderState state;
};

struct Expansion {
  std::size_t parent;
  int cls;
  double score;
  std::vector<int> sequence;
  double log_prob;
};

}  // namespace

DecodeResult beam_search(SgmModel& model, std::span<const int> tokens, std::size_t beam_size,
                         std::size_t max_steps) {
  check_decode_args(tokens, max_steps);
  if (beam_size < 1) throw ConfigError("beam size must be at least 1");
  Tape tape(false);
  const EncoderOutput enc = model.encode(tape, tokens, Phase::eval, nullptr);
  const int eos = model.eos();

  std::vector<Hypothesis> alive(1);
  alive[0].state = model.initial_state(tape);
  std::vector<Hypothesis> finished;

  for (std::size_t t = 0; t < max_steps && !alive.empty() && finished.size() < beam_size; ++t) {
    std::vector<StepOutput> outputs;
    std::vector<Expansion> expansions;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      outputs.push_back(model.step(tape, alive[h].state, enc, Phase::eval, nullptr));
      const auto y = tape.value(outputs.back().distribution).values();
      for (std::size_t c = 0; c < y.size(); ++c) {
        if (!(y[c] > 0.0)) continue;  // masked
        const double lp = std::log(y[c]);
        Expansion e{h, static_cast<int>(c), alive[h].score + lp, alive[h].sequence, lp};
        e.sequence.push_back(static_cast<int>(c));
        expansions.push_back(std::move(e));
      }
    }
    std::sort(expansions.begin(), expansions.end(), [](const Expansion& a, const Expansion& b) {
      return ranks_before(a.score, a.sequence, b.score, b.sequence);
    });
    if (expansions.size() > beam_size) expansions.resize(beam_size);

    std::vector<Hypothesis> next;
    for (Expansion& e : expansions) {
      Hypothesis h;
      h.sequence = std::move(e.sequence);
      h.step_log_probs = alive[e.parent].step_log_probs;
      h.step_log_probs.push_back(e.log_prob);
      h.score = e.score;
      if (e.cls == eos) {
        finished.push_back(std::move(h));
      } else {
        h.state = model.emit(outputs[e.parent].state, e.cls);
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
  }

  if (finished.size() < beam_size) {
    for (Hypothesis& h : alive) {
      StepOutput out = model.step(tape, h.state, enc, Phase::eval, nullptr);
      const double lp = std::log(tape.value(out.distribution)[static_cast<std::size_t>(eos)]);
      h.sequence.push_back(eos);
      h.step_log_probs.push_back(lp);
      h.score += lp;
      finished.push_back(std::move(h));
    }
  }

  const auto best = std::min_element(finished.begin(), finished.end(),
                                     [](const Hypothesis& a, const Hypothesis& b) {
                                       return ranks_before(a.score, a.sequence, b.score, b.sequence);
                                     });
  DecodeResult result;
  result.sequence = std::move(best->sequence);
  result.step_log_probs = std::move(best->step_log_probs);
  result.log_prob = best->score;
  return result;
}

std::vector<int> extract_label_set(std::span<const int> sequence, int eos) {
  std::vector<int> out;
  std::unordered_set<int> seen;
  for (int c : sequence) {
    if (c == eos) continue;
    if (seen.insert(c).second) out.push_back(c);
  }
  return out;
}

AttentionTrace export_attention(SgmModel& model, std::span<const int> tokens,
                                std::span<const int> sequence,
                                std::span<const std::string> token_text) {
  if (token_text.size() != tokens.size()) {
    throw ShapeError("export_attention: " + std::to_string(token_text.size()) +
                     " token strings for " + std::to_string(tokens.size()) + " tokens");
  }
  Tape tape(false);
  const EncoderOutput enc = model.encode(tape, tokens, Phase::eval, nullptr);
  DecoderState state = model.initial_state(tape);
  AttentionTrace trace;
  trace.tokens.assign(token_text.begin(), token_text.end());
  for (int cls : sequence) {
    if (cls == model.eos()) break;
    StepOutput out = model.step(tape, state, enc, Phase::eval, nullptr);
    const auto w = tape.value(out.attention).values();
    trace.rows.push_back({cls, std::vector<double>(w.begin(), w.end())});
    state = model.emit(std::move(out.state), cls);
  }
  return trace;
}

std::string attention_jsonl(const AttentionTrace& trace, const LabelVocabulary& labels,
                            std::optional<std::size_t> input_index) {
  std::string out;
  for (const AttentionRow& row : trace.rows) {
    nlohmann::ordered_json j;
    if (input_index) j["input"] = *input_index;
    j["label"] = labels.name(row.label);
    j["tokens"] = trace.tokens;
    j["weights"] = row.weights;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace sgm
