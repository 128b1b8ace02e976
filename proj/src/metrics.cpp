#include "sgm/metrics.hpp"

#include <algorithm>

#include "sgm/errors.hpp"

namespace sgm {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DataError("metrics: " + std::to_string(a) + " predictions for " + std::to_string(b) +
                    " references");
  }
}

}  // namespace

LabelSet make_label_set(std::span<const int> labels) {
  LabelSet s(labels.begin(), labels.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

ConfusionTotals confusion_totals(std::span<const LabelSet> predicted, std::span<const LabelSet> truth) {
  check_lengths(predicted.size(), truth.size());
  ConfusionTotals t;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const LabelSet& p = predicted[i];
    const LabelSet& r = truth[i];
    std::size_t common = 0;
    auto a = p.begin();
    auto b = r.begin();
    while (a != p.end() && b != r.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        ++common, ++a, ++b;
      }
    }
    t.true_positives += common;
    t.false_positives += p.size() - common;
    t.false_negatives += r.size() - common;
  }
  return t;
}

double hamming_loss(std::span<const LabelSet> predicted, std::span<const LabelSet> truth,
                    std::size_t label_count) {
  check_lengths(predicted.size(), truth.size());
  if (predicted.empty()) throw DataError("hamming loss of an empty dataset");
  if (label_count == 0) throw ConfigError("hamming loss needs at least one label");
  for (const auto* sets : {&predicted, &truth}) {
    for (const LabelSet& s : *sets) {
      for (int l : s) {
        if (l < 0 || static_cast<std::size_t>(l) >= label_count) {
          throw DataError("label " + std::to_string(l) + " outside label space of " +
                          std::to_string(label_count));
        }
      }
    }
  }
  const ConfusionTotals t = confusion_totals(predicted, truth);
  const double wrong = static_cast<double>(t.false_positives + t.false_negatives);
  return wrong / (static_cast<double>(predicted.size()) * static_cast<double>(label_count));
}

MicroScores micro_prf(const ConfusionTotals& t) {
  MicroScores s;
  const double tp = static_cast<double>(t.true_positives);
  if (t.true_positives + t.false_positives > 0) {
    s.precision = tp / static_cast<double>(t.true_positives + t.false_positives);
  }
  if (t.true_positives + t.false_negatives > 0) {
    s.recall = tp / static_cast<double>(t.true_positives + t.false_negatives);
  }
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

MicroScores micro_prf(std::span<const LabelSet> predicted, std::span<const LabelSet> truth) {
  return micro_prf(confusion_totals(predicted, truth));
}

MetricsReport evaluate_sets(std::span<const LabelSet> predicted, std::span<const LabelSet> truth,
                            std::size_t label_count) {
  MetricsReport r;
  r.instances = predicted.size();
  r.hamming_loss = hamming_loss(predicted, truth, label_count);
  r.totals = confusion_totals(predicted, truth);
  const MicroScores s = micro_prf(r.totals);
  r.precision = s.precision;
  r.recall = s.recall;
  r.f1 = s.f1;
  return r;
}

MetricsReport bucket_by_lls(std::span<const LabelSet> predicted, std::span<const LabelSet> truth,
                            std::size_t label_count) {
  check_lengths(predicted.size(), truth.size());
  if (truth.empty()) throw DataError("cannot bucket an empty dataset");
  MetricsReport global = evaluate_sets(predicted, truth, label_count);
  std::map<std::size_t, std::pair<std::vector<LabelSet>, std::vector<LabelSet>>> groups;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& g = groups[truth[i].size()];
    g.first.push_back(predicted[i]);
    g.second.push_back(truth[i]);
  }
  for (const auto& [lls, g] : groups) {
    global.by_label_count.emplace(lls, evaluate_sets(g.first, g.second, label_count));
  }
  return global;
}

}  // namespace sgm
