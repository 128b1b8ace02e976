#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace sgm {

// Sorted, duplicate-free label ids.
using LabelSet = std::vector<int>;

LabelSet make_label_set(std::span<const int> labels);

struct ConfusionTotals {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

ConfusionTotals confusion_totals(std::span<const LabelSet> predicted, std::span<const LabelSet> truth);

// Fraction of the N * L instance-label pairs on which prediction and truth disagree.
double hamming_loss(std::span<const LabelSet> predicted, std::span<const LabelSet> truth,
                    std::size_t label_count);

struct MicroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Micro-averaged scores from pooled counts; a zero denominator gives 0.
MicroScores micro_prf(std::span<const LabelSet> predicted, std::span<const LabelSet> truth);
MicroScores micro_prf(const ConfusionTotals& totals);

struct MetricsReport {
  double hamming_loss = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t instances = 0;
  ConfusionTotals totals;
  // Keyed by reference label-set size; filled only on request.
  std::map<std::size_t, MetricsReport> by_label_count;
};

MetricsReport evaluate_sets(std::span<const LabelSet> predicted, std::span<const LabelSet> truth,
                            std::size_t label_count);

// Global report with one sub-report per reference label-set size.
// Throws DataError on an empty dataset.
MetricsReport bucket_by_lls(std::span<const LabelSet> predicted, std::span<const LabelSet> truth,
                            std::size_t label_count);

}  // namespace sgm
