#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ppdl::metrics {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::uint64_t>> counts;

  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t k) const;
  std::uint64_t col_sum(std::size_t k) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::uint64_t support = 0;

  friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

struct Averages {
  double precision = 0;
  double recall = 0;
  double f1 = 0;

  friend bool operator==(const Averages&, const Averages&) = default;
};

struct ClassificationReport {
  std::vector<std::string> classes;
  std::vector<ClassScores> per_class;
  double accuracy = 0;
  std::uint64_t total = 0;
  Averages macro_avg;
  Averages weighted_avg;

  friend bool operator==(const ClassificationReport&, const ClassificationReport&) = default;
};

/// counts[i][j] = #{t : truth[t] = i and predicted[t] = j}. Empty input gives
/// an all-zero matrix. Throws LabelMismatch on length mismatch or labels
/// outside [0, classes.size()).
ConfusionMatrix confusion(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> predicted,
                          const std::vector<std::string>& classes);

/// Precision, recall and f1 are 0 whenever their denominator is 0.
/// Throws EmptyEvaluation when the matrix total is 0.
ClassificationReport report(const ConfusionMatrix& cm);

/// Fills accuracy, macro and support-weighted averages from per-class scores.
/// Accuracy is taken as the support-weighted recall.
ClassificationReport aggregate(std::vector<std::string> classes, std::vector<ClassScores> per_class);

struct ComparisonReport {
  std::vector<std::string> classes;
  double plain_accuracy = 0;
  double encrypted_accuracy = 0;
  double accuracy_gap = 0;          // plain - encrypted
  std::vector<double> f1_deltas;    // encrypted - plain, per class
  double threshold = 0;
  bool passed = false;              // |gap| <= threshold
};

/// Throws IncomparableReports when the class lists differ.
ComparisonReport compare(const ClassificationReport& plain, const ClassificationReport& encrypted,
                         double threshold);

/// Column layout: precision, recall, f1-score, support; then Accuracy,
/// Macro avg and Weighted avg rows. Three decimals.
std::string format_report_table(const ClassificationReport& r);
std::string format_confusion(const ConfusionMatrix& cm);
std::string format_comparison(const ComparisonReport& c);

/// Machine-readable evaluation record: report plus confusion matrix.
std::string evaluation_to_json(const ClassificationReport& r, const ConfusionMatrix& cm);
std::string comparison_to_json(const ComparisonReport& c);
ClassificationReport report_from_json(std::string_view text);
ConfusionMatrix confusion_from_json(std::string_view text);
std::string confusion_to_csv(const ConfusionMatrix& cm);

}  // namespace ppdl::metrics
