#pragma once

// Brute-force classification metrics straight from label vectors, one class
// at a time, with no confusion matrix in between.

#include <cstdint>
#include <vector>

#include "ppdl/metrics.hpp"
#include "ppdl/rng.hpp"

namespace oracle {

struct Metrics {
  std::vector<double> precision, recall, f1;
  std::vector<std::uint64_t> support;
  double accuracy = 0;
  double macro_p = 0, macro_r = 0, macro_f1 = 0;
  double weighted_p = 0, weighted_r = 0, weighted_f1 = 0;
};

inline Metrics brute_force_metrics(const std::vector<std::uint32_t>& truth, const std::vector<std::uint32_t>& pred,
                                   std::uint32_t k) {
  Metrics m;
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == pred[i];
  m.accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());
  for (std::uint32_t c = 0; c < k; ++c) {
    std::uint64_t tp = 0, predicted = 0, actual = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      tp += truth[i] == c && pred[i] == c;
      predicted += pred[i] == c;
      actual += truth[i] == c;
    }
    const double p = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    const double r = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    m.precision.push_back(p);
    m.recall.push_back(r);
    m.f1.push_back(p + r > 0 ? 2 * p * r / (p + r) : 0.0);
    m.support.push_back(actual);
  }
  const double n = static_cast<double>(truth.size());
  for (std::uint32_t c = 0; c < k; ++c) {
    m.macro_p += m.precision[c];
    m.macro_r += m.recall[c];
    m.macro_f1 += m.f1[c];
    const double w = static_cast<double>(m.support[c]);
    m.weighted_p += w * m.precision[c];
    m.weighted_r += w * m.recall[c];
    m.weighted_f1 += w * m.f1[c];
  }
  m.macro_p /= k;
  m.macro_r /= k;
  m.macro_f1 /= k;
  m.weighted_p /= n;
  m.weighted_r /= n;
  m.weighted_f1 /= n;
  return m;
}

// Returns true when every field of `r` equals the brute-force value exactly.
inline bool report_matches(const ppdl::metrics::ClassificationReport& r, const Metrics& m) {
  if (r.per_class.size() != m.support.size()) return false;
  for (std::size_t c = 0; c < m.support.size(); ++c) {
    const auto& s = r.per_class[c];
    if (s.precision != m.precision[c] || s.recall != m.recall[c] || s.f1 != m.f1[c] || s.support != m.support[c]) {
      return false;
    }
  }
  return r.accuracy == m.accuracy && r.macro_avg.precision == m.macro_p && r.macro_avg.recall == m.macro_r &&
         r.macro_avg.f1 == m.macro_f1 && r.weighted_avg.precision == m.weighted_p &&
         r.weighted_avg.recall == m.weighted_r && r.weighted_avg.f1 == m.weighted_f1;
}

// Random label vectors of length [1, 50] over K in [1, 5] classes.
struct LabelCase {
  std::uint32_t k;
  std::vector<std::uint32_t> truth, pred;
};

inline LabelCase random_label_case(std::uint64_t seed) {
  ppdl::Rng rng(seed);
  LabelCase c;
  c.k = static_cast<std::uint32_t>(1 + rng.below(5));
  const std::size_t n = 1 + rng.below(50);
  for (std::size_t i = 0; i < n; ++i) {
    c.truth.push_back(static_cast<std::uint32_t>(rng.below(c.k)));
    // bias toward correct predictions so the reports are not all noise
    c.pred.push_back(rng.uniform() < 0.5 ? c.truth.back() : static_cast<std::uint32_t>(rng.below(c.k)));
  }
  return c;
}

}  // namespace oracle
