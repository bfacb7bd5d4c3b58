#include "ppdl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "ppdl/error.hpp"

namespace ppdl::metrics {

using ojson = nlohmann::ordered_json;

namespace {

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

double f1_of(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) {
    for (auto c : row) t += c;
  }
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t k) const {
  std::uint64_t t = 0;
  for (auto c : counts.at(k)) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t k) const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += row.at(k);
  return t;
}

ConfusionMatrix confusion(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> predicted,
                          const std::vector<std::string>& classes) {
  if (truth.size() != predicted.size()) {
    throw Error(Errc::LabelMismatch, "truth has " + std::to_string(truth.size()) + " labels, predictions " +
                                         std::to_string(predicted.size()));
  }
  const std::size_t k = classes.size();
  ConfusionMatrix cm{classes, std::vector<std::vector<std::uint64_t>>(k, std::vector<std::uint64_t>(k, 0))};
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (truth[t] >= k || predicted[t] >= k) throw Error(Errc::LabelMismatch, "label outside class range");
    ++cm.counts[truth[t]][predicted[t]];
  }
  return cm;
}

ClassificationReport aggregate(std::vector<std::string> classes, std::vector<ClassScores> per_class) {
  ClassificationReport r;
  r.classes = std::move(classes);
  r.per_class = std::move(per_class);
  const double k = static_cast<double>(r.per_class.size());
  for (const auto& s : r.per_class) r.total += s.support;
  const double total = static_cast<double>(r.total);
  for (const auto& s : r.per_class) {
    const double w = static_cast<double>(s.support);
    r.macro_avg.precision += s.precision;
    r.macro_avg.recall += s.recall;
    r.macro_avg.f1 += s.f1;
    r.weighted_avg.precision += w * s.precision;
    r.weighted_avg.recall += w * s.recall;
    r.weighted_avg.f1 += w * s.f1;
  }
  r.macro_avg = Averages{r.macro_avg.precision / k, r.macro_avg.recall / k, r.macro_avg.f1 / k};
  r.weighted_avg = Averages{ratio(r.weighted_avg.precision, total), ratio(r.weighted_avg.recall, total),
                            ratio(r.weighted_avg.f1, total)};
  r.accuracy = r.weighted_avg.recall;
  return r;
}

ClassificationReport report(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw Error(Errc::EmptyEvaluation, "confusion matrix is empty");
  const std::size_t k = cm.classes.size();
  std::vector<ClassScores> per_class(k);
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    trace += cm.counts[c][c];
    auto& s = per_class[c];
    s.support = cm.row_sum(c);
    s.precision = ratio(tp, static_cast<double>(cm.col_sum(c)));
    s.recall = ratio(tp, static_cast<double>(s.support));
    s.f1 = f1_of(s.precision, s.recall);
  }
  ClassificationReport r = aggregate(cm.classes, std::move(per_class));
  // exact count ratio rather than the summed weighted recall
  r.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  return r;
}

ComparisonReport compare(const ClassificationReport& plain, const ClassificationReport& encrypted,
                         double threshold) {
  if (plain.classes != encrypted.classes) throw Error(Errc::IncomparableReports, "class lists differ");
  ComparisonReport c;
  c.classes = plain.classes;
  c.plain_accuracy = plain.accuracy;
  c.encrypted_accuracy = encrypted.accuracy;
  c.accuracy_gap = plain.accuracy - encrypted.accuracy;
  for (std::size_t k = 0; k < plain.classes.size(); ++k) {
    c.f1_deltas.push_back(encrypted.per_class.at(k).f1 - plain.per_class.at(k).f1);
  }
  c.threshold = threshold;
  // tolerance for decimal inputs such as 0.942 - 0.932
  c.passed = std::abs(c.accuracy_gap) <= threshold + 1e-12;
  return c;
}

std::string format_report_table(const ClassificationReport& r) {
  std::size_t width = 12;
  for (const auto& c : r.classes) width = std::max(width, c.size());
  const int w = static_cast<int>(width) + 2;
  std::ostringstream os;
  os << std::left << std::setw(w) << "" << std::right << std::setw(10) << "precision" << std::setw(10) << "recall"
     << std::setw(10) << "f1-score" << std::setw(10) << "support" << '\n';
  for (std::size_t k = 0; k < r.classes.size(); ++k) {
    const auto& s = r.per_class[k];
    os << std::left << std::setw(w) << r.classes[k] << std::right << std::setw(10) << fixed3(s.precision)
       << std::setw(10) << fixed3(s.recall) << std::setw(10) << fixed3(s.f1) << std::setw(10) << s.support << '\n';
  }
  os << '\n';
  os << std::left << std::setw(w) << "Accuracy" << std::right << std::setw(10) << "" << std::setw(10) << ""
     << std::setw(10) << fixed3(r.accuracy) << std::setw(10) << r.total << '\n';
  auto avg_row = [&](const char* name, const Averages& a) {
    os << std::left << std::setw(w) << name << std::right << std::setw(10) << fixed3(a.precision) << std::setw(10)
       << fixed3(a.recall) << std::setw(10) << fixed3(a.f1) << std::setw(10) << r.total << '\n';
  };
  avg_row("Macro avg", r.macro_avg);
  avg_row("Weighted avg", r.weighted_avg);
  return os.str();
}

std::string format_confusion(const ConfusionMatrix& cm) {
  std::size_t width = 6;
  for (const auto& c : cm.classes) width = std::max(width, c.size());
  const int w = static_cast<int>(width) + 2;
  std::ostringstream os;
  os << std::left << std::setw(w) << "true\\pred";
  for (const auto& c : cm.classes) os << std::right << std::setw(w) << c;
  os << '\n';
  for (std::size_t i = 0; i < cm.classes.size(); ++i) {
    os << std::left << std::setw(w) << cm.classes[i];
    for (auto v : cm.counts[i]) os << std::right << std::setw(w) << v;
    os << '\n';
  }
  return os.str();
}

std::string format_comparison(const ComparisonReport& c) {
  std::ostringstream os;
  os << "plain accuracy:     " << fixed3(c.plain_accuracy) << '\n'
     << "encrypted accuracy: " << fixed3(c.encrypted_accuracy) << '\n'
     << "accuracy gap:       " << fixed3(c.accuracy_gap) << " (threshold " << fixed3(c.threshold) << ", "
     << (c.passed ? "PASS" : "FAIL") << ")\n"
     << "f1 delta (encrypted - plain):\n";
  for (std::size_t k = 0; k < c.classes.size(); ++k) {
    os << "  " << std::left << std::setw(20) << c.classes[k] << std::right << std::showpos << fixed3(c.f1_deltas[k])
       << std::noshowpos << '\n';
  }
  return os.str();
}

namespace {

ojson averages_json(const Averages& a) {
  ojson j;
  j["precision"] = a.precision;
  j["recall"] = a.recall;
  j["f1"] = a.f1;
  return j;
}

Averages averages_from(const ojson& j) {
  return Averages{j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

}  // namespace

std::string evaluation_to_json(const ClassificationReport& r, const ConfusionMatrix& cm) {
  ojson j;
  j["format"] = "ppdl-evaluation";
  j["version"] = 1;
  j["classes"] = r.classes;
  auto& pc = j["per_class"] = ojson::array();
  for (const auto& s : r.per_class) {
    ojson row;
    row["precision"] = s.precision;
    row["recall"] = s.recall;
    row["f1"] = s.f1;
    row["support"] = s.support;
    pc.push_back(row);
  }
  j["accuracy"] = r.accuracy;
  j["total"] = r.total;
  j["macro_avg"] = averages_json(r.macro_avg);
  j["weighted_avg"] = averages_json(r.weighted_avg);
  j["confusion"] = cm.counts;
  return j.dump(2) + "\n";
}

std::string comparison_to_json(const ComparisonReport& c) {
  ojson j;
  j["format"] = "ppdl-comparison";
  j["version"] = 1;
  j["classes"] = c.classes;
  j["plain_accuracy"] = c.plain_accuracy;
  j["encrypted_accuracy"] = c.encrypted_accuracy;
  j["accuracy_gap"] = c.accuracy_gap;
  j["f1_deltas"] = c.f1_deltas;
  j["threshold"] = c.threshold;
  j["passed"] = c.passed;
  return j.dump(2) + "\n";
}

ClassificationReport report_from_json(std::string_view text) {
  try {
    const auto j = ojson::parse(text);
    if (j.at("format").get<std::string>() != "ppdl-evaluation") {
      throw Error(Errc::IncomparableReports, "not an evaluation report");
    }
    ClassificationReport r;
    r.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& row : j.at("per_class")) {
      r.per_class.push_back(ClassScores{row.at("precision").get<double>(), row.at("recall").get<double>(),
                                        row.at("f1").get<double>(), row.at("support").get<std::uint64_t>()});
    }
    if (r.per_class.size() != r.classes.size()) throw Error(Errc::IncomparableReports, "per-class rows mismatch");
    r.accuracy = j.at("accuracy").get<double>();
    r.total = j.at("total").get<std::uint64_t>();
    r.macro_avg = averages_from(j.at("macro_avg"));
    r.weighted_avg = averages_from(j.at("weighted_avg"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::IncomparableReports, std::string("malformed report: ") + e.what());
  }
}

ConfusionMatrix confusion_from_json(std::string_view text) {
  try {
    const auto j = ojson::parse(text);
    ConfusionMatrix cm;
    cm.classes = j.at("classes").get<std::vector<std::string>>();
    cm.counts = j.at("confusion").get<std::vector<std::vector<std::uint64_t>>>();
    return cm;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::IncomparableReports, std::string("malformed report: ") + e.what());
  }
}

std::string confusion_to_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "true\\pred";
  for (const auto& c : cm.classes) os << ',' << c;
  os << '\n';
  for (std::size_t i = 0; i < cm.classes.size(); ++i) {
    os << cm.classes[i];
    for (auto v : cm.counts[i]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

}  // namespace ppdl::metrics
