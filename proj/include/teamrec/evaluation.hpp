#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "teamrec/error.hpp"
#include "teamrec/textio.hpp"

namespace teamrec {

// Confusion matrix over a fixed, ordered label set.  Rows are predicted
// labels, columns are actual labels, so a row margin yields precision and a
// column margin yields recall.
struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::int64_t>> counts;  // counts[predicted][actual]

  explicit ConfusionMatrix(std::vector<std::string> label_set = {}) : labels(std::move(label_set)) {
    if (labels.empty()) throw InvalidArgument("confusion matrix needs at least one label");
    counts.assign(labels.size(), std::vector<std::int64_t>(labels.size(), 0));
  }

  std::size_t size() const { return labels.size(); }

  std::size_t index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return i;
    throw InvalidArgument("label '" + label + "' is not in the confusion matrix label set");
  }

  void add(const std::string& predicted, const std::string& actual, std::int64_t n = 1) {
    counts[index_of(predicted)][index_of(actual)] += n;
  }

  std::int64_t row_total(std::size_t r) const {
    std::int64_t s = 0;
    for (std::size_t c = 0; c < size(); ++c) s += counts[r][c];
    return s;
  }
  std::int64_t col_total(std::size_t c) const {
    std::int64_t s = 0;
    for (std::size_t r = 0; r < size(); ++r) s += counts[r][c];
    return s;
  }
  std::int64_t total() const {
    std::int64_t s = 0;
    for (std::size_t r = 0; r < size(); ++r) s += row_total(r);
    return s;
  }
  std::int64_t diagonal() const {
    std::int64_t s = 0;
    for (std::size_t r = 0; r < size(); ++r) s += counts[r][r];
    return s;
  }

  // Fraction of predictions in row r that were correct; empty row -> no value.
  std::optional<double> precision(std::size_t r) const {
    const std::int64_t n = row_total(r);
    if (n == 0) return std::nullopt;
    return static_cast<double>(counts[r][r]) / static_cast<double>(n);
  }

  // Fraction of actuals in column c that were recovered; empty column -> no value.
  std::optional<double> recall(std::size_t c) const {
    const std::int64_t n = col_total(c);
    if (n == 0) return std::nullopt;
    return static_cast<double>(counts[c][c]) / static_cast<double>(n);
  }

  double accuracy() const {
    const std::int64_t n = total();
    if (n == 0) throw InvalidArgument("confusion matrix is empty");
    return static_cast<double>(diagonal()) / static_cast<double>(n);
  }

  // Mean recall over the columns that have at least one actual sample.
  double macro_recall() const {
    double sum = 0.0;
    int defined = 0;
    for (std::size_t c = 0; c < size(); ++c) {
      if (const auto r = recall(c)) {
        sum += *r;
        ++defined;
      }
    }
    if (defined == 0) throw InvalidArgument("confusion matrix is empty");
    return sum / defined;
  }
};

inline ConfusionMatrix evaluate(const std::vector<std::string>& labels,
                                const std::vector<std::pair<std::string, std::string>>& pred_actual) {
  ConfusionMatrix cm(labels);
  for (const auto& [pred, actual] : pred_actual) cm.add(pred, actual);
  return cm;
}

namespace detail {

inline std::string fmt_pct(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", *v * 100.0);
  return buf;
}

}  // namespace detail

// Aligned text table: one row per predicted label, one column per actual
// label, row precision on the right, column recall along the bottom.
inline std::string format_confusion_text(const ConfusionMatrix& cm) {
  const std::size_t n = cm.size();
  std::vector<std::vector<std::string>> cells;  // header + n rows + recall row
  std::vector<std::string> head{"predicted \\ actual"};
  for (const auto& l : cm.labels) head.push_back(l);
  head.push_back("precision");
  cells.push_back(head);
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<std::string> row{cm.labels[r]};
    for (std::size_t c = 0; c < n; ++c) row.push_back(std::to_string(cm.counts[r][c]));
    row.push_back(detail::fmt_pct(cm.precision(r)));
    cells.push_back(row);
  }
  std::vector<std::string> rec{"recall"};
  for (std::size_t c = 0; c < n; ++c) rec.push_back(detail::fmt_pct(cm.recall(c)));
  rec.push_back(detail::fmt_pct(cm.accuracy()));
  cells.push_back(rec);

  std::vector<std::size_t> width(n + 2, 0);
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());

  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << "  ";
      // label column left-aligned, numbers right-aligned
      const std::size_t pad = width[i] - row[i].size();
      if (i == 0) {
        out << row[i] << std::string(pad, ' ');
      } else {
        out << std::string(pad, ' ') << row[i];
      }
    }
    out << '\n';
  }
  return out.str();
}

inline std::string format_confusion_csv(const ConfusionMatrix& cm) {
  const std::size_t n = cm.size();
  std::ostringstream out;
  out << "predicted\\actual";
  for (const auto& l : cm.labels) out << ',' << l;
  out << ",precision\n";
  for (std::size_t r = 0; r < n; ++r) {
    out << cm.labels[r];
    for (std::size_t c = 0; c < n; ++c) out << ',' << cm.counts[r][c];
    out << ',' << detail::fmt_pct(cm.precision(r)) << '\n';
  }
  out << "recall";
  for (std::size_t c = 0; c < n; ++c) out << ',' << detail::fmt_pct(cm.recall(c));
  out << ',' << detail::fmt_pct(cm.accuracy()) << '\n';
  return out.str();
}

inline void save_confusion(const ConfusionMatrix& cm, const std::filesystem::path& text_path,
                           const std::filesystem::path& csv_path) {
  detail::spit(text_path, format_confusion_text(cm));
  detail::spit(csv_path, format_confusion_csv(cm));
}

}  // namespace teamrec
