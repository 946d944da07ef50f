#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace abplab {

/// Outcome of one verification suite.
///
/// Slacks are normalized by a per-sample scale so that one absolute
/// tolerance applies across operators of very different magnitudes; the
/// normalization in use is recorded in `scale_note`. `passed` is
/// `min_slack >= -tolerance` unless the suite was skipped.
struct CheckReport {
  std::string suite;
  std::string op;
  nlohmann::json params = nlohmann::json::object();
  long samples = 0;
  double min_slack = 0.0;
  nlohmann::json witness = nullptr;
  double tolerance = 0.0;
  std::string scale_note;
  bool passed = false;
  std::string skipped;  // non-empty: skipped with this reason, counts as not passed
  std::vector<std::string> notes;
  nlohmann::json extra = nlohmann::json::object();
  // Wall time is kept out of the JSON so identical runs serialize identically.
  double elapsed_seconds = 0.0;

  /// Sets `passed` from min_slack, tolerance and the skip reason.
  void finalize();

  nlohmann::json to_json() const;
};

/// Running minimum over samples. Ties keep the lexicographically smaller
/// witness dump, which makes merged parallel sweeps order independent.
class SlackTracker {
 public:
  void offer(double slack, const nlohmann::json& witness);
  void merge(const SlackTracker& other);
  bool empty() const { return count_ == 0; }
  long count() const { return count_; }
  double min_slack() const { return min_; }
  const nlohmann::json& witness() const { return witness_; }
  void write_to(CheckReport& r) const;

 private:
  long count_ = 0;
  double min_ = 0.0;
  nlohmann::json witness_ = nullptr;
  std::string witness_dump_;
};

/// Serializes a double so it reads back bit-identically; non-finite values
/// become strings ("inf", "-inf", "nan") because JSON has no such numbers.
nlohmann::json json_number(double v);

/// CSV header and row for summary.csv.
std::string summary_csv_header();
std::string summary_csv_row(const CheckReport& r);

/// Aggregate several report.json documents into one CSV: one row per suite,
/// ordered by (suite, operator), duplicate ids suffixed "#2", "#3", ... in
/// input order. The witness column is "<source>#/suites/<i>/witness".
std::string merge_reports(const std::vector<std::pair<std::string, nlohmann::json>>& reports);

}  // namespace abplab
