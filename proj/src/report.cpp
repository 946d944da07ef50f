#include "abplab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

namespace abplab {

void CheckReport::finalize() { passed = skipped.empty() && min_slack >= -tolerance; }

nlohmann::json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::json CheckReport::to_json() const {
  nlohmann::json j;
  j["suite"] = suite;
  j["operator"] = op;
  j["params"] = params;
  j["samples"] = samples;
  j["min_slack"] = json_number(min_slack);
  j["tolerance"] = json_number(tolerance);
  j["scale"] = scale_note;
  j["witness"] = witness;
  j["pass"] = passed;
  if (!skipped.empty()) j["skipped"] = skipped;
  if (!notes.empty()) j["notes"] = notes;
  if (!extra.empty()) j["extra"] = extra;
  return j;
}

void SlackTracker::offer(double slack, const nlohmann::json& witness) {
  ++count_;
  if (count_ == 1 || slack < min_ || std::isnan(slack)) {
    min_ = slack;
    witness_ = witness;
    witness_dump_ = witness.dump();
    return;
  }
  if (slack == min_) {
    std::string dump = witness.dump();
    if (dump < witness_dump_) {
      witness_ = witness;
      witness_dump_ = std::move(dump);
    }
  }
}

void SlackTracker::merge(const SlackTracker& other) {
  if (other.count_ == 0) return;
  const long before = count_;
  offer(other.min_, other.witness_);
  count_ = before + other.count_;
}

void SlackTracker::write_to(CheckReport& r) const {
  r.samples = count_;
  r.min_slack = count_ > 0 ? min_ : 0.0;
  r.witness = witness_;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string json_to_cell(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return fmt_double(j.get<double>());
  return j.dump();
}

}  // namespace

std::string summary_csv_header() { return "suite,operator,samples,min_slack,tol,pass"; }

std::string summary_csv_row(const CheckReport& r) {
  std::ostringstream os;
  os << csv_escape(r.suite) << ',' << csv_escape(r.op) << ',' << r.samples << ','
     << fmt_double(r.min_slack) << ',' << fmt_double(r.tolerance) << ','
     << (r.passed ? "pass" : "fail");
  return os.str();
}

std::string merge_reports(const std::vector<std::pair<std::string, nlohmann::json>>& reports) {
  struct Row {
    std::string suite, op, samples, min_slack, tol, pass, witness;
  };
  std::vector<Row> rows;
  std::map<std::string, int> seen;
  for (const auto& [source, doc] : reports) {
    const auto& suites = doc.at("suites");
    for (std::size_t i = 0; i < suites.size(); ++i) {
      const auto& s = suites[i];
      Row row;
      row.suite = s.at("suite").get<std::string>();
      row.op = s.value("operator", std::string());
      // Collisions on (suite, operator) are numbered in input order.
      const int count = ++seen[row.suite + '\x1f' + row.op];
      if (count > 1) row.suite += "#" + std::to_string(count);
      row.samples = json_to_cell(s.value("samples", nlohmann::json(0)));
      row.min_slack = json_to_cell(s.value("min_slack", nlohmann::json(0.0)));
      row.tol = json_to_cell(s.value("tolerance", nlohmann::json(0.0)));
      row.pass = s.value("pass", false) ? "pass" : "fail";
      row.witness = source + "#/suites/" + std::to_string(i) + "/witness";
      rows.push_back(std::move(row));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.suite, a.op) < std::tie(b.suite, b.op);
  });
  std::ostringstream os;
  os << summary_csv_header() << ",witness\n";
  for (const auto& r : rows) {
    os << csv_escape(r.suite) << ',' << csv_escape(r.op) << ',' << r.samples << ',' << r.min_slack
       << ',' << r.tol << ',' << r.pass << ',' << csv_escape(r.witness) << '\n';
  }
  return os.str();
}

}  // namespace abplab
