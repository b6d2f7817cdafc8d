#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "hetprior/error.hpp"

namespace hetprior {

struct StudyRecord {
  std::string analysis_id;
  std::string study_id;
  double estimate = 0.0;
  double std_err = 1.0;
  std::int64_t seq = 0;

  friend bool operator==(const StudyRecord&, const StudyRecord&) = default;
};

struct MetaAnalysis {
  std::string id;
  std::vector<StudyRecord> studies;

  std::size_t size() const noexcept { return studies.size(); }
  /// Recency of the analysis: the largest seq among its records.
  std::int64_t recency() const {
    std::int64_t r = studies.front().seq;
    for (const auto& s : studies) r = std::max(r, s.seq);
    return r;
  }
  friend bool operator==(const MetaAnalysis&, const MetaAnalysis&) = default;
};

/// Historical corpus: analyses in first-appearance order.
class MetaAnalysisCollection {
 public:
  MetaAnalysisCollection() = default;
  /// Validates the invariants (k_j >= 1, unique ids, unique (analysis, study)
  /// pairs, finite estimates, positive finite standard errors).
  explicit MetaAnalysisCollection(std::vector<MetaAnalysis> analyses)
      : analyses_(std::move(analyses)) {
    std::set<std::string> ids;
    for (const auto& a : analyses_) {
      if (a.studies.empty()) throw ArgumentError("analysis '" + a.id + "' has no studies");
      if (!ids.insert(a.id).second) throw ArgumentError("duplicate analysis_id '" + a.id + "'");
      std::set<std::string> sids;
      for (const auto& s : a.studies) {
        if (s.analysis_id != a.id) throw ArgumentError("study analysis_id mismatch in '" + a.id + "'");
        if (!sids.insert(s.study_id).second) {
          throw ArgumentError("duplicate study_id '" + s.study_id + "' in analysis '" + a.id + "'");
        }
        if (!std::isfinite(s.estimate)) throw ArgumentError("non-finite estimate in '" + a.id + "'");
        if (!(std::isfinite(s.std_err) && s.std_err > 0.0)) {
          throw ArgumentError("std_err must be positive and finite in '" + a.id + "'");
        }
      }
    }
  }

  const std::vector<MetaAnalysis>& analyses() const noexcept { return analyses_; }
  std::size_t size() const noexcept { return analyses_.size(); }
  const MetaAnalysis& operator[](std::size_t j) const { return analyses_.at(j); }
  std::size_t total_studies() const noexcept {
    std::size_t n = 0;
    for (const auto& a : analyses_) n += a.size();
    return n;
  }
  friend bool operator==(const MetaAnalysisCollection&, const MetaAnalysisCollection&) = default;

 private:
  std::vector<MetaAnalysis> analyses_;
};

namespace detail {

/// Splits one CSV line; supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw RecordError(line_no, "unterminated quoted field");
  out.push_back(std::move(field));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace detail

/// Parses `analysis_id,study_id,estimate,std_err[,seq]` CSV (columns in any
/// order). Records are grouped by analysis_id in first-appearance order; a
/// missing seq defaults to the 0-based data-row index.
inline MetaAnalysisCollection parse_collection(std::string_view text) {
  static const std::vector<std::string> required = {"analysis_id", "study_id", "estimate", "std_err"};
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= text.size();) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    lines.push_back(text.substr(pos, end - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  std::size_t first = 0;
  while (first < lines.size() && detail::trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw FormatError("empty input: missing header row");
  std::string_view header_line = lines[first];
  if (header_line.starts_with("\xEF\xBB\xBF")) header_line.remove_prefix(3);

  std::map<std::string, std::size_t> col;
  const auto header = detail::split_csv_line(header_line, first + 1);
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name(detail::trim(header[i]));
    if (name != "seq" && std::find(required.begin(), required.end(), name) == required.end()) {
      throw FormatError("unknown column '" + name + "'");
    }
    if (!col.emplace(name, i).second) throw FormatError("duplicate column '" + name + "'");
  }
  for (const auto& r : required) {
    if (!col.contains(r)) throw FormatError("missing column '" + r + "'");
  }
  const bool has_seq = col.contains("seq");

  std::vector<MetaAnalysis> analyses;
  std::map<std::string, std::size_t> index;
  std::set<std::pair<std::string, std::string>> seen;
  std::int64_t row = 0;
  for (std::size_t ln = first + 1; ln < lines.size(); ++ln) {
    if (detail::trim(lines[ln]).empty()) continue;
    const std::size_t line_no = ln + 1;
    const auto f = detail::split_csv_line(lines[ln], line_no);
    if (f.size() != header.size()) {
      throw RecordError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                     std::to_string(f.size()));
    }
    StudyRecord rec;
    rec.analysis_id = std::string(detail::trim(f[col["analysis_id"]]));
    rec.study_id = std::string(detail::trim(f[col["study_id"]]));
    if (rec.analysis_id.empty()) throw RecordError(line_no, "empty analysis_id");
    const auto est = detail::parse_double(f[col["estimate"]]);
    if (!est || !std::isfinite(*est)) throw RecordError(line_no, "estimate is not a finite number");
    const auto se = detail::parse_double(f[col["std_err"]]);
    if (!se || !std::isfinite(*se)) throw RecordError(line_no, "std_err is not a finite number");
    if (!(*se > 0.0)) throw RecordError(line_no, "std_err must be positive");
    rec.estimate = *est;
    rec.std_err = *se;
    rec.seq = row;
    if (has_seq) {
      const auto s = detail::trim(f[col["seq"]]);
      if (!s.empty()) {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
          throw RecordError(line_no, "seq is not an integer");
        }
        rec.seq = v;
      }
    }
    if (!seen.emplace(rec.analysis_id, rec.study_id).second) {
      throw RecordError(line_no, "duplicate (analysis_id, study_id) pair ('" + rec.analysis_id +
                                     "', '" + rec.study_id + "')");
    }
    auto [it, inserted] = index.emplace(rec.analysis_id, analyses.size());
    if (inserted) analyses.push_back(MetaAnalysis{rec.analysis_id, {}});
    analyses[it->second].studies.push_back(std::move(rec));
    ++row;
  }
  if (analyses.empty()) throw FormatError("no data rows");
  return MetaAnalysisCollection(std::move(analyses));
}

/// Writes the collection in the schema read by parse_collection, seq included.
inline std::string serialize_collection(const MetaAnalysisCollection& c) {
  std::string out = "analysis_id,study_id,estimate,std_err,seq\n";
  for (const auto& a : c.analyses()) {
    for (const auto& s : a.studies) {
      out += detail::csv_field(s.analysis_id) + ',' + detail::csv_field(s.study_id) + ',' +
             detail::format_double(s.estimate) + ',' + detail::format_double(s.std_err) + ',' +
             std::to_string(s.seq) + '\n';
    }
  }
  return out;
}

struct ValidationEntry {
  std::string analysis_id;
  std::size_t k = 0;
};

struct ValidationReport {
  std::vector<ValidationEntry> analyses;
  std::size_t n_analyses = 0;
  std::size_t n_studies = 0;
  std::vector<std::string> warnings;
};

inline ValidationReport validate_collection(const MetaAnalysisCollection& c) {
  ValidationReport r;
  r.n_analyses = c.size();
  r.n_studies = c.total_studies();
  for (const auto& a : c.analyses()) {
    r.analyses.push_back({a.id, a.size()});
    if (a.size() == 1) {
      r.warnings.push_back("analysis '" + a.id +
                           "' has a single study and carries almost no heterogeneity information");
    }
  }
  return r;
}

/// The n most recent analyses (largest seq; later file position wins ties),
/// kept in their original order.
inline MetaAnalysisCollection subset_recent(const MetaAnalysisCollection& c, std::size_t n) {
  if (n == 0) throw ArgumentError("subset_recent: n must be positive");
  if (n > c.size()) {
    throw ArgumentError("subset_recent: n = " + std::to_string(n) + " exceeds the " +
                        std::to_string(c.size()) + " analyses available");
  }
  std::vector<std::size_t> order(c.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = c[a].recency(), rb = c[b].recency();
    return ra != rb ? ra > rb : a > b;
  });
  order.resize(n);
  std::sort(order.begin(), order.end());
  std::vector<MetaAnalysis> keep;
  keep.reserve(n);
  for (auto j : order) keep.push_back(c[j]);
  return MetaAnalysisCollection(std::move(keep));
}

}  // namespace hetprior
