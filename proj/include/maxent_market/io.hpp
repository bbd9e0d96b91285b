#pragma once

// File formats: wide price CSV, spin CSV, model JSON and series CSV.

#include "approx_inverse.hpp"
#include "core.hpp"
#include "interaction_graph.hpp"
#include "market_analytics.hpp"
#include "model.hpp"
#include "spin_data.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace maxent {

using Json = nlohmann::ordered_json;

namespace csv {

inline std::vector<std::string> splitLine(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    std::string_view f = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
    out.emplace_back(f);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool isMissing(const std::string& f) { return f.empty() || f == "NA" || f == "NaN" || f == "nan"; }

inline std::optional<double> parseNumber(const std::string& f) {
  double v = 0.0;
  const char* end = f.data() + f.size();
  const char* begin = f.data();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

inline std::string lineError(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

}  // namespace csv

struct IngestResult {
  PriceSeries prices;
  std::size_t rowsRead = 0;
  std::vector<std::string> droppedDates;
  std::vector<std::size_t> droppedLines;
};

/// Wide price CSV: header date,<label>_open,<label>_close,...  Rows with a
/// missing value are dropped and reported; anything else malformed throws
/// InputError naming the line.
inline IngestResult readPriceCsv(std::istream& in) {
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (line.find_first_not_of(" \t\r") == std::string::npos) throw InputError("empty price file");
  const auto header = csv::splitLine(line);
  if (header.empty() || header[0] != "date")
    throw InputError(csv::lineError(lineNo, "first header column must be 'date'"));

  std::vector<std::string> labels;
  std::map<std::string, std::pair<int, int>> columns;  // label -> (open col, close col)
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto& h = header[c];
    const auto us = h.rfind('_');
    if (us == std::string::npos || us == 0)
      throw InputError(csv::lineError(lineNo, "column '" + h + "' is not <label>_open or <label>_close"));
    const std::string label = h.substr(0, us), kind = h.substr(us + 1);
    if (kind != "open" && kind != "close")
      throw InputError(csv::lineError(lineNo, "column '" + h + "' is not <label>_open or <label>_close"));
    auto [it, inserted] = columns.try_emplace(label, -1, -1);
    if (inserted) labels.push_back(label);
    int& slot = kind == "open" ? it->second.first : it->second.second;
    if (slot >= 0) throw InputError(csv::lineError(lineNo, "duplicate column '" + h + "'"));
    slot = static_cast<int>(c);
  }
  if (labels.empty()) throw InputError(csv::lineError(lineNo, "no price columns"));
  for (const auto& l : labels)
    if (columns[l].first < 0 || columns[l].second < 0)
      throw InputError(csv::lineError(lineNo, "asset '" + l + "' needs both _open and _close columns"));

  IngestResult r;
  std::vector<std::vector<double>> open, close;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++r.rowsRead;
    const auto f = csv::splitLine(line);
    if (f.size() != header.size())
      throw InputError(csv::lineError(lineNo, "expected " + std::to_string(header.size()) + " fields, got " +
                                                  std::to_string(f.size())));
    if (f[0].empty()) throw InputError(csv::lineError(lineNo, "missing date"));
    bool missing = false;
    std::vector<double> o(labels.size()), c(labels.size());
    for (std::size_t a = 0; a < labels.size(); ++a) {
      for (auto [col, dst] : {std::pair{columns[labels[a]].first, &o}, std::pair{columns[labels[a]].second, &c}}) {
        const auto& field = f[static_cast<std::size_t>(col)];
        if (csv::isMissing(field)) {
          missing = true;
          continue;
        }
        const auto v = csv::parseNumber(field);
        if (!v) throw InputError(csv::lineError(lineNo, "cannot parse '" + field + "' as a price"));
        (*dst)[a] = *v;
      }
    }
    if (missing) {
      r.droppedDates.push_back(f[0]);
      r.droppedLines.push_back(lineNo);
      continue;
    }
    for (std::size_t a = 0; a < labels.size(); ++a)
      if (!std::isfinite(o[a]) || !std::isfinite(c[a]) || o[a] <= 0.0 || c[a] <= 0.0)
        throw InputError(csv::lineError(lineNo, "nonpositive or nonfinite price for '" + labels[a] + "'"));
    if (!r.prices.dates.empty() && !(r.prices.dates.back() < f[0]))
      throw InputError(csv::lineError(lineNo, "date '" + f[0] + "' is not after '" + r.prices.dates.back() + "'"));
    r.prices.dates.push_back(f[0]);
    open.push_back(std::move(o));
    close.push_back(std::move(c));
  }
  if (open.empty()) throw InputError("price file has no complete rows");
  r.prices.labels = labels;
  r.prices.open.resize(static_cast<Eigen::Index>(open.size()), static_cast<Eigen::Index>(labels.size()));
  r.prices.close.resizeLike(r.prices.open);
  for (std::size_t t = 0; t < open.size(); ++t)
    for (std::size_t a = 0; a < labels.size(); ++a) {
      r.prices.open(t, a) = open[t][a];
      r.prices.close(t, a) = close[t][a];
    }
  return r;
}

/// Writes prices with 15 significant digits.
inline void writePriceCsv(std::ostream& out, const PriceSeries& p) {
  out << "date";
  for (const auto& l : p.labels) out << ',' << l << "_open," << l << "_close";
  out << '\n';
  char buf[32];
  for (std::size_t t = 0; t < p.days(); ++t) {
    out << (p.dates.empty() ? std::to_string(t) : p.dates[t]);
    for (std::size_t a = 0; a < p.assets(); ++a)
      for (double v : {p.open(t, a), p.close(t, a)}) {
        std::snprintf(buf, sizeof buf, "%.15g", v);
        out << ',' << buf;
      }
    out << '\n';
  }
}

/// Spin CSV: header date,<label>,...; entries 1 or -1. The date column is
/// left empty for undated matrices.
inline void writeSpinCsv(std::ostream& out, const SpinMatrix& s) {
  out << "date";
  for (const auto& l : s.labels()) out << ',' << l;
  out << '\n';
  for (std::size_t t = 0; t < s.rows(); ++t) {
    if (s.hasDates()) out << s.date(t);
    for (auto v : s.row(t)) out << (v > 0 ? ",1" : ",-1");
    out << '\n';
  }
}

inline SpinMatrix readSpinCsv(std::istream& in) {
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (line.find_first_not_of(" \t\r") == std::string::npos) throw InputError("empty spin file");
  const auto header = csv::splitLine(line);
  if (header.size() < 2 || header[0] != "date")
    throw InputError(csv::lineError(lineNo, "spin header must be date,<label>,..."));
  std::vector<std::string> labels(header.begin() + 1, header.end());
  std::vector<std::int8_t> spins;
  std::vector<std::string> dates;
  bool anyDate = false;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = csv::splitLine(line);
    if (f.size() != header.size())
      throw InputError(csv::lineError(lineNo, "expected " + std::to_string(header.size()) + " fields, got " +
                                                  std::to_string(f.size())));
    dates.push_back(f[0]);
    anyDate = anyDate || !f[0].empty();
    for (std::size_t c = 1; c < f.size(); ++c) {
      if (f[c] == "1" || f[c] == "+1") spins.push_back(1);
      else if (f[c] == "-1") spins.push_back(-1);
      else throw InputError(csv::lineError(lineNo, "spin entry '" + f[c] + "' is not 1 or -1"));
    }
  }
  if (spins.empty()) throw InputError("spin file has no rows");
  if (!anyDate) dates.clear();
  return SpinMatrix(std::move(labels), std::move(spins), std::move(dates));
}

inline Json modelToJson(const CouplingModel& m, const std::vector<std::string>& warnings = {}) {
  Json j;
  j["labels"] = m.labels;
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.J.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.J.cols(); ++k) row.push_back(m.J(i, k));
    rows.push_back(std::move(row));
  }
  j["J"] = std::move(rows);
  j["h"] = std::vector<double>(m.h.data(), m.h.data() + m.h.size());
  j["diagonal_meaningful"] = m.diagonalMeaningful;
  j["warnings"] = warnings;
  return j;
}

inline CouplingModel modelFromJson(const nlohmann::json& j) {
  try {
    CouplingModel m;
    m.labels = j.at("labels").get<std::vector<std::string>>();
    const auto h = j.at("h").get<std::vector<double>>();
    const auto n = static_cast<Eigen::Index>(h.size());
    m.h = Eigen::Map<const Vector>(h.data(), n);
    const auto& rows = j.at("J");
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n) throw InputError("J must have N rows");
    m.J.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto row = rows[static_cast<std::size_t>(i)].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != n) throw InputError("J must be N x N");
      for (Eigen::Index k = 0; k < n; ++k) m.J(i, k) = row[static_cast<std::size_t>(k)];
    }
    m.diagonalMeaningful = j.value("diagonal_meaningful", false);
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model JSON: ") + e.what());
  }
}

inline Json momentsToJson(const MomentSet& m) {
  Json j;
  j["q"] = std::vector<double>(m.q.data(), m.q.data() + m.q.size());
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.Q.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.Q.cols(); ++k) row.push_back(m.Q(i, k));
    rows.push_back(std::move(row));
  }
  j["Q"] = std::move(rows);
  j["sample_count"] = m.sampleCount;
  return j;
}

/// Series CSV: one '# {json}' metadata line, then window_start,value rows.
/// Gaps are written as an empty value.
inline void writeSeriesCsv(std::ostream& out, const TimeSeriesReport& r, const Json& metadata) {
  out << "# " << metadata.dump() << '\n';
  out << "window_start,value\n";
  for (std::size_t k = 0; k < r.values.size(); ++k) {
    out << r.startLabels[k] << ',';
    if (r.values[k]) out << formatExact(*r.values[k]);
    out << '\n';
  }
}

struct SeriesFile {
  Json metadata;
  std::vector<std::string> starts;
  std::vector<std::optional<double>> values;
};

inline SeriesFile readSeriesCsv(std::istream& in) {
  SeriesFile f;
  std::string line;
  std::size_t lineNo = 0;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw InputError("series file must start with '# {metadata}'");
  ++lineNo;
  try {
    f.metadata = Json::parse(line.substr(2));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(csv::lineError(lineNo, std::string("bad metadata: ") + e.what()));
  }
  if (!std::getline(in, line)) throw InputError("series file has no header");
  ++lineNo;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    const auto fields = csv::splitLine(line);
    if (fields.size() != 2) throw InputError(csv::lineError(lineNo, "expected 2 fields"));
    f.starts.push_back(fields[0]);
    if (fields[1].empty()) {
      f.values.emplace_back();
    } else {
      const auto v = csv::parseNumber(fields[1]);
      if (!v) throw InputError(csv::lineError(lineNo, "bad value '" + fields[1] + "'"));
      f.values.push_back(*v);
    }
  }
  return f;
}

inline std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void writeFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
  if (!out) throw InputError("failed writing '" + path + "'");
}

}  // namespace maxent
