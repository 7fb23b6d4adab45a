#pragma once

// Text formats for evaluation:
//   relevance file   query_id<TAB>pos:id1,id2<TAB>junk:id3        (junk field optional)
//   per-query report CSV "query_id,ap"
//   summary          TSV "dataset,model,metric,value" with values to 4 decimals
//   scatter          CSV "query_id,ap_x,ap_y"

#include <sstream>
#include <string>
#include <vector>

#include "ilgen/binary_io.hpp"
#include "ilgen/eval.hpp"
#include "ilgen/text.hpp"

namespace ilgen {

struct RelevanceFile {
  Judgments judgments;
  std::vector<std::string> query_order;
  std::vector<std::string> dropped;  // queries rejected for having no positives
};

namespace detail {

inline std::set<std::string> parse_id_list(std::string_view field, std::string_view prefix, std::size_t line_no) {
  require(field.starts_with(prefix), Errc::format_error,
          "line " + std::to_string(line_no) + ": expected '" + std::string(prefix) + "' field");
  field.remove_prefix(prefix.size());
  std::set<std::string> out;
  if (text::trim(field).empty()) return out;
  for (auto id : text::split(field, ',')) {
    id = text::trim(id);
    require(!id.empty(), Errc::format_error, "line " + std::to_string(line_no) + ": empty id in list");
    out.emplace(id);
  }
  return out;
}

inline void check_csv_id(const std::string& id) {
  require(id.find_first_of(",\"\n\r") == std::string::npos, Errc::format_error,
          "id '" + id + "' cannot be written to CSV unquoted");
}

}  // namespace detail

inline RelevanceFile parse_relevance(std::string_view content) {
  RelevanceFile out;
  std::size_t line_no = 0;
  for (auto line : text::lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, '\t');
    require(fields.size() == 2 || fields.size() == 3, Errc::format_error,
            "line " + std::to_string(line_no) + ": expected 2 or 3 tab-separated fields");
    RelevanceJudgment j;
    j.query_id = std::string(text::trim(fields[0]));
    require(!j.query_id.empty(), Errc::format_error, "line " + std::to_string(line_no) + ": empty query id");
    j.positive_ids = detail::parse_id_list(fields[1], "pos:", line_no);
    if (fields.size() == 3) j.junk_ids = detail::parse_id_list(fields[2], "junk:", line_no);
    require(!out.judgments.contains(j.query_id) &&
                std::find(out.dropped.begin(), out.dropped.end(), j.query_id) == out.dropped.end(),
            Errc::format_error, "duplicate query '" + j.query_id + "'");
    if (j.positive_ids.empty()) {
      out.dropped.push_back(j.query_id);
      continue;
    }
    j.validate();
    out.query_order.push_back(j.query_id);
    out.judgments.emplace(j.query_id, std::move(j));
  }
  return out;
}

inline std::string format_relevance(const Judgments& judgments, std::span<const std::string> order) {
  std::string out;
  auto join = [](const std::set<std::string>& ids) {
    std::string s;
    for (const auto& id : ids) {
      if (!s.empty()) s += ',';
      s += id;
    }
    return s;
  };
  for (const auto& qid : order) {
    const auto& j = judgments.at(qid);
    out += j.query_id + "\tpos:" + join(j.positive_ids) + "\tjunk:" + join(j.junk_ids) + "\n";
  }
  return out;
}

inline std::string format_report_csv(const PerQueryReport& report) {
  std::string out = "query_id,ap\n";
  for (const auto& r : report.rows) {
    detail::check_csv_id(r.query_id);
    out += r.query_id + "," + text::shortest(r.ap) + "\n";
  }
  return out;
}

inline PerQueryReport parse_report_csv(std::string_view content, std::string dataset = {}, std::string model = {}) {
  const auto ls = text::lines(content);
  require(!ls.empty() && text::trim(ls[0]) == "query_id,ap", Errc::format_error, "missing 'query_id,ap' header");
  PerQueryReport report{std::move(dataset), std::move(model), {}};
  for (std::size_t i = 1; i < ls.size(); ++i) {
    if (text::trim(ls[i]).empty()) continue;
    const auto f = text::split(ls[i], ',');
    require(f.size() == 2, Errc::format_error, "report line " + std::to_string(i + 1) + ": expected 2 fields");
    report.rows.push_back({std::string(text::trim(f[0])), text::parse_double(f[1])});
  }
  return report;
}

inline std::string format_summary(std::span<const EvalSummary> summaries) {
  std::string out = "dataset\tmodel\tmetric\tvalue\n";
  for (const auto& s : summaries)
    for (const auto& m : s.metrics) out += s.dataset + "\t" + s.model + "\t" + m.name + "\t" + text::fixed(m.value, 4) + "\n";
  if (summaries.size() > 1) {
    out += "avg\t" + summaries.front().model + "\t" + summaries.front().metrics.front().name + "\t" +
           text::fixed(average_across_datasets(summaries), 4) + "\n";
  }
  return out;
}

inline std::string format_scatter_csv(std::span<const ScatterRow> rows) {
  std::string out = "query_id,ap_x,ap_y\n";
  for (const auto& r : rows) {
    detail::check_csv_id(r.query_id);
    out += r.query_id + "," + text::shortest(r.x) + "," + text::shortest(r.y) + "\n";
  }
  return out;
}

}  // namespace ilgen
