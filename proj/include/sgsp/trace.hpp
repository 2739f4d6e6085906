#ifndef SGSP_TRACE_HPP
#define SGSP_TRACE_HPP

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace sgsp {

struct TraceRow {
  long long step;
  std::string metric;
  double value;
};

/// Time-indexed metric records for one seeded run, plus metadata for the
/// JSON sidecar. Rows within one metric have strictly increasing steps.
struct RunTrace {
  std::map<std::string, std::string> metadata;
  std::vector<TraceRow> rows;

  void record(long long step, const std::string& metric, double value) {
    rows.push_back({step, metric, value});
  }

  double last(const std::string& metric, double fallback = 0.0) const {
    for (auto it = rows.rbegin(); it != rows.rend(); ++it)
      if (it->metric == metric) return it->value;
    return fallback;
  }
};

/// Full decimal precision so reruns are byte-comparable.
inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Long-format CSV: step,metric,value. Timestamp-like metrics (wall clock)
/// are excluded from determinism comparisons, not from the file.
inline void write_trace_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  out << "step,metric,value\n";
  for (const auto& row : trace.rows)
    out << row.step << ',' << row.metric << ',' << format_full(row.value) << '\n';
}

}  // namespace sgsp

#endif  // SGSP_TRACE_HPP
