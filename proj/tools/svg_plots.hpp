#pragma once

#include <string>
#include <vector>

#include "pry/rollout/evaluate.hpp"

namespace pry::tools {

struct TraceSeries {
  std::string label;
  std::vector<std::string> phases;  // phase name per step
  std::vector<double> fz;           // |fz| per step, newtons
};

// Parses a csv written by `pry eval --trace-dir` (step,phase,fx,fz,fnorm).
TraceSeries load_trace_csv(const std::string& path, const std::string& label);

// Grouped ID/OOD success-rate bars, one group per report (= per variant).
std::string rates_svg(const std::vector<rollout::BenchmarkReport>& reports);

// |fz| against step for each series; phase bands shaded from the first, so
// pass the reference (successful) trace first.
std::string traces_svg(const std::vector<TraceSeries>& series);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace pry::tools
