#pragma once

#include "selectrand/experiments.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace selectrand {

/// 17 significant digits, so values survive a text round trip exactly.
std::string format_value(double value);

/// Header `replication,arm,metric,value`, one line per row.
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);

/// Inverse of write_csv; throws InvalidInput on malformed lines.
std::vector<ResultRow> read_csv(std::istream& in);

/// Self-contained SVG built only from the CSV rows of one experiment.
std::string render_svg(Experiment experiment, const std::vector<ResultRow>& rows);

/// run_meta.json contents: seed, reps, overrides, versions and acceptance rates.
std::string run_meta_json(const ExperimentConfig& config, const ExperimentResult& result);

/// Library version string.
std::string library_version();

} // namespace selectrand
