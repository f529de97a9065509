#pragma once

#include <string>
#include <vector>

#include "kinefp/bounds.hpp"
#include "kinefp/config.hpp"
#include "kinefp/picard.hpp"

namespace kinefp {

/// Writes the run artifact directory: config copy + hash, RunReport and
/// BoundLedgers as JSON, p~/j/c snapshots as CSV, full fields in a flat
/// binary container with a JSON header, and optional PNG heatmaps.
void write_artifacts(const std::string& out_dir, const RunConfig& cfg,
                     const SchemeState& state,
                     const std::vector<BoundLedger>& ledgers);

std::string ledgers_to_json(const std::vector<BoundLedger>& ledgers);

/// Min-max scaled heatmap PNG; rows x cols, row-major values.
void write_heatmap_png(const std::string& path, const std::vector<double>& v,
                       int rows, int cols);

}  // namespace kinefp
