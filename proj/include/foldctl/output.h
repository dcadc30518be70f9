#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "foldctl/sim.h"

namespace foldctl {

/// Shortest decimal text that reads back to exactly `value`.
std::string format_number(double value);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partial file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Header `time,x1..x{n_s},z,u1..u{m},V`. Time is fast time; inputs are zero
/// when the trajectory carries none and V is left empty without a certificate.
std::string trajectory_csv(const Trajectory& traj, int n_s, int m);

std::string sweep_summary_csv(const SweepResult& result);

struct PlotSeries {
  std::string label;
  std::vector<double> values;
};

/// A plain SVG line chart. With `log_y`, non-positive values are dropped.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::vector<double>& x, const std::vector<PlotSeries>& series,
                           bool log_y = false);

}  // namespace foldctl
