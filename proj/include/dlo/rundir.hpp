#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dlo/eval.hpp"

namespace dlo {

/// Scores a run directory. ICP aligns each cable's P_interpolated onto the
/// reference cloud of the same ground-truth cable, taken from
/// `reference/cable_<k>/<target_cloud>.ply` when `reference` is a run
/// directory, or from a ray-cast of that scenario file with its occluders
/// removed. Curve error is measured against the cable
/// footprint in the run's own scenario.json. Missing files throw Io.
EvalReport evaluate_run(const std::filesystem::path& run_dir, const std::filesystem::path& reference,
                        const std::string& target_cloud = "P_dense");

void write_report(const std::filesystem::path& path, const EvalReport& report);

/// Writes one SVG per plotted cloud and cable to out_dir/cable_<i>/<name>.svg
/// in plane coordinates. Endpoints are circles with class "endpoint"; the
/// fitted splines are drawn on the P_interpolated plot. Returns the paths.
std::vector<std::filesystem::path> plot_run(const std::filesystem::path& run_dir,
                                            const std::filesystem::path& out_dir);

}  // namespace dlo
