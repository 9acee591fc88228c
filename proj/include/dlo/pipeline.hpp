#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dlo/cloud.hpp"
#include "dlo/explore.hpp"
#include "dlo/fitting.hpp"
#include "dlo/geom.hpp"
#include "dlo/imgproc.hpp"
#include "dlo/topology.hpp"
#include "dlo/worldsim.hpp"

namespace dlo {

/// Applies a JSON object of overrides (keys are ReconParams field names) on
/// top of `base`. Unknown keys and out-of-range values throw Config.
ReconParams params_from_json_text(const std::string& text, const ReconParams& base = {});
std::string params_to_json_text(const ReconParams& params);

/// Per-cable intermediate clouds, named after the reconstruction stages.
struct CableRun {
  Rgb mean_color{};
  std::size_t pixels = 0;
  std::size_t truth = 0;     // scene cable with the closest color
  PointCloud dense;          // every cluster pixel back-projected
  PointCloud skeleton;
  PointCloud down;           // voxel + near-point merge
  PointCloud proj;           // projected onto the fitted plane
  SortedPolyline sorted;     // visual sort and endpoints
  ExplorationResult exploration;
  PointCloud merged;         // sorted visual points plus tactile points
  SortedPolyline merged_sorted;
  PointCloud refined;
  SortedPolyline refined_sorted;
  std::vector<SplineFit> splines;  // one per refined segment with >= 2 points
  PointCloud interpolated;

  bool complete() const { return refined_sorted.segment_count() == 1; }
};

struct PipelineOptions {
  bool tactile = true;
  std::uint64_t seed = 0;  // RANSAC and sensor-noise seed
  ReconParams params;
};

struct PipelineResult {
  PipelineOptions options;
  RenderOutput render;
  ImageGrid cleaned;
  PixelClusterSet clusters;
  PlaneModel plane;
  std::vector<CableRun> cables;
  std::vector<std::pair<std::string, double>> timing_s;  // stage, seconds

  /// 0 when every cable reconstructs to one segment, 2 otherwise.
  int exit_code() const;
};

/// Render -> clean -> cluster -> plane fit -> per-cluster reconstruction.
/// Clusters run concurrently; results are independent of scheduling.
/// Stage failures rethrow with the stage name prepended.
PipelineResult run_pipeline(const WorldScene& scene, const PipelineOptions& options);

/// Writes all artifacts, then manifest.json (seed, parameters, SHA-256 of
/// every artifact) and timing.json (not checksummed).
void write_run_dir(const std::filesystem::path& dir, const WorldScene& scene,
                   const PipelineResult& result);

/// Lower-case hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

/// Stable names of the per-cable artifacts drawn by the plotter.
const std::vector<std::string>& plotted_clouds();

}  // namespace dlo
