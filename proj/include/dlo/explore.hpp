#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "dlo/cloud.hpp"
#include "dlo/geom.hpp"
#include "dlo/topology.hpp"
#include "dlo/worldsim.hpp"

namespace dlo {

/// Curvature indicator of a tactile map: Frobenius norm of the per-taxel
/// Hessian norms. The map is padded to 8x4, by linear extrapolation along the
/// 6-taxel axis and by replication along the 2-taxel axis, so that maps which
/// are affine along the long axis score exactly zero.
double indicator(const TaxelMatrix& map, double pitch);

/// Anything that can answer a pad pose with a tactile reading.
class ProbeSource {
 public:
  virtual ~ProbeSource() = default;
  virtual ProbeResult probe(const Pose& pad_pose) = 0;
};

/// Probes a simulated scene.
class SceneProbe final : public ProbeSource {
 public:
  SceneProbe(const WorldScene& scene, double eps_contact) : scene_(scene), eps_(eps_contact) {}
  ProbeResult probe(const Pose& pad_pose) override { return dlo::probe(scene_, pad_pose, eps_); }

 private:
  const WorldScene& scene_;
  double eps_;
};

enum class WalkOutcome { ReachedEndpoint, DeadEnd, Skipped };

struct WalkSummary {
  std::size_t endpoint = 0;       // index into SortedPolyline::endpoints
  WalkOutcome outcome = WalkOutcome::Skipped;
  std::size_t reached = 0;        // endpoint reached, when outcome == ReachedEndpoint
  std::size_t accepted = 0;       // tactile points added
};

struct TraceRow {
  std::size_t step = 0;
  std::size_t endpoint = 0;
  Pose pose;
  bool touched = false;
  double indicator = 0.0;
  bool accepted = false;
  Vec3 p_new = Vec3::Zero();      // meaningful when accepted
};

struct ExplorationResult {
  PointCloud tactile;
  std::vector<WalkSummary> walks;
  std::vector<TraceRow> trace;
  std::size_t probes = 0;
};

/// Tactile exploration from every endpoint of `poly`.
///
/// From an endpoint e the pad's y axis starts along e - previous_point(e) and
/// its z axis along the plane normal. Each step targets Δy ahead of the last
/// accepted point, descends from hover height in Δz increments until touch,
/// and accepts the pressure centroid when the indicator exceeds t_H. A
/// contact is also refused when it lands within d_min of the walk's own
/// segment or trail (other than the last accepted point), or when it lies
/// behind the walk heading; refused and flat contacts rotate the pad by θ
/// about its z axis. A walk stops when an accepted point is within d_min of
/// another endpoint (both are then visited) or after max_rotation_attempts
/// consecutive refusals (dead end).
///
/// Throws DescentOverrun when the pad would go max_descent below the plane
/// and BudgetExhausted when more than probe_budget probes are needed.
ExplorationResult explore_from_endpoints(const SortedPolyline& poly, const PlaneModel& plane,
                                         ProbeSource& probe, const ReconParams& params);

/// Concatenation without exact duplicates (points closer than 1e-9 m).
PointCloud merge_clouds(const PointCloud& visual, const PointCloud& tactile);

/// CSV: step,endpoint_id,r00..r22,tx,ty,tz,touched,indicator,accepted,px,py,pz
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows);

}  // namespace dlo
