#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "dlo/cloud.hpp"

namespace dlo {

enum class End { First, Last };

struct Endpoint {
  std::size_t segment = 0;
  End end = End::First;
  Vec3 position = Vec3::Zero();
};

/// A cloud partitioned into ordered segments. Segment entries index `cloud`.
/// Every segment contributes two endpoints (its first and last point), so a
/// singleton segment lists the same point twice.
struct SortedPolyline {
  PointCloud cloud;
  std::vector<std::vector<std::size_t>> segments;
  std::vector<Endpoint> endpoints;

  std::size_t segment_count() const { return segments.size(); }
  /// Points of all segments, concatenated in order.
  PointCloud ordered_cloud() const;
  PointCloud segment_cloud(std::size_t s) const;
};

struct SortOptions {
  double r_search = 0.05;
  double alpha_max_deg = 75.0;
  double planarity_tol = 1e-6;
};

/// Greedy direction-following sort in plane coordinates.
///
/// Seed: the unvisited point farthest from the centroid of unvisited points.
/// The first step goes to the nearest unvisited point within r_search; later
/// steps take the candidate with the smallest turn from the current heading,
/// ignoring turns above alpha_max and candidates shadowed by a nearer
/// admissible point lying on the way to them (the path through it bends by
/// at most 60 degrees).
/// When the walk stalls it resumes from the seed in the opposite direction.
/// Input order does not matter: points are canonicalised lexicographically.
///
/// Throws EmptyInput for an empty cloud and ContractViolation when a point is
/// off the plane by more than planarity_tol.
SortedPolyline sort_and_find_endpoints(const PointCloud& cloud, const PlaneModel& plane,
                                       const SortOptions& opt = {});

/// Neighbour of an endpoint inside its segment. Throws NoDirection for
/// singleton segments.
Vec3 previous_point(const SortedPolyline& poly, const Endpoint& endpoint);

/// CSV with header segment_id,order_index,x,y,z.
void write_sorted_csv(const std::filesystem::path& path, const SortedPolyline& poly);
SortedPolyline read_sorted_csv(const std::filesystem::path& path);

}  // namespace dlo
