#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dlo/bspline.hpp"
#include "dlo/cloud.hpp"
#include "dlo/geom.hpp"
#include "dlo/imgproc.hpp"

namespace dlo {

using Rgb = std::array<double, 3>;

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

struct GroundTruthCable {
  std::string name;
  BSplineCurve centerline;  // lies `radius` above the support plane
  double radius = 0.003;
  Rgb color{30, 30, 30};
  double reference_rmse_m = 0.0;  // ICP error measured on the analogous physical setup, 0 if none
  std::vector<Vec2> control_uv;   // as declared in the scenario

  /// Dense centerline polyline (about 1 mm spacing) and the bounding boxes
  /// of consecutive runs of its segments, built by WorldScene::finalize.
  std::vector<Vec3> polyline;
  std::vector<Box> chunk_boxes;
};

/// 6x2 taxel pad. The long side runs along the end-effector x axis; taxel
/// (i, j) sits at ((i - 2.5) pitch, (j - 0.5) pitch, 0) in the pad frame and
/// presses along -z.
struct TactilePad {
  static constexpr int kRows = 6;
  static constexpr int kCols = 2;
  double pitch = 0.005;       // m
  double k_p = 1000.0;        // pressure units per m of penetration
  double noise_sigma = 0.0;   // pressure units

  Vec3 taxel_offset(int i, int j) const {
    return {(i - 2.5) * pitch, (j - 0.5) * pitch, 0.0};
  }
};

using TaxelMatrix = Eigen::Matrix<double, TactilePad::kRows, TactilePad::kCols>;

struct TactileMap {
  TaxelMatrix pressure = TaxelMatrix::Zero();
  Pose pose;
  double pitch = 0.005;

  Vec3 taxel_position(int i, int j) const {
    return pose.apply({(i - 2.5) * pitch, (j - 0.5) * pitch, 0.0});
  }
};

struct ProbeResult {
  bool touched = false;
  TactileMap map;
};

struct WorldScene {
  int schema_version = 1;
  std::string name;
  std::uint64_t seed = 0;
  PlaneModel plane;
  std::vector<GroundTruthCable> cables;
  std::vector<Box> occluders;
  CameraIntrinsics camera;
  TactilePad pad;
  std::string params_json = "{}";  // parameter overrides as a JSON object

  /// Rebuilds cable polylines from their control points; validates geometry.
  void finalize();
};

// Scenario documents (JSON with schema_version = 1).
WorldScene scene_from_json_text(const std::string& text);
std::string scene_to_json_text(const WorldScene& scene);
WorldScene load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const WorldScene& scene);

/// Names accepted by make_template.
const std::vector<std::string>& template_names();
/// Builds a named scenario; the seed jitters control points by up to 2 mm
/// (0.5 mm for cross30_occluded).
/// Throws Config for unknown names (the message lists the valid ones).
WorldScene make_template(const std::string& name, std::uint64_t seed);

/// Camera that looks straight down the base -z axis from `position`.
CameraIntrinsics default_camera(const Vec3& position = {0.0, 0.0, 0.75});

struct RenderOutput {
  std::vector<ImageGrid> cable_masks;  // one per cable, visible pixels only
  ImageGrid cable_mask;                // union of cable_masks
  ImageGrid color;
  ImageGrid depth;                     // camera z, 0 where nothing is hit
  ImageGrid shelf_mask;
};

/// Ray-casts the scene. Throws InvalidView when the camera is not on the
/// positive side of the support plane.
RenderOutput render(const WorldScene& scene);

/// Entry parameter of a ray against a box, or a negative value on a miss.
double ray_box(const Vec3& origin, const Vec3& dir, const Box& box);
/// Nearest positive ray parameter against a capsule, or a negative value.
double ray_capsule(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b, double r);

/// Fraction of the cable's arc length hidden from the camera by occluders.
double occluded_fraction(const WorldScene& scene, std::size_t cable);

/// Rigid, quasi-static contact of the pad with the plane and the cables.
/// Occluders are not part of the contact model.
/// `touched` is set when any taxel exceeds eps_contact.
ProbeResult probe(const WorldScene& scene, const Pose& pad_pose, double eps_contact = 0.05);

/// Pressure-weighted taxel centroid projected onto the plane. Throws
/// EmptyContact for an all-zero map.
Vec3 map_centroid(const TactileMap& map, const PlaneModel& plane);

/// In-plane distance from p to the footprint of a cable's centerline, and
/// the footprint point itself.
double footprint_distance(const WorldScene& scene, std::size_t cable, const Vec3& p,
                          Vec3* closest = nullptr);

}  // namespace dlo
