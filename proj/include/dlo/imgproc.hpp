#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "dlo/cloud.hpp"
#include "dlo/geom.hpp"

namespace dlo {

/// Row-major raster. Masks hold {0, 1}, color holds [0, 255] per channel,
/// depth holds meters along the camera axis with 0 meaning "no reading".
struct ImageGrid {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;

  ImageGrid() = default;
  ImageGrid(int w, int h, int ch = 1, float fill = 0.0f);

  bool in_bounds(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }
  float& at(int r, int c, int ch = 0) {
    return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
  }
  float at(int r, int c, int ch = 0) const {
    return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
  }
  std::size_t count_nonzero() const;
  bool same_shape(const ImageGrid& o) const { return width == o.width && height == o.height; }
  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;
};

struct Pixel {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Pinhole camera. `pose` maps camera coordinates (x right, y down, z along
/// the optical axis) to the base frame.
struct CameraIntrinsics {
  double fx = 800.0, fy = 800.0;
  double cx = 400.0, cy = 300.0;
  int width = 800, height = 600;
  Pose pose;

  void validate() const;

  /// Unit-free ray direction in the base frame through pixel (row, col);
  /// its camera-z component is 1.
  Vec3 ray_direction(double row, double col) const;

  struct Projection {
    double row, col, depth;
  };
  /// Projects a base-frame point; nullopt when it is behind the camera.
  std::optional<Projection> project(const Vec3& p) const;
};

struct PixelCluster {
  std::vector<Pixel> pixels;          // sorted
  std::array<double, 3> mean_color{}; // RGB
  std::array<double, 2> centroid{};   // (row, col)
};

struct PixelClusterSet {
  std::vector<PixelCluster> clusters;  // by mean color, then centroid
  std::vector<Pixel> noise;            // sorted
};

/// Binary mask from a foreground mask: 3x3 box blur thresholded at 0.5, then
/// erosion by a 3x3 cross. The color image only has to match in size.
ImageGrid blur_and_clean(const ImageGrid& mask, const ImageGrid& color);

/// sRGB in [0, 255] to CIELAB (D65 white).
std::array<double, 3> srgb_to_lab(double r, double g, double b);

struct ClusterOptions {
  int min_cluster_size = 10;
  double spatial_weight = 0.5;
  double cut = 60.0;
};

/// Labels for rows of an n x dims feature matrix (row-major): mutual
/// reachability with k = min_cluster_size, MST, edges heavier than `cut`
/// removed, components below min_cluster_size marked -1. Component labels
/// are numbered by their smallest member index.
std::vector<int> cluster_features(std::span<const double> features, std::size_t dims,
                                  int min_cluster_size, double cut);

/// Density clustering of foreground pixels on (s*row, s*col, L, a, b).
/// Throws EmptyInput for an empty mask and Dimension on size mismatch.
PixelClusterSet cluster_pixels(const ImageGrid& mask, const ImageGrid& color,
                               const ClusterOptions& opt = {});

/// Zhang-Suen thinning to convergence. A component that the parallel rule
/// would erase entirely keeps one pixel, so component counts are preserved.
ImageGrid skeletonize(const ImageGrid& binary);

/// 8-connected component labels (0 = background, 1..n in raster order of
/// first pixel) and the component count.
std::pair<std::vector<int>, int> label_components(const ImageGrid& binary);

ImageGrid pixels_to_mask(std::span<const Pixel> pixels, int width, int height);
std::vector<Pixel> mask_pixels(const ImageGrid& mask);

/// Back-projects pixels with valid depth into the base frame. Throws
/// InsufficientDepth when fewer than half of the pixels have depth.
PointCloud pixels_to_cloud(std::span<const Pixel> pixels, const ImageGrid& depth,
                           const CameraIntrinsics& intr);

// Binary PGM (P5) masks: 0 background, 255 foreground.
void write_pgm(const std::filesystem::path& path, const ImageGrid& mask);
ImageGrid read_pgm(const std::filesystem::path& path);
// Binary PPM (P6), 8 bits per channel.
void write_ppm(const std::filesystem::path& path, const ImageGrid& color);
ImageGrid read_ppm(const std::filesystem::path& path);
// "DLODEPTH", u32 width, u32 height (little-endian), then float32 meters.
void write_depth(const std::filesystem::path& path, const ImageGrid& depth);
ImageGrid read_depth(const std::filesystem::path& path);

}  // namespace dlo
