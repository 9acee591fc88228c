#include "dlo/cloud.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "dlo/error.hpp"
#include "format_util.hpp"

namespace dlo {

Vec3 PointCloud::centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points) sum += p;
  return points.empty() ? sum : Vec3(sum / static_cast<double>(points.size()));
}

bool PointCloud::all_finite() const {
  for (const auto& p : points) {
    if (!p.allFinite()) return false;
  }
  return true;
}

PointsSoA::PointsSoA(std::span<const Vec3> pts) {
  x.reserve(pts.size());
  y.reserve(pts.size());
  z.reserve(pts.size());
  for (const auto& p : pts) {
    x.push_back(p.x());
    y.push_back(p.y());
    z.push_back(p.z());
  }
}

PlaneModel PlaneModel::from_point_normal(const Vec3& point, const Vec3& normal) {
  const double n = normal.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "plane normal is zero");
  PlaneModel plane;
  plane.normal = normal / n;
  plane.d = -plane.normal.dot(point);
  return plane;
}

PlaneBasis::PlaneBasis(const PlaneModel& plane) : origin(plane.origin()), normal(plane.normal) {
  Vec3 ref = Vec3::UnitX();
  if (std::abs(normal.dot(ref)) > 0.9) ref = Vec3::UnitY();
  e1 = (ref - ref.dot(normal) * normal).normalized();
  e2 = normal.cross(e1);
}

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = open_out(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (const auto& p : cloud.points) {
    out << fmt_g9(p.x()) << ' ' << fmt_g9(p.y()) << ' ' << fmt_g9(p.z()) << '\n';
  }
}

PointCloud read_ply(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t count = 0;
  bool header_done = false;
  if (!std::getline(in, line) || line != "ply") {
    throw Error(ErrorCode::Io, path.string() + ": not a PLY file");
  }
  while (std::getline(in, line)) {
    if (line.rfind("format", 0) == 0 && line != "format ascii 1.0") {
      throw Error(ErrorCode::Io, path.string() + ": only ASCII PLY is supported");
    }
    if (line.rfind("element vertex", 0) == 0) count = std::stoul(line.substr(15));
    if (line == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw Error(ErrorCode::Io, path.string() + ": missing end_header");
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double x, y, z;
    if (!(in >> x >> y >> z)) throw Error(ErrorCode::Io, path.string() + ": truncated vertices");
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

void write_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = open_out(path);
  out << "x,y,z\n";
  for (const auto& p : cloud.points) {
    out << fmt_g9(p.x()) << ',' << fmt_g9(p.y()) << ',' << fmt_g9(p.z()) << '\n';
  }
}

PointCloud read_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "x,y,z") {
    throw Error(ErrorCode::Io, path.string() + ": expected x,y,z header");
  }
  PointCloud cloud;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c)) {
      throw Error(ErrorCode::Io, path.string() + ": malformed row '" + line + "'");
    }
    cloud.points.emplace_back(std::stod(a), std::stod(b), std::stod(c));
  }
  return cloud;
}

}  // namespace dlo
