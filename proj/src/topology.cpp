#include "dlo/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

#include "dlo/cloudproc.hpp"
#include "dlo/error.hpp"
#include "format_util.hpp"

namespace dlo {

PointCloud SortedPolyline::ordered_cloud() const {
  PointCloud out;
  for (const auto& seg : segments) {
    for (auto i : seg) out.points.push_back(cloud[i]);
  }
  return out;
}

PointCloud SortedPolyline::segment_cloud(std::size_t s) const {
  PointCloud out;
  for (auto i : segments.at(s)) out.points.push_back(cloud[i]);
  return out;
}

namespace {

constexpr double kAngleTie = 1e-9;
// A nearer candidate b hides c when the path cur -> b -> c bends by at most
// 60 degrees at b, i.e. b lies roughly on the way to c.
constexpr double kShadowCos = -0.5;

class Walker {
 public:
  Walker(std::vector<Vec2> pts, const SortOptions& opt)
      : pts_(std::move(pts)), visited_(pts_.size(), 0), opt_(opt) {}

  std::size_t remaining() const { return remaining_; }
  void visit(std::size_t i) {
    visited_[i] = 1;
    --remaining_;
  }

  std::size_t seed() const {
    Vec2 c = Vec2::Zero();
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (!visited_[i]) c += pts_[i];
    }
    c /= static_cast<double>(remaining_);
    std::size_t best = pts_.size();
    double best_d = -1.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (visited_[i]) continue;
      const double d = (pts_[i] - c).squaredNorm();
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

  std::optional<std::size_t> step(std::size_t cur, const std::optional<Vec2>& heading) const {
    const double r2 = opt_.r_search * opt_.r_search;
    std::vector<std::size_t> cand;
    std::vector<double> dist, angle;
    for (std::size_t j = 0; j < pts_.size(); ++j) {
      if (visited_[j]) continue;
      const Vec2 v = pts_[j] - pts_[cur];
      const double d2 = v.squaredNorm();
      if (d2 > r2 || d2 == 0.0) continue;
      double a = 0.0;
      if (heading) {
        const double cosang = std::clamp(heading->dot(v) / std::sqrt(d2), -1.0, 1.0);
        a = rad2deg(std::acos(cosang));
        if (a > opt_.alpha_max_deg) continue;
      }
      cand.push_back(j);
      dist.push_back(std::sqrt(d2));
      angle.push_back(a);
    }
    if (cand.empty()) return std::nullopt;

    if (!heading) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < cand.size(); ++k) {
        if (dist[k] < dist[best]) best = k;
      }
      return cand[best];
    }

    std::vector<char> shadowed(cand.size(), 0);
    for (std::size_t c = 0; c < cand.size(); ++c) {
      for (std::size_t b = 0; b < cand.size() && !shadowed[c]; ++b) {
        if (b == c || !(dist[b] < dist[c])) continue;
        const Vec2 to_cur = pts_[cur] - pts_[cand[b]];
        const Vec2 to_c = pts_[cand[c]] - pts_[cand[b]];
        if (to_cur.dot(to_c) <= kShadowCos * dist[b] * to_c.norm()) shadowed[c] = 1;
      }
    }
    double min_angle = 1e300;
    for (std::size_t k = 0; k < cand.size(); ++k) {
      if (!shadowed[k]) min_angle = std::min(min_angle, angle[k]);
    }
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < cand.size(); ++k) {
      if (shadowed[k] || angle[k] > min_angle + kAngleTie) continue;
      if (!best || dist[k] < dist[*best]) best = k;
    }
    return cand[*best];
  }

  // Extends `seg` from its back until no admissible candidate remains.
  void extend(std::vector<std::size_t>& seg) {
    while (remaining_ > 0) {
      std::optional<Vec2> heading;
      if (seg.size() >= 2) {
        heading = (pts_[seg.back()] - pts_[seg[seg.size() - 2]]).normalized();
      }
      const auto next = step(seg.back(), heading);
      if (!next) return;
      visit(*next);
      seg.push_back(*next);
    }
  }

 private:
  std::vector<Vec2> pts_;
  std::vector<char> visited_;
  std::size_t remaining_ = pts_.size();
  SortOptions opt_;
};

}  // namespace

SortedPolyline sort_and_find_endpoints(const PointCloud& cloud, const PlaneModel& plane,
                                       const SortOptions& opt) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyInput, "cannot sort an empty cloud");
  if (!(opt.r_search > 0.0) || !(opt.alpha_max_deg > 0.0)) {
    throw Error(ErrorCode::ContractViolation, "sort radius and angle must be positive");
  }
  for (const auto& p : cloud.points) {
    if (!(std::abs(plane.signed_distance(p)) <= opt.planarity_tol)) {
      throw Error(ErrorCode::ContractViolation, "sort input is not projected onto the plane");
    }
  }

  std::vector<std::size_t> canon(cloud.size());
  std::iota(canon.begin(), canon.end(), std::size_t{0});
  std::stable_sort(canon.begin(), canon.end(),
                   [&](std::size_t a, std::size_t b) { return lex_less(cloud[a], cloud[b]); });
  const PlaneBasis basis(plane);
  std::vector<Vec2> pts;
  pts.reserve(cloud.size());
  for (auto i : canon) pts.push_back(basis.to_2d(cloud[i]));

  Walker walker(std::move(pts), opt);
  SortedPolyline out;
  out.cloud = cloud;
  while (walker.remaining() > 0) {
    const std::size_t seed = walker.seed();
    walker.visit(seed);
    std::vector<std::size_t> seg{seed};
    walker.extend(seg);
    // Resume from the seed in the opposite direction.
    std::reverse(seg.begin(), seg.end());
    walker.extend(seg);
    for (auto& i : seg) i = canon[i];
    out.segments.push_back(std::move(seg));
  }
  for (std::size_t s = 0; s < out.segments.size(); ++s) {
    out.endpoints.push_back({s, End::First, cloud[out.segments[s].front()]});
    out.endpoints.push_back({s, End::Last, cloud[out.segments[s].back()]});
  }
  return out;
}

Vec3 previous_point(const SortedPolyline& poly, const Endpoint& endpoint) {
  const auto& seg = poly.segments.at(endpoint.segment);
  if (seg.size() < 2) throw Error(ErrorCode::NoDirection, "endpoint belongs to a singleton segment");
  return poly.cloud[endpoint.end == End::First ? seg[1] : seg[seg.size() - 2]];
}

void write_sorted_csv(const std::filesystem::path& path, const SortedPolyline& poly) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "segment_id,order_index,x,y,z\n";
  for (std::size_t s = 0; s < poly.segments.size(); ++s) {
    for (std::size_t k = 0; k < poly.segments[s].size(); ++k) {
      const Vec3& p = poly.cloud[poly.segments[s][k]];
      out << s << ',' << k << ',' << fmt_g9(p.x()) << ',' << fmt_g9(p.y()) << ','
          << fmt_g9(p.z()) << '\n';
    }
  }
}

SortedPolyline read_sorted_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "segment_id,order_index,x,y,z") {
    throw Error(ErrorCode::Io, path.string() + ": unexpected header");
  }
  SortedPolyline poly;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f[5];
    for (int i = 0; i < 5; ++i) {
      if (!std::getline(row, f[i], i < 4 ? ',' : '\n')) {
        throw Error(ErrorCode::Io, path.string() + ": malformed row '" + line + "'");
      }
    }
    const std::size_t s = std::stoul(f[0]);
    if (s > poly.segments.size()) throw Error(ErrorCode::Io, path.string() + ": segment ids skip");
    if (s == poly.segments.size()) poly.segments.emplace_back();
    poly.segments[s].push_back(poly.cloud.size());
    poly.cloud.points.emplace_back(std::stod(f[2]), std::stod(f[3]), std::stod(f[4]));
  }
  for (std::size_t s = 0; s < poly.segments.size(); ++s) {
    poly.endpoints.push_back({s, End::First, poly.cloud[poly.segments[s].front()]});
    poly.endpoints.push_back({s, End::Last, poly.cloud[poly.segments[s].back()]});
  }
  return poly;
}

}  // namespace dlo
