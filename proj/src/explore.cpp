#include "dlo/explore.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "dlo/error.hpp"
#include "format_util.hpp"

namespace dlo {

double indicator(const TaxelMatrix& map, double pitch) {
  constexpr int R = TactilePad::kRows, C = TactilePad::kCols;
  Eigen::Matrix<double, R + 2, C + 2> P;
  for (int i = 0; i < R; ++i) {
    for (int j = 0; j < C; ++j) P(i + 1, j + 1) = map(i, j);
  }
  for (int j = 1; j <= C; ++j) {
    P(0, j) = 2.0 * P(1, j) - P(2, j);
    P(R + 1, j) = 2.0 * P(R, j) - P(R - 1, j);
  }
  for (int i = 0; i < R + 2; ++i) {
    P(i, 0) = P(i, 1);
    P(i, C + 1) = P(i, C);
  }
  const double h2 = pitch * pitch;
  double sum = 0.0;
  for (int i = 1; i <= R; ++i) {
    for (int j = 1; j <= C; ++j) {
      const double hxx = (P(i + 1, j) - 2.0 * P(i, j) + P(i - 1, j)) / h2;
      const double hyy = (P(i, j + 1) - 2.0 * P(i, j) + P(i, j - 1)) / h2;
      const double hxy = (P(i + 1, j + 1) - P(i + 1, j - 1) - P(i - 1, j + 1) + P(i - 1, j - 1)) / (4.0 * h2);
      sum += hxx * hxx + hyy * hyy + 2.0 * hxy * hxy;
    }
  }
  return std::sqrt(sum);
}

namespace {

class Explorer {
 public:
  Explorer(const SortedPolyline& poly, const PlaneModel& plane, ProbeSource& probe,
           const ReconParams& p)
      : poly_(poly), plane_(plane), probe_(probe), p_(p), visited_(poly.endpoints.size(), 0) {}

  ExplorationResult run() {
    for (std::size_t e = 0; e < poly_.endpoints.size(); ++e) {
      if (visited_[e]) continue;
      res_.walks.push_back(walk(e));
    }
    return std::move(res_);
  }

 private:
  // Descends above `on_plane` until the pad reports a touch.
  ProbeResult descend(std::size_t endpoint, const Rotation3& R, const Vec3& on_plane) {
    const Vec3& n = plane_.normal;
    for (int k = 0;; ++k) {
      const double height = p_.hover_height - k * p_.delta_z;
      if (height < -p_.max_descent) {
        throw Error(ErrorCode::DescentOverrun, "pad descended " + fmt_g9(-height) +
                                                   " m below the plane without contact");
      }
      if (res_.probes >= static_cast<std::size_t>(p_.probe_budget)) {
        throw Error(ErrorCode::BudgetExhausted,
                    "probe budget of " + std::to_string(p_.probe_budget) + " exhausted");
      }
      const Pose pose{R, on_plane + height * n};
      ProbeResult r = probe_.probe(pose);
      ++res_.probes;
      TraceRow row;
      row.step = res_.trace.size();
      row.endpoint = endpoint;
      row.pose = pose;
      row.touched = r.touched;
      res_.trace.push_back(row);
      if (r.touched) return r;
    }
  }

  bool near_own_geometry(const Vec3& q, std::size_t segment, const std::vector<Vec3>& trail,
                         const Vec3& last) const {
    const double d2 = p_.d_min * p_.d_min;
    for (auto i : poly_.segments[segment]) {
      const Vec3& s = poly_.cloud[i];
      if (s != last && (s - q).squaredNorm() < d2) return true;
    }
    for (const auto& t : trail) {
      if (t != last && (t - q).squaredNorm() < d2) return true;
    }
    return false;
  }

  std::optional<std::size_t> reached_endpoint(const Vec3& q, std::size_t start) const {
    std::optional<std::size_t> best;
    double best_d = p_.d_min;
    for (std::size_t k = 0; k < poly_.endpoints.size(); ++k) {
      if (k == start) continue;
      const double d = (poly_.endpoints[k].position - q).norm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  }

  void mark_visited(std::size_t e) {
    visited_[e] = 1;
    // A singleton segment lists its point twice.
    const auto& ep = poly_.endpoints[e];
    if (poly_.segments[ep.segment].size() == 1) {
      for (std::size_t k = 0; k < poly_.endpoints.size(); ++k) {
        if (poly_.endpoints[k].segment == ep.segment) visited_[k] = 1;
      }
    }
  }

  WalkSummary walk(std::size_t e) {
    WalkSummary sum;
    sum.endpoint = e;
    const Endpoint& ep = poly_.endpoints[e];
    mark_visited(e);
    if (poly_.segments[ep.segment].size() < 2) return sum;  // no direction to follow

    const Vec3& n = plane_.normal;
    Vec3 last = ep.position;
    Vec3 heading = last - previous_point(poly_, ep);
    Rotation3 R = frame_from_y_z(heading, n);
    heading = R.y_axis();
    const Rotation3 Rz = rotation_about_axis(Vec3::UnitZ(), p_.theta_deg);
    std::vector<Vec3> trail;
    int attempts = 0;
    for (;;) {
      const Vec3 target = plane_.project(last + p_.delta_y * R.y_axis());
      const ProbeResult r = descend(e, R, target);
      TraceRow& row = res_.trace.back();
      row.indicator = indicator(r.map.pressure, r.map.pitch);
      bool accepted = false;
      if (row.indicator > p_.t_H) {
        const Vec3 q = map_centroid(r.map, plane_);
        const bool ahead = (q - last).dot(heading) > 0.0;
        if (ahead && !near_own_geometry(q, ep.segment, trail, last)) {
          accepted = true;
          row.accepted = true;
          row.p_new = q;
          res_.tactile.points.push_back(q);
          trail.push_back(q);
          ++sum.accepted;
          if (const auto hit = reached_endpoint(q, e)) {
            mark_visited(*hit);
            sum.outcome = WalkOutcome::ReachedEndpoint;
            sum.reached = *hit;
            return sum;
          }
          if ((q - last).norm() > 0.0 && std::abs((q - last).normalized().dot(n)) < 0.99) {
            R = frame_from_y_z(q - last, n);
            heading = R.y_axis();
          }
          last = q;
          attempts = 0;
        }
      }
      if (!accepted) {
        if (++attempts >= p_.max_rotation_attempts) {
          sum.outcome = WalkOutcome::DeadEnd;
          return sum;
        }
        R = R * Rz;
      }
    }
  }

  const SortedPolyline& poly_;
  const PlaneModel& plane_;
  ProbeSource& probe_;
  const ReconParams& p_;
  std::vector<char> visited_;
  ExplorationResult res_;
};

}  // namespace

ExplorationResult explore_from_endpoints(const SortedPolyline& poly, const PlaneModel& plane,
                                         ProbeSource& probe, const ReconParams& params) {
  if (poly.segments.empty()) throw Error(ErrorCode::EmptyInput, "nothing to explore");
  params.validate();
  return Explorer(poly, plane, probe, params).run();
}

PointCloud merge_clouds(const PointCloud& visual, const PointCloud& tactile) {
  PointCloud out;
  out.points.reserve(visual.size() + tactile.size());
  constexpr double tol2 = 1e-18;
  auto add = [&](const Vec3& p) {
    for (const auto& q : out.points) {
      if ((q - p).squaredNorm() < tol2) return;
    }
    out.points.push_back(p);
  };
  for (const auto& p : visual.points) add(p);
  for (const auto& p : tactile.points) add(p);
  return out;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "step,endpoint_id,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz,touched,indicator,accepted,"
         "px,py,pz\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.endpoint;
    const Mat3& m = r.pose.rotation.matrix();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) out << ',' << fmt_g9(m(i, j));
    }
    for (int i = 0; i < 3; ++i) out << ',' << fmt_g9(r.pose.translation[i]);
    out << ',' << (r.touched ? 1 : 0) << ',' << fmt_g9(r.indicator) << ',' << (r.accepted ? 1 : 0);
    if (r.accepted) {
      out << ',' << fmt_g9(r.p_new.x()) << ',' << fmt_g9(r.p_new.y()) << ',' << fmt_g9(r.p_new.z());
    } else {
      out << ",,,";
    }
    out << '\n';
  }
}

}  // namespace dlo
