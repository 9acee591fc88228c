

#include "dlo/worldsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "dlo/error.hpp"
#include "dlo/rng.hpp"
#include "json.hpp"

namespace dlo {

using nlohmann::json;

namespace {

constexpr std::size_t kChunk = 32;
constexpr double kInf = std::numeric_limits<double>::infinity();

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b, Vec3* closest) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  const Vec3 q = a + t * ab;
  if (closest) *closest = q;
  return (p - q).norm();
}

double box_distance(const Vec3& p, const Box& b) {
  const Vec3 d = (b.min - p).cwiseMax(p - b.max).cwiseMax(Vec3::Zero());
  return d.norm();
}

}  // namespace

void WorldScene::finalize() {
  if (schema_version != 1) throw Error(ErrorCode::Config, "unsupported schema_version");
  plane = PlaneModel::from_point_normal(plane.origin(), plane.normal);
  camera.validate();
  if (!(pad.pitch > 0.0 && pad.k_p > 0.0 && pad.noise_sigma >= 0.0)) {
    throw Error(ErrorCode::Config, "pad pitch and k_p must be positive, noise_sigma >= 0");
  }
  for (const auto& b : occluders) {
    if (!(b.min.array() <= b.max.array()).all()) {
      throw Error(ErrorCode::Config, "occluder min corner exceeds max corner");
    }
  }
  const PlaneBasis basis(plane);
  for (auto& c : cables) {
    if (!(c.radius > 0.0)) throw Error(ErrorCode::Config, "cable '" + c.name + "' radius must be positive");
    if (c.control_uv.size() < 4) {
      throw Error(ErrorCode::Config, "cable '" + c.name + "' needs at least 4 control points");
    }
    std::vector<Vec3> ctrl;
    for (const auto& uv : c.control_uv) ctrl.push_back(basis.to_3d(uv, c.radius));
    c.centerline = BSplineCurve::clamped_uniform(std::move(ctrl), 3);

    // Parameter-uniform samples; refine until the mean spacing is below 0.5 mm.
    std::size_t n = 256;
    for (;;) {
      c.polyline.clear();
      for (std::size_t i = 0; i < n; ++i) {
        c.polyline.push_back(c.centerline.evaluate(static_cast<double>(i) / static_cast<double>(n - 1)));
      }
      double len = 0.0;
      for (std::size_t i = 1; i < n; ++i) len += (c.polyline[i] - c.polyline[i - 1]).norm();
      if (len / static_cast<double>(n - 1) < 0.0005 || n > (1u << 20)) break;
      n *= 2;
    }
    c.chunk_boxes.clear();
    for (std::size_t s = 0; s + 1 < c.polyline.size(); s += kChunk) {
      Box b{c.polyline[s], c.polyline[s]};
      for (std::size_t i = s; i <= std::min(s + kChunk, c.polyline.size() - 1); ++i) {
        b.min = b.min.cwiseMin(c.polyline[i]);
        b.max = b.max.cwiseMax(c.polyline[i]);
      }
      c.chunk_boxes.push_back(b);
    }
  }
}

// ---------------------------------------------------------------- JSON

namespace {

Vec3 vec3_of(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Config, field + " must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json json_of(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorCode::Config, where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw Error(ErrorCode::Config, "unknown field '" + k + "' in " + where);
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

WorldScene scene_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    check_keys(j, "scenario",
               {"schema_version", "name", "seed", "plane", "camera", "cables", "occluders", "pad", "params"});
    if (!j.contains("schema_version")) throw Error(ErrorCode::Config, "missing schema_version");
    WorldScene s;
    s.schema_version = j.at("schema_version").get<int>();
    s.name = get_or<std::string>(j, "name", "");
    s.seed = get_or<std::uint64_t>(j, "seed", 0);

    const json& pl = j.at("plane");
    check_keys(pl, "plane", {"point", "normal", "tilt_deg"});
    const Vec3 point = pl.contains("point") ? vec3_of(pl.at("point"), "plane.point") : Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    if (pl.contains("normal") && pl.contains("tilt_deg")) {
      throw Error(ErrorCode::Config, "plane takes either normal or tilt_deg, not both");
    }
    if (pl.contains("normal")) normal = vec3_of(pl.at("normal"), "plane.normal");
    if (pl.contains("tilt_deg")) {
      const double t = deg2rad(pl.at("tilt_deg").get<double>());
      normal = Vec3(0.0, -std::sin(t), std::cos(t));
    }
    s.plane = PlaneModel::from_point_normal(point, normal);

    s.camera = default_camera();
    if (j.contains("camera")) {
      const json& c = j.at("camera");
      check_keys(c, "camera", {"fx", "fy", "cx", "cy", "width", "height", "position", "rotation"});
      s.camera.fx = get_or(c, "fx", s.camera.fx);
      s.camera.fy = get_or(c, "fy", s.camera.fy);
      s.camera.cx = get_or(c, "cx", s.camera.cx);
      s.camera.cy = get_or(c, "cy", s.camera.cy);
      s.camera.width = get_or(c, "width", s.camera.width);
      s.camera.height = get_or(c, "height", s.camera.height);
      if (c.contains("position")) s.camera.pose.translation = vec3_of(c.at("position"), "camera.position");
      if (c.contains("rotation")) {
        const json& r = c.at("rotation");
        if (!r.is_array() || r.size() != 3) throw Error(ErrorCode::Config, "camera.rotation must be 3 rows");
        Mat3 m;
        for (int i = 0; i < 3; ++i) m.row(i) = vec3_of(r[static_cast<std::size_t>(i)], "camera.rotation").transpose();
        s.camera.pose.rotation = Rotation3(m);
      }
    }

    for (const auto& cj : j.at("cables")) {
      check_keys(cj, "cable", {"name", "radius", "color", "reference_rmse_m", "control_points_uv"});
      GroundTruthCable c;
      c.name = get_or<std::string>(cj, "name", "cable" + std::to_string(s.cables.size()));
      c.radius = get_or(cj, "radius", c.radius);
      if (cj.contains("color")) {
        const Vec3 col = vec3_of(cj.at("color"), "cable.color");
        c.color = {col.x(), col.y(), col.z()};
      }
      c.reference_rmse_m = get_or(cj, "reference_rmse_m", 0.0);
      for (const auto& uv : cj.at("control_points_uv")) {
        if (!uv.is_array() || uv.size() != 2) throw Error(ErrorCode::Config, "control point must be [u, v]");
        c.control_uv.emplace_back(uv[0].get<double>(), uv[1].get<double>());
      }
      s.cables.push_back(std::move(c));
    }
    if (j.contains("occluders")) {
      for (const auto& bj : j.at("occluders")) {
        check_keys(bj, "occluder", {"min", "max"});
        s.occluders.push_back({vec3_of(bj.at("min"), "occluder.min"), vec3_of(bj.at("max"), "occluder.max")});
      }
    }
    if (j.contains("pad")) {
      const json& p = j.at("pad");
      check_keys(p, "pad", {"pitch", "k_p", "noise_sigma"});
      s.pad.pitch = get_or(p, "pitch", s.pad.pitch);
      s.pad.k_p = get_or(p, "k_p", s.pad.k_p);
      s.pad.noise_sigma = get_or(p, "noise_sigma", s.pad.noise_sigma);
    }
    if (j.contains("params")) {
      if (!j.at("params").is_object()) throw Error(ErrorCode::Config, "params must be an object");
      s.params_json = j.at("params").dump();
    }
    s.finalize();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("invalid scenario field: ") + e.what());
  }
}

std::string scene_to_json_text(const WorldScene& s) {
  json j;
  j["schema_version"] = s.schema_version;
  j["name"] = s.name;
  j["seed"] = s.seed;
  const Vec3 origin = s.plane.origin();
  j["plane"] = {{"point", json_of(origin)}, {"normal", json_of(s.plane.normal)}};
  json rot = json::array();
  for (int i = 0; i < 3; ++i) rot.push_back(json_of(s.camera.pose.rotation.matrix().row(i).transpose()));
  j["camera"] = {{"fx", s.camera.fx},       {"fy", s.camera.fy},
                 {"cx", s.camera.cx},       {"cy", s.camera.cy},
                 {"width", s.camera.width}, {"height", s.camera.height},
                 {"position", json_of(s.camera.pose.translation)}, {"rotation", rot}};
  j["cables"] = json::array();
  for (const auto& c : s.cables) {
    json uv = json::array();
    for (const auto& p : c.control_uv) uv.push_back(json::array({p.x(), p.y()}));
    j["cables"].push_back({{"name", c.name},
                           {"radius", c.radius},
                           {"color", json::array({c.color[0], c.color[1], c.color[2]})},
                           {"reference_rmse_m", c.reference_rmse_m},
                           {"control_points_uv", uv}});
  }
  j["occluders"] = json::array();
  for (const auto& b : s.occluders) j["occluders"].push_back({{"min", json_of(b.min)}, {"max", json_of(b.max)}});
  j["pad"] = {{"pitch", s.pad.pitch}, {"k_p", s.pad.k_p}, {"noise_sigma", s.pad.noise_sigma}};
  j["params"] = json::parse(s.params_json);
  return j.dump(2) + "\n";
}

WorldScene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return scene_from_json_text(ss.str());
}

void save_scene(const std::filesystem::path& path, const WorldScene& scene) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << scene_to_json_text(scene);
}

// ---------------------------------------------------------------- templates

CameraIntrinsics default_camera(const Vec3& position) {
  CameraIntrinsics cam;
  Mat3 r;
  r.col(0) = Vec3(1, 0, 0);
  r.col(1) = Vec3(0, -1, 0);
  r.col(2) = Vec3(0, 0, -1);
  cam.pose.rotation = Rotation3(r);
  cam.pose.translation = position;
  return cam;
}

const std::vector<std::string>& template_names() {
  static const std::vector<std::string> names = {"cs1_plain", "cs1_occluded", "cs2_plain",
                                                 "cs2_occluded", "cross30_occluded"};
  return names;
}

namespace {

constexpr Rgb kBlack{30, 30, 30};
constexpr Rgb kBlue{30, 60, 190};

// Prolate trochoid x = s (t - L sin t), y = -s L cos t: one self-crossing on
// the y axis whose angle is set by L.
std::vector<Vec2> trochoid(double s, double L, double t0, double t1, std::size_t count) {
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(count - 1);
    pts.emplace_back(s * (t - L * std::sin(t)), -s * L * std::cos(t));
  }
  return pts;
}

// Loop whose branches cross at 2 * half_angle_deg: straight arm, a 20 degree
// clockwise arm bend, a 15 mm straight run centred on the crossing, clockwise
// loop (bend, straight, half turn) and the mirror image back out. Control
// points every 12 mm.
std::vector<Vec2> alpha_loop(double half_angle_deg) {
  const double ha = deg2rad(half_angle_deg);
  constexpr double r_arm = 0.03, r_loop = 0.03, straight = 0.06, half_run = 0.0075;
  const double arm_turn = deg2rad(-20.0);
  // Puts the loop bottom under the middle of the crossing run.
  const double r_bottom = r_loop * (1.0 - std::sin(ha)) + half_run * std::cos(ha);
  std::vector<std::pair<double, double>> pieces = {{0.06, 0.0},
                                                   {r_arm * std::abs(arm_turn), (arm_turn > 0 ? 1.0 : -1.0) / r_arm},
                                                   {2.0 * half_run, 0.0},
                                                   {r_loop * (kPi / 2 - ha), -1.0 / r_loop},
                                                   {straight, 0.0},
                                                   {r_bottom * kPi / 2, -1.0 / r_bottom}};
  for (std::size_t i = pieces.size(); i-- > 0;) pieces.push_back(pieces[i]);

  constexpr double kStep = 1e-4;
  std::vector<Vec2> dense{Vec2::Zero()};
  std::vector<double> arc{0.0};
  double phi = -ha - arm_turn;
  Vec2 p = Vec2::Zero();
  for (const auto& [len, k] : pieces) {
    const int n = std::max(1, static_cast<int>(len / kStep));
    const double ds = len / n;
    for (int i = 0; i < n; ++i) {
      const double mid = phi + 0.5 * k * ds;
      p += ds * Vec2(std::cos(mid), std::sin(mid));
      phi += k * ds;
      dense.push_back(p);
      arc.push_back(arc.back() + ds);
    }
  }
  const std::size_t count = static_cast<std::size_t>(arc.back() / 0.012) + 1;
  std::vector<Vec2> pts;
  double lo = kInf, hi = -kInf;
  for (std::size_t i = 0; i < count; ++i) {
    const double target = arc.back() * static_cast<double>(i) / static_cast<double>(count - 1);
    const auto it = std::lower_bound(arc.begin(), arc.end(), target);
    pts.push_back(dense[std::min<std::size_t>(static_cast<std::size_t>(it - arc.begin()), dense.size() - 1)]);
    lo = std::min(lo, pts.back().y());
    hi = std::max(hi, pts.back().y());
  }
  const Vec2 shift(dense.back().x() / 2.0, (lo + hi) / 2.0);
  for (auto& q : pts) q -= shift;
  return pts;
}

std::vector<Vec2> graph(double u0, double u1, std::size_t count, auto&& fn) {
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < count; ++i) {
    const double u = u0 + (u1 - u0) * static_cast<double>(i) / static_cast<double>(count - 1);
    pts.emplace_back(u, fn(u));
  }
  return pts;
}

void jitter(std::vector<Vec2>& pts, Rng& rng, double amplitude = 0.002) {
  for (auto& p : pts) {
    p.x() += rng.uniform(-amplitude, amplitude);
    p.y() += rng.uniform(-amplitude, amplitude);
  }
}

// First self-intersection of the cable's footprint polyline, in plane coordinates.
std::optional<Vec2> self_crossing(const WorldScene& s, const GroundTruthCable& c) {
  const PlaneBasis basis(s.plane);
  std::vector<Vec2> q;
  for (std::size_t i = 0; i < c.polyline.size(); i += 4) q.push_back(basis.to_2d(c.polyline[i]));
  auto cross = [](const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); };
  for (std::size_t i = 0; i + 1 < q.size(); ++i) {
    for (std::size_t k = i + 2; k + 1 < q.size(); ++k) {
      const Vec2 r = q[i + 1] - q[i], t = q[k + 1] - q[k];
      const double den = cross(r, t);
      if (den == 0.0) continue;
      const double a = cross(q[k] - q[i], t) / den, b = cross(q[k] - q[i], r) / den;
      if (a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0) return q[i] + a * r;
    }
  }
  return std::nullopt;
}

// Box floating `lift` above the plane's highest point under a square of
// half-width `half` around the footprint point `uv`.
Box floating_box(const WorldScene& s, const Vec2& uv, double half, double lift, double thickness) {
  const PlaneBasis basis(s.plane);
  const Vec3 c = basis.to_3d(uv);
  Box b;
  b.min = Vec3(c.x() - half, c.y() - half, 0.0);
  b.max = Vec3(c.x() + half, c.y() + half, 0.0);
  double top = -kInf;
  for (double x : {b.min.x(), b.max.x()}) {
    for (double y : {b.min.y(), b.max.y()}) {
      // Plane height at (x, y): n.p + d = 0.
      top = std::max(top, -(s.plane.normal.x() * x + s.plane.normal.y() * y + s.plane.d) / s.plane.normal.z());
    }
  }
  b.min.z() = top + lift;
  b.max.z() = top + lift + thickness;
  return b;
}

GroundTruthCable cable(std::string name, Rgb color, double ref, std::vector<Vec2> uv) {
  GroundTruthCable c;
  c.name = std::move(name);
  c.color = color;
  c.reference_rmse_m = ref;
  c.control_uv = std::move(uv);
  return c;
}

}  // namespace

WorldScene make_template(const std::string& name, std::uint64_t seed) {
  const auto& names = template_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::Config, "unknown template '" + name + "'; valid templates: " + list);
  }
  WorldScene s;
  s.name = name;
  s.seed = seed;
  s.camera = default_camera();
  Rng rng(seed);

  if (name.rfind("cs1", 0) == 0) {
    s.plane = PlaneModel::from_point_normal(Vec3::Zero(), Vec3(0.0, -std::sin(deg2rad(15.0)), std::cos(deg2rad(15.0))));
    auto uv = trochoid(0.04, 2.3, -3.4, 3.4, 41);
    jitter(uv, rng);
    s.cables.push_back(cable("black", kBlack, 0.00174, std::move(uv)));
    s.finalize();
    if (name == "cs1_occluded") {
      const auto x = self_crossing(s, s.cables[0]);
      if (!x) throw Error(ErrorCode::Config, "template cable lost its crossing");
      s.occluders.push_back(floating_box(s, *x, 0.035, 0.02, 0.02));
    }
  } else if (name.rfind("cs2", 0) == 0) {
    s.plane = PlaneModel::from_point_normal(Vec3::Zero(), Vec3::UnitZ());
    auto black = graph(-0.15, 0.15, 25, [](double u) { return 0.08 + 0.02 * std::sin(2.0 * kPi * u / 0.15); });
    auto blue = graph(-0.15, 0.15, 25, [](double u) { return -0.10 + 1.5 * u * u; });
    jitter(black, rng);
    jitter(blue, rng);
    s.cables.push_back(cable("black", kBlack, 0.00650, std::move(black)));
    s.cables.push_back(cable("blue", kBlue, 0.00459, std::move(blue)));
    if (name == "cs2_occluded") {
      s.occluders.push_back(floating_box(s, {0.0, 0.08}, 0.04, 0.02, 0.02));
      s.occluders.push_back(floating_box(s, {0.0, -0.10}, 0.04, 0.02, 0.02));
    }
  } else {
    s.plane = PlaneModel::from_point_normal(Vec3::Zero(), Vec3::UnitZ());
    // Smaller jitter keeps the crossing within a few degrees of 30.
    auto uv = alpha_loop(15.0);
    jitter(uv, rng, 0.0005);
    s.cables.push_back(cable("black", kBlack, 0.0, std::move(uv)));
    s.finalize();
    const auto x = self_crossing(s, s.cables[0]);
    if (!x) throw Error(ErrorCode::Config, "template cable lost its crossing");
    s.occluders.push_back(floating_box(s, *x, 0.035, 0.02, 0.02));
  }
  s.finalize();
  return s;
}

// ---------------------------------------------------------------- rendering

double ray_box(const Vec3& o, const Vec3& dir, const Box& box) {
  double t0 = -kInf, t1 = kInf;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (o[a] < box.min[a] || o[a] > box.max[a]) return -1.0;
      continue;
    }
    double ta = (box.min[a] - o[a]) / dir[a];
    double tb = (box.max[a] - o[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || t1 < 0.0) return -1.0;
  return t0 >= 0.0 ? t0 : 0.0;
}

double ray_capsule(const Vec3& o, const Vec3& dir, const Vec3& pa, const Vec3& pb, double r) {
  const double len = dir.norm();
  const Vec3 rd = dir / len;
  const Vec3 ba = pb - pa, oa = o - pa;
  const double baba = ba.dot(ba), bard = ba.dot(rd), baoa = ba.dot(oa);
  const double rdoa = rd.dot(oa), oaoa = oa.dot(oa);
  const double a = baba - bard * bard;
  if (a > 1e-300) {
    const double b = baba * rdoa - baoa * bard;
    const double c = baba * oaoa - baoa * baoa - r * r * baba;
    const double h = b * b - a * c;
    if (h < 0.0) return -1.0;
    const double t = (-b - std::sqrt(h)) / a;
    const double y = baoa + t * bard;
    if (y > 0.0 && y < baba) return t >= 0.0 ? t / len : -1.0;
    // Otherwise test the cap sphere on that side.
    const Vec3 oc = y <= 0.0 ? oa : Vec3(o - pb);
    const double bb = rd.dot(oc), cc = oc.dot(oc) - r * r;
    const double hh = bb * bb - cc;
    if (hh < 0.0) return -1.0;
    const double ts = -bb - std::sqrt(hh);
    return ts >= 0.0 ? ts / len : -1.0;
  }
  // Ray parallel to the axis: nearest cap sphere.
  double best = -1.0;
  for (const Vec3* center : {&pa, &pb}) {
    const Vec3 oc = o - *center;
    const double bb = rd.dot(oc), cc = oc.dot(oc) - r * r;
    const double hh = bb * bb - cc;
    if (hh < 0.0) continue;
    const double ts = -bb - std::sqrt(hh);
    if (ts >= 0.0 && (best < 0.0 || ts < best)) best = ts;
  }
  return best >= 0.0 ? best / len : -1.0;
}

RenderOutput render(const WorldScene& scene) {
  const CameraIntrinsics& cam = scene.camera;
  const Vec3 o = cam.pose.translation;
  if (!(scene.plane.signed_distance(o) > 0.0)) {
    throw Error(ErrorCode::InvalidView, "camera is not above the support plane");
  }
  const int w = cam.width, h = cam.height;
  const std::size_t npx = static_cast<std::size_t>(w) * h;

  std::vector<double> t_cable(npx, kInf);
  std::vector<int> cable_id(npx, -1);
  for (std::size_t ci = 0; ci < scene.cables.size(); ++ci) {
    const auto& c = scene.cables[ci];
    for (std::size_t s = 0; s + 1 < c.polyline.size(); ++s) {
      const Vec3 a = c.polyline[s], b = c.polyline[s + 1];
      const Vec3 lo = a.cwiseMin(b).array() - c.radius, hi = a.cwiseMax(b).array() + c.radius;
      double rmin = kInf, rmax = -kInf, cmin = kInf, cmax = -kInf;
      bool visible = true;
      for (int k = 0; k < 8; ++k) {
        const Vec3 corner((k & 1) ? hi.x() : lo.x(), (k & 2) ? hi.y() : lo.y(), (k & 4) ? hi.z() : lo.z());
        const auto pr = cam.project(corner);
        if (!pr) {
          visible = false;
          break;
        }
        rmin = std::min(rmin, pr->row);
        rmax = std::max(rmax, pr->row);
        cmin = std::min(cmin, pr->col);
        cmax = std::max(cmax, pr->col);
      }
      if (!visible) continue;
      const int r0 = std::max(0, static_cast<int>(std::floor(rmin)) - 1);
      const int r1 = std::min(h - 1, static_cast<int>(std::ceil(rmax)) + 1);
      const int c0 = std::max(0, static_cast<int>(std::floor(cmin)) - 1);
      const int c1 = std::min(w - 1, static_cast<int>(std::ceil(cmax)) + 1);
      for (int r = r0; r <= r1; ++r) {
        for (int col = c0; col <= c1; ++col) {
          const double t = ray_capsule(o, cam.ray_direction(r, col), a, b, c.radius);
          const std::size_t idx = static_cast<std::size_t>(r) * w + col;
          if (t > 0.0 && t < t_cable[idx]) {
            t_cable[idx] = t;
            cable_id[idx] = static_cast<int>(ci);
          }
        }
      }
    }
  }

  RenderOutput out;
  out.cable_masks.assign(scene.cables.size(), ImageGrid(w, h));
  out.cable_mask = ImageGrid(w, h);
  out.color = ImageGrid(w, h, 3);
  out.depth = ImageGrid(w, h);
  out.shelf_mask = ImageGrid(w, h);
  const Rgb shelf_color{225, 225, 215}, box_color{170, 120, 80};
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      const std::size_t idx = static_cast<std::size_t>(r) * w + col;
      const Vec3 dir = cam.ray_direction(r, col);
      double t_plane = kInf;
      const double den = scene.plane.normal.dot(dir);
      if (den < 0.0) t_plane = -scene.plane.signed_distance(o) / den;
      double t_box = kInf;
      for (const auto& b : scene.occluders) {
        const double t = ray_box(o, dir, b);
        if (t >= 0.0) t_box = std::min(t_box, t);
      }
      const double t = std::min({t_cable[idx], t_box, t_plane});
      if (t == kInf) continue;
      const Rgb* color = &shelf_color;
      if (t == t_cable[idx] && t_cable[idx] < t_box && t_cable[idx] < t_plane) {
        const int ci = cable_id[idx];
        out.cable_masks[static_cast<std::size_t>(ci)].at(r, col) = 1.0f;
        out.cable_mask.at(r, col) = 1.0f;
        color = &scene.cables[static_cast<std::size_t>(ci)].color;
      } else if (t == t_box) {
        color = &box_color;
      } else {
        out.shelf_mask.at(r, col) = 1.0f;
      }
      for (int ch = 0; ch < 3; ++ch) out.color.at(r, col, ch) = static_cast<float>((*color)[ch]);
      out.depth.at(r, col) = static_cast<float>(t);
    }
  }
  return out;
}

double occluded_fraction(const WorldScene& scene, std::size_t cable) {
  const auto& pl = scene.cables.at(cable).polyline;
  const Vec3 o = scene.camera.pose.translation;
  double hidden = 0.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < pl.size(); ++i) {
    const double len = (pl[i + 1] - pl[i]).norm();
    const Vec3 mid = 0.5 * (pl[i] + pl[i + 1]);
    total += len;
    for (const auto& b : scene.occluders) {
      const double t = ray_box(o, mid - o, b);
      if (t >= 0.0 && t < 1.0) {
        hidden += len;
        break;
      }
    }
  }
  return total > 0.0 ? hidden / total : 0.0;
}

// ---------------------------------------------------------------- contact

double footprint_distance(const WorldScene& scene, std::size_t cable, const Vec3& p, Vec3* closest) {
  const auto& c = scene.cables.at(cable);
  const Vec3& n = scene.plane.normal;
  // Lift p into the plane that holds the centerline.
  const Vec3 q = p - (scene.plane.signed_distance(p) - c.radius) * n;
  double best = kInf;
  Vec3 best_pt = Vec3::Zero();
  for (std::size_t k = 0; k < c.chunk_boxes.size(); ++k) {
    if (box_distance(q, c.chunk_boxes[k]) > best) continue;
    const std::size_t s0 = k * kChunk, s1 = std::min(s0 + kChunk, c.polyline.size() - 1);
    for (std::size_t s = s0; s < s1; ++s) {
      Vec3 cp;
      const double d = segment_distance(q, c.polyline[s], c.polyline[s + 1], &cp);
      if (d < best) {
        best = d;
        best_pt = cp;
      }
    }
  }
  if (closest) *closest = best_pt - c.radius * n;
  return best;
}

ProbeResult probe(const WorldScene& scene, const Pose& pad_pose, double eps_contact) {
  ProbeResult res;
  res.map.pose = pad_pose;
  res.map.pitch = scene.pad.pitch;
  const Vec3& n = scene.plane.normal;
  for (int i = 0; i < TactilePad::kRows; ++i) {
    for (int j = 0; j < TactilePad::kCols; ++j) {
      const Vec3 c = res.map.taxel_position(i, j);
      const double h = scene.plane.signed_distance(c);
      double pen = -h;
      for (std::size_t k = 0; k < scene.cables.size(); ++k) {
        const double r = scene.cables[k].radius;
        if (h > 2.0 * r) continue;
        const Vec3 q = c - (h - r) * n;
        double rho = kInf;
        const auto& cab = scene.cables[k];
        for (std::size_t b = 0; b < cab.chunk_boxes.size(); ++b) {
          if (box_distance(q, cab.chunk_boxes[b]) >= std::min(rho, r)) continue;
          const std::size_t s0 = b * kChunk, s1 = std::min(s0 + kChunk, cab.polyline.size() - 1);
          for (std::size_t s = s0; s < s1; ++s) {
            rho = std::min(rho, segment_distance(q, cab.polyline[s], cab.polyline[s + 1], nullptr));
          }
        }
        if (rho < r) pen = std::max(pen, r + std::sqrt(r * r - rho * rho) - h);
      }
      double p = scene.pad.k_p * std::max(0.0, pen);
      if (p > 0.0 && scene.pad.noise_sigma > 0.0) {
        // Noise keyed on the pose and taxel so that repeated probes agree.
        std::uint64_t key = scene.seed;
        const Mat3& R = pad_pose.rotation.matrix();
        for (int e = 0; e < 9; ++e) key = mix64(key ^ std::bit_cast<std::uint64_t>(R.data()[e]));
        for (int e = 0; e < 3; ++e) key = mix64(key ^ std::bit_cast<std::uint64_t>(pad_pose.translation[e]));
        key = mix64(key ^ static_cast<std::uint64_t>(i * TactilePad::kCols + j));
        Rng rng(key);
        p = std::max(0.0, p + scene.pad.noise_sigma * rng.normal());
      }
      res.map.pressure(i, j) = p;
      if (p > eps_contact) res.touched = true;
    }
  }
  return res;
}

Vec3 map_centroid(const TactileMap& map, const PlaneModel& plane) {
  Vec3 acc = Vec3::Zero();
  double w = 0.0;
  for (int i = 0; i < TactilePad::kRows; ++i) {
    for (int j = 0; j < TactilePad::kCols; ++j) {
      const double p = map.pressure(i, j);
      if (p <= 0.0) continue;
      acc += p * map.taxel_position(i, j);
      w += p;
    }
  }
  if (!(w > 0.0)) throw Error(ErrorCode::EmptyContact, "tactile map has no pressure");
  return plane.project(acc / w);
}

}  // namespace dlo
