#include "dlo/rundir.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "dlo/error.hpp"
#include "dlo/fitting.hpp"
#include "dlo/pipeline.hpp"
#include "dlo/topology.hpp"
#include "dlo/worldsim.hpp"
#include "format_util.hpp"
#include "json.hpp"

namespace dlo {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "missing file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
}

PointCloud read_cloud(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::Io, "missing file " + path.string());
  return read_ply(path);
}

// Reference cloud per ground-truth cable name.
std::map<std::string, PointCloud> reference_clouds(const fs::path& reference, const std::string& target) {
  std::map<std::string, PointCloud> out;
  if (fs::is_directory(reference)) {
    const json m = read_json(reference / "manifest.json");
    for (const auto& c : m.at("cables")) {
      const std::string dir = "cable_" + std::to_string(c.at("index").get<std::size_t>());
      out.emplace(c.at("truth").get<std::string>(), read_cloud(reference / dir / (target + ".ply")));
    }
    return out;
  }
  if (!fs::exists(reference)) throw Error(ErrorCode::Io, "missing file " + reference.string());
  WorldScene scene = load_scene(reference);
  scene.occluders.clear();
  const RenderOutput r = render(scene);
  for (std::size_t k = 0; k < scene.cables.size(); ++k) {
    out.emplace(scene.cables[k].name, pixels_to_cloud(mask_pixels(r.cable_masks[k]), r.depth, scene.camera));
  }
  return out;
}

}  // namespace

EvalReport evaluate_run(const fs::path& run_dir, const fs::path& reference, const std::string& target_cloud) {
  const json m = read_json(run_dir / "manifest.json");
  const WorldScene scene = load_scene(run_dir / "scenario.json");
  const auto refs = reference_clouds(reference, target_cloud);

  EvalReport report;
  report.run_dir = run_dir.filename().string();
  report.reference = reference.filename().string();
  if (fs::exists(run_dir / "timing.json")) {
    report.runtime_s = read_json(run_dir / "timing.json").value("total", 0.0);
  }
  for (const auto& c : m.at("cables")) {
    const std::string dir = "cable_" + std::to_string(c.at("index").get<std::size_t>());
    CableReport cr;
    cr.name = c.at("truth").get<std::string>();
    cr.endpoints = c.at("endpoints").get<std::size_t>();
    cr.segments = c.at("segments").get<std::size_t>();
    cr.probes = c.at("probes").get<std::size_t>();

    std::size_t truth = scene.cables.size();
    for (std::size_t k = 0; k < scene.cables.size(); ++k) {
      if (scene.cables[k].name == cr.name) truth = k;
    }
    if (truth == scene.cables.size()) {
      throw Error(ErrorCode::Io, dir + ": cable '" + cr.name + "' is not in scenario.json");
    }
    cr.reference_rmse_m = scene.cables[truth].reference_rmse_m;

    const auto ref = refs.find(cr.name);
    if (ref == refs.end()) {
      throw Error(ErrorCode::Io, reference.string() + ": no reference cloud for cable '" + cr.name + "'");
    }
    const PointCloud source = read_cloud(run_dir / dir / "P_interpolated.ply");
    const RegistrationResult reg = icp(source, ref->second);
    cr.icp_rmse = reg.rmse;
    cr.icp_iterations = reg.iterations;

    const BSplineCurve truth_curve = cable_footprint(scene, truth);
    double weighted = 0.0;
    int samples = 0;
    for (const auto& s : c.at("splines")) {
      const BSplineCurve curve = read_spline_json(run_dir / s.at("file").get<std::string>());
      const CurveError e = curve_error(curve, truth_curve, 200);
      weighted += e.mean * 200;
      samples += 200;
      cr.curve_max = std::max(cr.curve_max, e.max);
    }
    cr.curve_mean = samples > 0 ? weighted / samples : std::numeric_limits<double>::infinity();
    report.cables.push_back(cr);
  }
  return report;
}

void write_report(const fs::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << report_to_json_text(report);
}

namespace {

struct Frame2 {
  double x0 = 0, y0 = 0, scale = 1;
  static constexpr double kSize = 600, kMargin = 40;

  std::pair<double, double> map(const Vec2& p) const {
    return {kMargin + (p.x() - x0) * scale, kSize - kMargin - (p.y() - y0) * scale};
  }
};

class Svg {
 public:
  explicit Svg(const std::string& title) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n"
         << "<title>" << title << "</title>\n"
         << "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n"
         << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">"
         << "<line x1=\"40\" y1=\"560\" x2=\"560\" y2=\"560\"/>"
         << "<line x1=\"40\" y1=\"560\" x2=\"40\" y2=\"40\"/></g>\n"
         << "<text x=\"300\" y=\"590\" text-anchor=\"middle\" font-size=\"12\">u (m)</text>\n"
         << "<text x=\"12\" y=\"300\" font-size=\"12\">v (m)</text>\n"
         << "<text x=\"300\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  }
  void point(const std::pair<double, double>& p, const char* cls, double r, const char* fill) {
    out_ << "<circle class=\"" << cls << "\" cx=\"" << fmt_g9(p.first) << "\" cy=\"" << fmt_g9(p.second)
         << "\" r=\"" << r << "\" fill=\"" << fill << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts) {
    out_ << "<polyline class=\"spline\" fill=\"none\" stroke=\"blue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out_ << (i ? " " : "") << fmt_g9(pts[i].first) << ',' << fmt_g9(pts[i].second);
    }
    out_ << "\"/>\n";
  }
  void save(const fs::path& path) {
    out_ << "</svg>\n";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
    f << out_.str();
  }

 private:
  std::ostringstream out_;
};

}  // namespace

std::vector<fs::path> plot_run(const fs::path& run_dir, const fs::path& out_dir) {
  const json m = read_json(run_dir / "manifest.json");
  const auto& pj = m.at("plane");
  PlaneModel plane;
  const auto nv = pj.at("normal").get<std::vector<double>>();
  plane.normal = Vec3(nv.at(0), nv.at(1), nv.at(2));
  plane.d = pj.at("d").get<double>();
  const PlaneBasis basis(plane);

  std::vector<fs::path> written;
  for (const auto& c : m.at("cables")) {
    const std::string dir = "cable_" + std::to_string(c.at("index").get<std::size_t>());
    const fs::path in = run_dir / dir;
    std::map<std::string, PointCloud> clouds;
    std::map<std::string, SortedPolyline> sorted;
    sorted["P_sorted"] = read_sorted_csv(in / "P_sorted.csv");
    sorted["P_merged"] = read_sorted_csv(in / "P_merged_sorted.csv");
    sorted["P_interpolated"] = read_sorted_csv(in / "P_refined_sorted.csv");
    for (const auto& name : plotted_clouds()) {
      clouds[name] = name == "P_sorted" ? sorted[name].cloud : read_cloud(in / (name + ".ply"));
    }
    std::vector<BSplineCurve> splines;
    for (const auto& s : c.at("splines")) splines.push_back(read_spline_json(run_dir / s.at("file").get<std::string>()));

    // Shared axes for all plots of one cable.
    double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x, hi_x = -lo_x, hi_y = -lo_x;
    for (const auto& [name, cloud] : clouds) {
      for (const auto& p : cloud.points) {
        const Vec2 q = basis.to_2d(p);
        lo_x = std::min(lo_x, q.x());
        hi_x = std::max(hi_x, q.x());
        lo_y = std::min(lo_y, q.y());
        hi_y = std::max(hi_y, q.y());
      }
    }
    Frame2 f;
    if (lo_x <= hi_x) {
      const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-6});
      f.x0 = lo_x;
      f.y0 = lo_y;
      f.scale = (Frame2::kSize - 2 * Frame2::kMargin) / span;
    }

    fs::create_directories(out_dir / dir);
    for (const auto& name : plotted_clouds()) {
      Svg svg(dir + " " + name);
      for (const auto& p : clouds[name].points) svg.point(f.map(basis.to_2d(p)), "point", 2.0, "black");
      if (name == "P_interpolated") {
        for (const auto& curve : splines) {
          std::vector<std::pair<double, double>> pts;
          for (const auto& p : sample_curve(curve, 200).points) pts.push_back(f.map(basis.to_2d(p)));
          svg.polyline(pts);
        }
      }
      if (const auto it = sorted.find(name); it != sorted.end()) {
        for (const auto& e : it->second.endpoints) svg.point(f.map(basis.to_2d(e.position)), "endpoint", 5.0, "red");
      }
      const fs::path path = out_dir / dir / (name + ".svg");
      svg.save(path);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace dlo
