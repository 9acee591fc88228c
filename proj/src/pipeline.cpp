#include "dlo/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "dlo/cloudproc.hpp"
#include "dlo/error.hpp"
#include "format_util.hpp"
#include "json.hpp"

namespace dlo {

namespace {

using json = nlohmann::json;

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

ReconParams params_from_json_text(const std::string& text, const ReconParams& base) {
  ReconParams p = base;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("parameters are not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::Config, "parameters must be a JSON object");
  static const std::vector<std::string> known = {
      "d_min", "d_m", "t_P", "t_H", "delta_y", "delta_z", "theta_deg", "r_search",
      "alpha_max_deg", "max_rotation_attempts", "eps_contact", "voxel_origin", "hover_height",
      "max_descent", "probe_budget", "ransac_inlier_tol", "ransac_max_iters", "shelf_stride",
      "min_cluster_size", "spatial_weight", "cluster_cut", "spline_degree", "spline_samples"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::Config, "unknown parameter '" + key + "'");
    }
  }
  try {
    read_field(j, "d_min", p.d_min);
    read_field(j, "d_m", p.d_m);
    read_field(j, "t_P", p.t_P);
    read_field(j, "t_H", p.t_H);
    read_field(j, "delta_y", p.delta_y);
    read_field(j, "delta_z", p.delta_z);
    read_field(j, "theta_deg", p.theta_deg);
    read_field(j, "r_search", p.r_search);
    read_field(j, "alpha_max_deg", p.alpha_max_deg);
    read_field(j, "max_rotation_attempts", p.max_rotation_attempts);
    read_field(j, "eps_contact", p.eps_contact);
    if (auto it = j.find("voxel_origin"); it != j.end()) {
      const auto v = it->get<std::vector<double>>();
      if (v.size() != 3) throw Error(ErrorCode::Config, "voxel_origin needs 3 numbers");
      p.voxel_origin = {v[0], v[1], v[2]};
    }
    read_field(j, "hover_height", p.hover_height);
    read_field(j, "max_descent", p.max_descent);
    read_field(j, "probe_budget", p.probe_budget);
    read_field(j, "ransac_inlier_tol", p.ransac_inlier_tol);
    read_field(j, "ransac_max_iters", p.ransac_max_iters);
    read_field(j, "shelf_stride", p.shelf_stride);
    read_field(j, "min_cluster_size", p.min_cluster_size);
    read_field(j, "spatial_weight", p.spatial_weight);
    read_field(j, "cluster_cut", p.cluster_cut);
    read_field(j, "spline_degree", p.spline_degree);
    read_field(j, "spline_samples", p.spline_samples);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("bad parameter value: ") + e.what());
  }
  p.validate();
  return p;
}

namespace {

json params_json(const ReconParams& p) {
  return {{"d_min", p.d_min},
          {"d_m", p.d_m},
          {"t_P", p.t_P},
          {"t_H", p.t_H},
          {"delta_y", p.delta_y},
          {"delta_z", p.delta_z},
          {"theta_deg", p.theta_deg},
          {"r_search", p.r_search},
          {"alpha_max_deg", p.alpha_max_deg},
          {"max_rotation_attempts", p.max_rotation_attempts},
          {"eps_contact", p.eps_contact},
          {"voxel_origin", {p.voxel_origin.x(), p.voxel_origin.y(), p.voxel_origin.z()}},
          {"hover_height", p.hover_height},
          {"max_descent", p.max_descent},
          {"probe_budget", p.probe_budget},
          {"ransac_inlier_tol", p.ransac_inlier_tol},
          {"ransac_max_iters", p.ransac_max_iters},
          {"shelf_stride", p.shelf_stride},
          {"min_cluster_size", p.min_cluster_size},
          {"spatial_weight", p.spatial_weight},
          {"cluster_cut", p.cluster_cut},
          {"spline_degree", p.spline_degree},
          {"spline_samples", p.spline_samples}};
}

}  // namespace

std::string params_to_json_text(const ReconParams& params) { return params_json(params).dump(2) + "\n"; }

int PipelineResult::exit_code() const {
  for (const auto& c : cables) {
    if (!c.complete()) return 2;
  }
  return cables.empty() ? 2 : 0;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw e.with_context(name);
  }
}

std::size_t closest_cable(const WorldScene& scene, const std::array<double, 3>& color) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < scene.cables.size(); ++k) {
    double d = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double x = scene.cables[k].color[static_cast<std::size_t>(c)] - color[static_cast<std::size_t>(c)];
      d += x * x;
    }
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

CableRun reconstruct_cable(const WorldScene& scene, const PipelineResult& res, const PixelCluster& cluster,
                           const PipelineOptions& opt) {
  const ReconParams& p = opt.params;
  const CameraIntrinsics& cam = scene.camera;
  CableRun run;
  run.mean_color = cluster.mean_color;
  run.pixels = cluster.pixels.size();
  run.truth = closest_cable(scene, cluster.mean_color);

  run.dense = stage("pixels_to_cloud", [&] { return pixels_to_cloud(cluster.pixels, res.render.depth, cam); });
  run.skeleton = stage("skeletonize", [&] {
    const ImageGrid mask = pixels_to_mask(cluster.pixels, cam.width, cam.height);
    const auto skel = mask_pixels(skeletonize(mask));
    return pixels_to_cloud(skel, res.render.depth, cam);
  });
  run.down = stage("downsample", [&] {
    return merge_close_points(voxel_downsample(run.skeleton, p.d_m, p.voxel_origin), p.t_P);
  });
  run.proj = project_to_plane(run.down, res.plane);
  const SortOptions so{p.r_search, p.alpha_max_deg, 1e-6};
  run.sorted = stage("sort", [&] { return sort_and_find_endpoints(run.proj, res.plane, so); });

  if (opt.tactile) {
    run.exploration = stage("explore", [&] {
      SceneProbe probe(scene, p.eps_contact);
      return explore_from_endpoints(run.sorted, res.plane, probe, p);
    });
  }
  run.merged = merge_clouds(run.sorted.ordered_cloud(), run.exploration.tactile);
  run.merged_sorted = stage("sort merged", [&] { return sort_and_find_endpoints(run.merged, res.plane, so); });
  run.refined = project_to_plane(refine_merged(run.merged, p), res.plane);
  run.refined_sorted = stage("sort refined", [&] { return sort_and_find_endpoints(run.refined, res.plane, so); });

  stage("fit", [&] {
    for (std::size_t s = 0; s < run.refined_sorted.segment_count(); ++s) {
      const PointCloud seg = run.refined_sorted.segment_cloud(s);
      if (seg.size() < 2) continue;
      run.splines.push_back(fit_bspline(seg.points, p.spline_degree));
      const PointCloud samples = sample_curve(run.splines.back().curve, p.spline_samples);
      run.interpolated.points.insert(run.interpolated.points.end(), samples.points.begin(),
                                     samples.points.end());
    }
    return 0;
  });
  return run;
}

}  // namespace

PipelineResult run_pipeline(const WorldScene& input_scene, const PipelineOptions& options) {
  options.params.validate();
  WorldScene scene = input_scene;
  scene.seed = options.seed;  // drives the sensor noise
  PipelineResult res;
  res.options = options;
  const ReconParams& p = options.params;

  auto t0 = Clock::now();
  res.render = stage("render", [&] { return render(scene); });
  res.timing_s.emplace_back("render", seconds_since(t0));

  t0 = Clock::now();
  res.cleaned = stage("blur_and_clean", [&] { return blur_and_clean(res.render.cable_mask, res.render.color); });
  res.timing_s.emplace_back("blur_and_clean", seconds_since(t0));

  t0 = Clock::now();
  res.clusters = stage("cluster_pixels", [&] {
    return cluster_pixels(res.cleaned, res.render.color,
                          ClusterOptions{p.min_cluster_size, p.spatial_weight, p.cluster_cut});
  });
  res.timing_s.emplace_back("cluster_pixels", seconds_since(t0));

  t0 = Clock::now();
  res.plane = stage("plane fit", [&] {
    std::vector<Pixel> shelf;
    for (const auto& px : mask_pixels(res.render.shelf_mask)) {
      if (px.row % p.shelf_stride == 0 && px.col % p.shelf_stride == 0) shelf.push_back(px);
    }
    const PointCloud cloud = pixels_to_cloud(shelf, res.render.depth, scene.camera);
    return ransac_plane(cloud, p.ransac_inlier_tol, p.ransac_max_iters, options.seed,
                        scene.camera.pose.translation);
  });
  res.timing_s.emplace_back("plane fit", seconds_since(t0));

  t0 = Clock::now();
  const std::size_t n = res.clusters.clusters.size();
  res.cables.resize(n);
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < n; ++i) {
      workers.emplace_back([&, i] {
        try {
          res.cables[i] = reconstruct_cable(scene, res, res.clusters.clusters[i], options);
        } catch (const Error& e) {
          errors[i] = std::make_exception_ptr(e.with_context("cable " + std::to_string(i)));
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  res.timing_s.emplace_back("reconstruct", seconds_since(t0));
  return res;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorCode::Io, "SHA-256 unavailable");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

const std::vector<std::string>& plotted_clouds() {
  static const std::vector<std::string> names = {"P_skeleton", "P_down",   "P_proj",        "P_sorted",
                                                 "P_tactile",  "P_merged", "P_interpolated"};
  return names;
}

namespace {

json rgb_json(const std::array<double, 3>& c) { return {c[0], c[1], c[2]}; }

json walks_json(const ExplorationResult& ex) {
  json arr = json::array();
  for (const auto& w : ex.walks) {
    const char* outcome = w.outcome == WalkOutcome::ReachedEndpoint ? "reached_endpoint"
                          : w.outcome == WalkOutcome::DeadEnd       ? "dead_end"
                                                                    : "skipped";
    json jw = {{"endpoint", w.endpoint}, {"outcome", outcome}, {"accepted", w.accepted}};
    if (w.outcome == WalkOutcome::ReachedEndpoint) jw["reached"] = w.reached;
    arr.push_back(jw);
  }
  return arr;
}

}  // namespace

void write_run_dir(const std::filesystem::path& dir, const WorldScene& scene, const PipelineResult& res) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::string> artifacts;
  auto track = [&](const std::string& rel) { artifacts.push_back(rel); return dir / rel; };

  save_scene(track("scenario.json"), scene);
  write_ppm(track("color.ppm"), res.render.color);
  write_depth(track("depth.bin"), res.render.depth);
  write_pgm(track("cable_mask.pgm"), res.render.cable_mask);
  write_pgm(track("cleaned_mask.pgm"), res.cleaned);
  write_pgm(track("shelf_mask.pgm"), res.render.shelf_mask);

  json cables = json::array();
  for (std::size_t i = 0; i < res.cables.size(); ++i) {
    const CableRun& c = res.cables[i];
    const std::string sub = "cable_" + std::to_string(i) + "/";
    fs::create_directories(dir / sub, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + (dir / sub).string());
    write_ply(track(sub + "P_dense.ply"), c.dense);
    write_ply(track(sub + "P_skeleton.ply"), c.skeleton);
    write_ply(track(sub + "P_down.ply"), c.down);
    write_ply(track(sub + "P_proj.ply"), c.proj);
    write_sorted_csv(track(sub + "P_sorted.csv"), c.sorted);
    write_ply(track(sub + "P_tactile.ply"), c.exploration.tactile);
    write_ply(track(sub + "P_merged.ply"), c.merged);
    write_sorted_csv(track(sub + "P_merged_sorted.csv"), c.merged_sorted);
    write_ply(track(sub + "P_refined.ply"), c.refined);
    write_sorted_csv(track(sub + "P_refined_sorted.csv"), c.refined_sorted);
    write_ply(track(sub + "P_interpolated.ply"), c.interpolated);
    write_trace_csv(track(sub + "trace.csv"), c.exploration.trace);
    json splines = json::array();
    for (std::size_t k = 0; k < c.splines.size(); ++k) {
      const std::string name = "spline_" + std::to_string(k) + ".json";
      write_spline_json(track(sub + name), c.splines[k].curve);
      splines.push_back({{"file", sub + name}, {"polyline_fallback", c.splines[k].polyline_fallback}});
    }
    cables.push_back({{"index", i},
                      {"truth", scene.cables.at(c.truth).name},
                      {"mean_color", rgb_json(c.mean_color)},
                      {"pixels", c.pixels},
                      {"visual_points", c.proj.size()},
                      {"visual_segments", c.sorted.segment_count()},
                      {"visual_endpoints", c.sorted.endpoints.size()},
                      {"probes", c.exploration.probes},
                      {"tactile_points", c.exploration.tactile.size()},
                      {"walks", walks_json(c.exploration)},
                      {"merged_points", c.merged.size()},
                      {"merged_endpoints", c.merged_sorted.endpoints.size()},
                      {"refined_points", c.refined.size()},
                      {"segments", c.refined_sorted.segment_count()},
                      {"endpoints", c.refined_sorted.endpoints.size()},
                      {"complete", c.complete()},
                      {"splines", splines}});
  }

  json sums = json::object();
  for (const auto& rel : artifacts) sums[rel] = sha256_file(dir / rel);
  const json params_j = params_json(res.options.params);

  json manifest = {{"schema_version", 1},
                   {"scenario", "scenario.json"},
                   {"seed", res.options.seed},
                   {"tactile", res.options.tactile},
                   {"params", params_j},
                   {"plane", {{"normal", {res.plane.normal.x(), res.plane.normal.y(), res.plane.normal.z()}},
                              {"d", res.plane.d},
                              {"inliers", res.plane.inlier_count}}},
                   {"clusters", res.clusters.clusters.size()},
                   {"noise_pixels", res.clusters.noise.size()},
                   {"cables", cables},
                   {"exit_code", res.exit_code()},
                   {"artifacts", sums}};
  {
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
  }
  json timing = json::object();
  double total = 0.0;
  for (const auto& [name, s] : res.timing_s) {
    timing[name] = s;
    total += s;
  }
  timing["total"] = total;
  std::ofstream out(dir / "timing.json", std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "timing.json").string());
  out << timing.dump(2) << '\n';
}

}  // namespace dlo
