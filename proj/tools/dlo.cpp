// dlo: scenario generation, reconstruction, evaluation and plotting.
//
// Exit status: 0 complete reconstruction, 2 partial (some cable left in
// several segments), 3 probe budget exhausted, 1 any other error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dlo/error.hpp"
#include "dlo/pipeline.hpp"
#include "dlo/rundir.hpp"
#include "dlo/worldsim.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dlo::Error(dlo::ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("DLO_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return s;
  } catch (const std::exception&) {
    throw dlo::Error(dlo::ErrorCode::Config, std::string("DLO_SEED is not an unsigned integer: ") + v);
  }
}

int gen_scene(const std::string& source, std::optional<std::uint64_t> seed, const std::string& out) {
  const auto& names = dlo::template_names();
  dlo::WorldScene scene;
  if (std::find(names.begin(), names.end(), source) != names.end() || !fs::is_regular_file(source)) {
    scene = dlo::make_template(source, seed.value_or(0));
  } else {
    scene = dlo::load_scene(source);
    if (seed) scene.seed = *seed;
  }
  const fs::path path = out.empty() ? fs::path(scene.name + ".json") : fs::path(out);
  dlo::save_scene(path, scene);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int run(const std::string& scenario, const std::string& params_file, bool no_tactile,
        std::optional<std::uint64_t> seed, const std::string& out) {
  const dlo::WorldScene scene = dlo::load_scene(scenario);
  dlo::PipelineOptions opt;
  opt.tactile = !no_tactile;
  opt.seed = seed.value_or(scene.seed);
  opt.params = dlo::params_from_json_text(scene.params_json);
  if (!params_file.empty()) opt.params = dlo::params_from_json_text(slurp(params_file), opt.params);

  const dlo::PipelineResult res = dlo::run_pipeline(scene, opt);
  const fs::path dir = out.empty() ? fs::path("run_" + scene.name) : fs::path(out);
  dlo::write_run_dir(dir, scene, res);
  for (std::size_t i = 0; i < res.cables.size(); ++i) {
    const auto& c = res.cables[i];
    std::cout << "cable " << i << " (" << scene.cables[c.truth].name << "): "
              << c.refined_sorted.segment_count() << " segment(s), " << c.refined_sorted.endpoints.size()
              << " endpoints, " << c.exploration.probes << " probes, " << c.exploration.tactile.size()
              << " tactile points\n";
  }
  const int code = res.exit_code();
  std::cout << (code == 0 ? "complete" : "partial") << " reconstruction written to " << dir.string() << '\n';
  return code;
}

int eval(const std::string& run_dir, const std::string& reference, const std::string& target,
         const std::string& out) {
  const dlo::EvalReport report = dlo::evaluate_run(run_dir, reference, target);
  const fs::path path = out.empty() ? fs::path(run_dir) / "eval.json" : fs::path(out);
  dlo::write_report(path, report);
  for (const auto& c : report.cables) {
    std::cout << c.name << ": icp_rmse " << c.icp_rmse << " m, curve error mean " << c.curve_mean
              << " m / max " << c.curve_max << " m, " << c.segments << " segment(s)";
    if (c.reference_rmse_m > 0.0) std::cout << " (physical setup: " << c.reference_rmse_m << " m)";
    std::cout << '\n';
  }
  std::cout << "report written to " << path.string() << '\n';
  return 0;
}

int plot(const std::string& run_dir, const std::string& out) {
  const fs::path dir = out.empty() ? fs::path(run_dir) / "plots" : fs::path(out);
  const auto files = dlo::plot_run(run_dir, dir);
  std::cout << files.size() << " SVG files written to " << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cable reconstruction from camera and tactile data"};
  app.require_subcommand(1);

  std::string source, out, scenario, params_file, run_dir, reference, target = "P_dense";
  std::optional<std::uint64_t> seed;
  bool no_tactile = false;

  std::string template_list;
  for (const auto& n : dlo::template_names()) template_list += (template_list.empty() ? "" : ", ") + n;

  auto* gen = app.add_subcommand("gen-scene", "Write a scenario file from a template or config");
  gen->add_option("template", source, "Template name (" + template_list + ") or scenario file")->required();
  gen->add_option("--seed", seed, "Seed (overrides DLO_SEED)");
  gen->add_option("--out", out, "Output file (default <name>.json)");

  auto* runc = app.add_subcommand("run", "Reconstruct the cables of a scenario");
  runc->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  runc->add_option("--params", params_file, "JSON parameter overrides")->check(CLI::ExistingFile);
  runc->add_flag("--no-tactile", no_tactile, "Vision only; skip tactile exploration");
  runc->add_option("--seed", seed, "Seed (overrides DLO_SEED and the scenario seed)");
  runc->add_option("--out", out, "Output directory (default run_<name>)");

  auto* evalc = app.add_subcommand("eval", "Score a run against a reference run or scenario");
  evalc->add_option("run_dir", run_dir, "Run directory")->required();
  evalc->add_option("reference", reference, "Reference run directory or scenario file")->required();
  evalc->add_option("--target-cloud", target, "Reference cloud name in a reference run directory");
  evalc->add_option("--out", out, "Report file (default <run_dir>/eval.json)");

  auto* plotc = app.add_subcommand("plot", "Draw the intermediate clouds of a run as SVG");
  plotc->add_option("run_dir", run_dir, "Run directory")->required();
  plotc->add_option("--out", out, "Output directory (default <run_dir>/plots)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!seed) seed = env_seed();
    if (*gen) return gen_scene(source, seed, out);
    if (*runc) return run(scenario, params_file, no_tactile, seed, out);
    if (*evalc) return eval(run_dir, reference, target, out);
    if (*plotc) return plot(run_dir, out);
  } catch (const dlo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == dlo::ErrorCode::BudgetExhausted ? 3 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
