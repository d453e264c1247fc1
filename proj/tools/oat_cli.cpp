// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: simulate, recon, metrics, sweep, render,
// subsample-views. Every run writes a manifest next to its outputs.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <omp.h>
#include <optional>
#include <string>

#include "oat/errors.hpp"
#include "oat/io/config.hpp"
#include "oat/io/container.hpp"
#include "oat/io/manifest.hpp"
#include "oat/io/render.hpp"
#include "oat/metrics.hpp"
#include "oat/recon_fbp.hpp"
#include "oat/recon_iterative.hpp"
#include "oat/simulator.hpp"
#include "oat/version.hpp"

namespace fs = std::filesystem;
using namespace oat;

namespace {

struct GlobalOpts {
  std::string config_path;
  int threads = 0;
};

io::Manifest make_manifest(const std::string& command, int argc, char** argv,
                           const io::RunConfig* rc) {
  io::Manifest m;
  m.command = command;
  for (int i = 0; i < argc; ++i) m.args.emplace_back(argv[i]);
  if (rc) m.config_echo = rc->raw.dump();
  m.threads = omp_get_max_threads();
  return m;
}

SystemOperator make_operator(const io::RunConfig& rc,
                             const ScanGeometry& geom) {
  return SystemOperator(geom, rc.grid, rc.constants, rc.eir, rc.lattice);
}

double effective_cutoff(const io::RunConfig& rc, double flag_value) {
  double fc = flag_value > 0.0 ? flag_value : rc.fbp_cutoff_mhz;
  if (fc <= 0.0) fc = rc.lattice.nyquist_mhz();
  return fc;
}

FbpConfig make_fbp_config(const io::RunConfig& rc, double cutoff_mhz) {
  FbpConfig cfg;
  cfg.cutoff_mhz = cutoff_mhz;
  cfg.grid = rc.grid;
  cfg.interp = rc.fbp_interp;
  cfg.calibration = rc.fbp_calibration;
  return cfg;
}

void write_trace_csv(const fs::path& path,
                     const std::vector<SolverTraceRow>& trace) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write trace: " + path.string());
  os << "iteration,fidelity,penalty,total\n";
  os.precision(12);
  for (const auto& row : trace)
    os << row.iter << ',' << row.fidelity << ',' << row.penalty << ','
       << row.total << '\n';
}

CoefficientVector recon_fbp_from_freq(const FrequencyData& data,
                                      const ScanGeometry& geom,
                                      const io::RunConfig& rc,
                                      double cutoff_mhz) {
  const TimeData voltage = freq_to_time(data);
  const TimeData pressure = deconvolve(voltage, rc.eir, cutoff_mhz);
  return fbp_reconstruct(pressure, geom, rc.constants,
                         make_fbp_config(rc, cutoff_mhz));
}

int cmd_simulate(const GlobalOpts& g, const std::string& outdir,
                 bool want_time, std::optional<std::uint64_t> seed_flag,
                 int argc, char** argv) {
  io::RunConfig rc = io::load_run_config(g.config_path);
  if (seed_flag) rc.noise.seed = *seed_flag;
  fs::create_directories(outdir);

  const SystemOperator op = make_operator(rc, rc.geometry);
  const CoefficientVector truth = rasterize(rc.phantom, rc.grid);

  if (rc.noise_snr_db) {
    const SimulationResult clean = simulate(truth, op, {0.0, 0}, true);
    rc.noise.sigma = sigma_for_snr_db(*clean.time, *rc.noise_snr_db);
  }
  const SimulationResult sim =
      simulate(truth, op, rc.noise, want_time || rc.noise_snr_db.has_value());

  const std::string hash = io::geometry_hash(rc.geometry, rc.lattice);
  const fs::path freq_path = fs::path(outdir) / "data_freq.oat";
  const fs::path truth_path = fs::path(outdir) / "phantom.oat";
  io::save_freq_data(freq_path, sim.freq, rc.geometry);
  io::save_volume(truth_path, truth, hash);

  io::Manifest m = make_manifest("simulate", argc, argv, &rc);
  m.seed = rc.noise.seed;
  m.parameters["sigma"] = std::to_string(rc.noise.sigma);
  m.outputs = {freq_path.string(), truth_path.string()};
  if (want_time) {
    const fs::path time_path = fs::path(outdir) / "data_time.oat";
    io::save_time_data(time_path, *sim.time, rc.geometry);
    m.outputs.push_back(time_path.string());
  }
  io::write_manifest(fs::path(outdir) / "manifest.json", m);
  std::cout << "wrote " << freq_path.string() << " (" << op.num_poses()
            << " poses, sigma=" << rc.noise.sigma << ")\n";
  return 0;
}

int cmd_recon(const GlobalOpts& g, const std::string& algo,
              const std::string& data_path, const std::string& out_path,
              double cutoff_flag, double alpha_flag, double lambda_flag,
              int iters_flag, double tol_flag, const std::string& trace_path,
              int argc, char** argv) {
  io::RunConfig rc = io::load_run_config(g.config_path);
  const io::FreqScan scan = io::load_freq_scan(data_path, rc.geometry);
  if (scan.data.lattice.num_time_samples != rc.lattice.num_time_samples)
    throw ShapeError("data sampling does not match the config lattice");

  io::Manifest m = make_manifest("recon", argc, argv, &rc);
  m.parameters["algo"] = algo;
  m.parameters["data"] = data_path;

  CoefficientVector vol;
  std::vector<SolverTraceRow> trace;
  if (algo == "fbp") {
    const double fc = effective_cutoff(rc, cutoff_flag);
    m.parameters["cutoff_mhz"] = std::to_string(fc);
    vol = recon_fbp_from_freq(scan.data, scan.geometry, rc, fc);
  } else if (algo == "plsq") {
    PlsQConfig cfg = rc.plsq;
    if (alpha_flag >= 0.0) cfg.alpha = alpha_flag;
    if (iters_flag > 0) cfg.max_iters = iters_flag;
    if (tol_flag > 0.0) cfg.rel_tol = tol_flag;
    m.parameters["alpha"] = std::to_string(cfg.alpha);
    m.parameters["max_iters"] = std::to_string(cfg.max_iters);
    const SystemOperator op = make_operator(rc, scan.geometry);
    SolveResult res = solve_plsq(scan.data, op, cfg);
    vol = std::move(res.theta);
    trace = std::move(res.trace);
  } else if (algo == "plstv") {
    PlsTvConfig cfg = rc.plstv;
    if (lambda_flag >= 0.0) cfg.lambda_tv = lambda_flag;
    if (iters_flag > 0) cfg.max_iters = iters_flag;
    m.parameters["lambda_tv"] = std::to_string(cfg.lambda_tv);
    m.parameters["max_iters"] = std::to_string(cfg.max_iters);
    const SystemOperator op = make_operator(rc, scan.geometry);
    SolveResult res = solve_plstv(scan.data, op, cfg);
    vol = std::move(res.theta);
    trace = std::move(res.trace);
  } else {
    throw ConfigError("unknown algorithm: " + algo);
  }

  io::save_volume(out_path, vol,
                  io::geometry_hash(scan.geometry, scan.data.lattice));
  m.outputs = {out_path};
  if (!trace_path.empty() && !trace.empty()) {
    write_trace_csv(trace_path, trace);
    m.outputs.push_back(trace_path);
  }
  io::write_manifest(fs::path(out_path).string() + ".manifest.json", m);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_metrics(const GlobalOpts& g, const std::vector<std::string>& volumes,
                const std::string& out_path, int argc, char** argv) {
  io::RunConfig rc = io::load_run_config(g.config_path);
  std::ofstream os(out_path);
  if (!os) throw ConfigError("cannot write: " + out_path);
  os << "volume,signal_mean,background_mean,sigma_b,cnr,fwhm_mm\n";
  os.precision(12);
  for (const auto& vpath : volumes) {
    const CoefficientVector vol = io::load_volume(vpath);
    const RoiSpec roi = build_roi(vol, rc.structure);
    const RoiStats st = roi_stats(vol, roi);
    const StructureResolution res = fwhm_along_structure(vol, rc.structure);
    os << vpath << ',' << st.signal_mean << ',' << st.background_mean << ','
       << st.sigma_b << ',' << cnr(st) << ',' << res.mean_fwhm_mm << '\n';
  }
  os.close();

  io::Manifest m = make_manifest("metrics", argc, argv, &rc);
  m.outputs = {out_path};
  io::write_manifest(out_path + ".manifest.json", m);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_sweep(const GlobalOpts& g, const std::string& data_path,
              const std::string& out_path, const std::string& algo_flag,
              int argc, char** argv) {
  io::RunConfig rc = io::load_run_config(g.config_path);
  const std::string algo = algo_flag.empty() ? rc.sweep_algo : algo_flag;
  if (rc.sweep_values.size() < 2)
    throw ConfigError("[sweep] reg_values needs at least two entries");

  const io::FreqScan scan = io::load_freq_scan(data_path, rc.geometry);

  std::optional<SystemOperator> op;
  std::optional<double> shared_lipschitz;
  if (algo == "plsq" || algo == "plstv")
    op.emplace(make_operator(rc, scan.geometry));
  if (algo == "plstv" && !rc.plstv.lipschitz) {
    // one operator per sweep: estimate the step size once
    shared_lipschitz = estimate_fidelity_lipschitz(
        *op, rc.plstv.power_iters, rc.plstv.power_safety, rc.plstv.power_seed);
  }

  auto reconstruct = [&](double reg) -> CoefficientVector {
    if (algo == "fbp")
      return recon_fbp_from_freq(scan.data, scan.geometry, rc, reg);
    if (algo == "plsq") {
      PlsQConfig cfg = rc.plsq;
      cfg.alpha = reg;
      return solve_plsq(scan.data, *op, cfg).theta;
    }
    PlsTvConfig cfg = rc.plstv;
    cfg.lambda_tv = reg;
    if (shared_lipschitz) cfg.lipschitz = shared_lipschitz;
    return solve_plstv(scan.data, *op, cfg).theta;
  };
  if (algo != "fbp" && algo != "plsq" && algo != "plstv")
    throw ConfigError("unknown algorithm: " + algo);

  const auto points = sweep_tradeoff(reconstruct, rc.sweep_values,
                                     rc.structure);
  std::ofstream os(out_path);
  if (!os) throw ConfigError("cannot write: " + out_path);
  os << tradeoff_csv(points);
  os.close();

  io::Manifest m = make_manifest("sweep", argc, argv, &rc);
  m.parameters["algo"] = algo;
  m.outputs = {out_path};
  io::write_manifest(out_path + ".manifest.json", m);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_render(const std::string& volume_path, const std::string& out_path,
               const std::string& axis_name, bool mip, int slice_index,
               const std::string& window_text, int argc, char** argv) {
  const CoefficientVector vol = io::load_volume(volume_path);
  io::Axis axis = io::Axis::Z;
  if (axis_name == "x") axis = io::Axis::X;
  else if (axis_name == "y") axis = io::Axis::Y;
  else if (axis_name != "z") throw ConfigError("axis must be x, y or z");

  std::optional<io::DisplayWindow> window;
  if (!window_text.empty()) {
    const auto lohi = io::parse_double_list(window_text);
    if (lohi.size() != 2) throw ConfigError("--window takes lo,hi");
    window = io::DisplayWindow{lohi[0], lohi[1]};
  }

  io::Image8 img;
  if (mip) {
    img = window ? io::mip_render(vol, axis, *window)
                 : io::mip_render(vol, axis);
  } else {
    const io::DisplayWindow w =
        window ? *window
               : io::DisplayWindow::from_range(std::span<const double>(
                     vol.values.data(), vol.values.size()));
    img = io::slice_render(vol, axis, slice_index, w);
  }
  io::write_pgm(out_path, img);

  io::Manifest m = make_manifest("render", argc, argv, nullptr);
  m.parameters["volume"] = volume_path;
  m.parameters["axis"] = axis_name;
  m.parameters["mode"] = mip ? "mip" : "slice";
  m.outputs = {out_path};
  io::write_manifest(out_path + ".manifest.json", m);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_subsample(const GlobalOpts& g, const std::string& data_path,
                  const std::string& out_path, int keep, int argc,
                  char** argv) {
  io::RunConfig rc = io::load_run_config(g.config_path);
  const io::FreqScan dense = io::load_freq_scan(data_path, rc.geometry);
  const io::FreqScan sub = io::subsample_views(dense.data, dense.geometry, keep);
  io::save_freq_data(out_path, sub.data, sub.geometry);

  io::Manifest m = make_manifest("subsample-views", argc, argv, &rc);
  m.parameters["n"] = std::to_string(keep);
  m.parameters["data"] = data_path;
  m.outputs = {out_path};
  io::write_manifest(out_path + ".manifest.json", m);
  std::cout << "wrote " << out_path << " (" << keep << " views)\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"3-D optoacoustic tomography toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--threads", g.threads, "OpenMP thread count (0 = default)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "phantom + scan -> data files");
  std::string sim_out = "sim_out";
  bool sim_time = false;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("-c,--config", g.config_path, "run configuration")->required();
  sim->add_option("-o,--out", sim_out, "output directory");
  sim->add_flag("--time-data", sim_time, "also write temporal samples");
  sim->add_option("--seed", sim_seed, "override the noise seed");

  // recon
  auto* rec = app.add_subcommand("recon", "data -> volume");
  std::string rec_algo, rec_data, rec_out = "volume.oat", rec_trace;
  double rec_cutoff = 0.0, rec_alpha = -1.0, rec_lambda = -1.0,
         rec_tol = 0.0;
  int rec_iters = 0;
  rec->add_option("--algo", rec_algo, "fbp | plsq | plstv")->required();
  rec->add_option("-c,--config", g.config_path, "run configuration")->required();
  rec->add_option("--data", rec_data, "frequency-domain data file")->required();
  rec->add_option("-o,--out", rec_out, "output volume");
  rec->add_option("--cutoff-mhz", rec_cutoff, "FBP Hann cutoff");
  rec->add_option("--alpha", rec_alpha, "PLS-Q regularization weight");
  rec->add_option("--lambda-tv", rec_lambda, "PLS-TV regularization weight");
  rec->add_option("--iters", rec_iters, "iteration cap");
  rec->add_option("--tol", rec_tol, "relative cost tolerance");
  rec->add_option("--trace", rec_trace, "write the cost trace CSV here");

  // metrics
  auto* met = app.add_subcommand("metrics", "volume(s) -> quality CSV");
  std::vector<std::string> met_vols;
  std::string met_out = "metrics.csv";
  met->add_option("-c,--config", g.config_path, "run configuration")->required();
  met->add_option("--volume", met_vols, "volume file(s)")->required();
  met->add_option("-o,--out", met_out, "output CSV");

  // sweep
  auto* swp = app.add_subcommand("sweep", "regularization sweep -> tradeoff CSV");
  std::string swp_data, swp_out = "sweep.csv", swp_algo;
  swp->add_option("-c,--config", g.config_path, "run configuration")->required();
  swp->add_option("--data", swp_data, "frequency-domain data file")->required();
  swp->add_option("-o,--out", swp_out, "output CSV");
  swp->add_option("--algo", swp_algo, "override [sweep] algo");

  // render
  auto* ren = app.add_subcommand("render", "volume -> PGM image");
  std::string ren_vol, ren_out = "image.pgm", ren_axis = "z", ren_window;
  bool ren_mip = false;
  int ren_slice = 0;
  ren->add_option("--volume", ren_vol, "volume file")->required();
  ren->add_option("-o,--out", ren_out, "output PGM");
  ren->add_option("--axis", ren_axis, "projection/slice axis (x|y|z)");
  ren->add_flag("--mip", ren_mip, "maximum intensity projection");
  ren->add_option("--slice", ren_slice, "slice index (when not --mip)");
  ren->add_option("--window", ren_window, "display window lo,hi");

  // subsample-views
  auto* sub = app.add_subcommand("subsample-views", "keep every k-th view");
  std::string sub_data, sub_out = "subset.oat";
  int sub_n = 0;
  sub->add_option("-c,--config", g.config_path, "run configuration")->required();
  sub->add_option("--data", sub_data, "dense frequency-domain data")->required();
  sub->add_option("--n", sub_n, "number of views to keep")->required();
  sub->add_option("-o,--out", sub_out, "output data file");

  CLI11_PARSE(app, argc, argv);
  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (sim->parsed())
      return cmd_simulate(g, sim_out, sim_time, sim_seed, argc, argv);
    if (rec->parsed())
      return cmd_recon(g, rec_algo, rec_data, rec_out, rec_cutoff, rec_alpha,
                       rec_lambda, rec_iters, rec_tol, rec_trace, argc, argv);
    if (met->parsed()) return cmd_metrics(g, met_vols, met_out, argc, argv);
    if (swp->parsed())
      return cmd_sweep(g, swp_data, swp_out, swp_algo, argc, argv);
    if (ren->parsed())
      return cmd_render(ren_vol, ren_out, ren_axis, ren_mip, ren_slice,
                        ren_window, argc, argv);
    if (sub->parsed())
      return cmd_subsample(g, sub_data, sub_out, sub_n, argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
