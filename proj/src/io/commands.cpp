#include "diffsw/io/commands.hpp"

#include <cstdio>
#include <fstream>

#include "diffsw/calibrate.hpp"
#include "diffsw/gradcheck.hpp"
#include "diffsw/io/csv.hpp"
#include "diffsw/io/snapshot.hpp"

namespace diffsw::io {

namespace fs = std::filesystem;

namespace {

void write_resolved(const RunConfig& c, const fs::path& dir) {
  std::ofstream out(dir / "config.resolved");
  out << c.resolved_text();
  if (!out) throw InvalidArgument("cannot write " + (dir / "config.resolved").string());
}

fs::path snapshot_path(const fs::path& dir, int step) {
  char name[32];
  std::snprintf(name, sizeof name, "snapshot_%08d.dosn", step);
  return dir / name;
}

ModelState experiment_initial_state(const RunConfig& c) {
  return calibrate::spun_up_state(c.grid, c.physics, c.stepping, c.initial.spinup_steps,
                                  c.initial.eddy_rms, c.initial.eddy_smoothing, c.seed);
}

void write_history(const calibrate::OptimHistory& h, const fs::path& path) {
  std::vector<std::string> header{"iter", "loss"};
  header.insert(header.end(), h.metric_names.begin(), h.metric_names.end());
  header.push_back("grad_norm");
  header.push_back("alpha");
  CsvWriter csv(path, header);
  for (const auto& r : h.records) {
    std::vector<CsvWriter::Cell> row{static_cast<long long>(r.iter), r.loss};
    row.insert(row.end(), r.metrics.begin(), r.metrics.end());
    row.emplace_back(r.grad_norm);
    row.emplace_back(r.alpha);
    csv.row(row);
  }
}

}  // namespace

ad::DiffSelector gradcheck_selector(const GradcheckConfig& c) {
  if (c.leaves.size() == 1 && c.leaves[0] == "all") return ad::DiffSelector::all();
  return ad::DiffSelector::only(c.leaves);
}

void prepare_output_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) {
      throw InvalidArgument("output path " + dir.string() + " exists and is not a directory");
    }
    if (!fs::is_empty(dir)) {
      if (!force) {
        throw InvalidArgument("output directory " + dir.string() +
                              " is not empty; pass --force to replace it");
      }
      for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
    }
  }
  fs::create_directories(dir);
}

void command_run(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  ModelState s;
  if (o.init) {
    s = read_snapshot(*o.init, c.grid);
  } else {
    s = zero_state(c.grid);
    s.T = c.physics.T_star;
    add_random_eddies(s, c.grid, c.initial.eddy_rms, c.initial.eddy_smoothing, c.seed);
  }
  prepare_output_dir(o.out, o.force);
  write_resolved(c, o.out);

  validate_cfl(c.grid, c.physics, c.stepping);
  const Forcing forcing = make_forcing(c.grid, c.physics);
  const ParamsT<Field> p = constant_params<Field>(c.physics);
  CsvWriter diag(o.out / "diagnostics.csv",
                 {"step", "time", "transport_Sv", "energy", "eta_sum", "max_speed"});
  auto record = [&](int step) {
    diag.row({static_cast<long long>(step), s.time, transport(s, c.grid, 0),
              total_energy(s, c.grid, c.physics), sum(s.eta),
              std::max(max_abs(s.u), max_abs(s.v))});
    write_snapshot(s, snapshot_path(o.out, step));
  };
  record(0);
  const int every = c.output.snapshot_every;
  for (int k = 1; k <= c.stepping.n_steps; ++k) {
    s = step(s, p, c.physics, forcing, c.grid, c.stepping);
    if ((every > 0 && k % every == 0) || k == c.stepping.n_steps) record(k);
  }
  write_snapshot(s, o.out / "final.dosn");
  log << "run: " << c.stepping.n_steps << " steps of " << format_real(c.stepping.dt)
      << " s, transport " << format_real(transport(s, c.grid, 0)) << " Sv\n";
}

void command_gradcheck(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  prepare_output_dir(o.out, o.force);
  write_resolved(c, o.out);
  const ModelState initial = experiment_initial_state(c);
  write_snapshot(initial, o.out / "initial.dosn");
  const auto family = calibrate::bsf_loss_family(initial, c.physics, c.grid, c.stepping,
                                                 c.gradcheck.scale_Ah, c.gradcheck.scale_rbot);
  const auto reports = gradcheck::accuracy_over_steps(family, c.gradcheck.n_list,
                                                      gradcheck_selector(c.gradcheck),
                                                      c.gradcheck.eps, c.seed);
  CsvWriter csv(o.out / "gradcheck.csv",
                {"n_steps", "mode", "eps", "ad_value", "fd_value", "error", "accuracy"});
  for (const auto& r : reports) {
    csv.row({static_cast<long long>(r.n_steps), std::string(gradcheck::to_string(r.mode)), r.eps,
             r.ad_value, r.fd_value, r.error,
             r.accuracy ? CsvWriter::Cell{*r.accuracy} : CsvWriter::Cell{std::string("nan")}});
    log << "gradcheck: n=" << r.n_steps << " " << gradcheck::to_string(r.mode)
        << " error=" << format_real(r.error) << "\n";
  }
}

void command_reconstruct(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  prepare_output_dir(o.out, o.force);
  write_resolved(c, o.out);
  const ModelState reference = experiment_initial_state(c);
  const Field perturbed = calibrate::gaussian_perturbation(
      reference.T, c.grid, c.reconstruct.amplitude, c.reconstruct.sigma_frac * c.grid.Lx,
      0.5 * c.grid.Lx, 0.5 * c.grid.Ly);
  calibrate::ReconstructOptions ro;
  ro.l = c.reconstruct.l;
  ro.alpha = c.reconstruct.alpha;
  ro.iters = c.reconstruct.iters;
  const auto result =
      calibrate::reconstruct_initial_state(reference, perturbed, c.physics, c.grid, c.stepping, ro);
  write_history(result.history, o.out / "history.csv");
  write_snapshot(reference, o.out / "reference.dosn");
  write_snapshot(result.state, o.out / "recovered.dosn");
  const auto& first = result.history.records.front();
  const auto& last = result.history.records.back();
  log << "reconstruct: alpha=" << format_real(result.alpha) << " loss " << format_real(first.loss)
      << " -> " << format_real(last.loss) << ", distance " << format_real(first.metrics[0])
      << " -> " << format_real(last.metrics[0]) << "\n";
}

void command_calibrate(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  prepare_output_dir(o.out, o.force);
  write_resolved(c, o.out);
  const ModelState initial = experiment_initial_state(c);
  write_snapshot(initial, o.out / "initial.dosn");
  const auto obs = calibrate::observe(
      initial, c.physics, c.grid, c.stepping,
      calibrate::observation_steps(c.calibrate.obs_interval, c.calibrate.obs_steps));
  PhysParams start = c.physics;
  start.A_h *= c.calibrate.init_scale_Ah;
  start.r_bot *= c.calibrate.init_scale_rbot;
  calibrate::CalibrateOptions co;
  co.alpha = c.calibrate.alpha;
  co.max_iters = c.calibrate.max_iters;
  co.grad_tol = c.calibrate.grad_tol;
  co.mode = c.calibrate.mode;
  const auto result = calibrate::calibrate_params(obs, start, c.grid, c.stepping, co);
  write_history(result.history, o.out / "history.csv");
  log << "calibrate: A_h=" << format_real(result.A_h) << " (truth " << format_real(c.physics.A_h)
      << "), r_bot=" << format_real(result.r_bot) << " (truth " << format_real(c.physics.r_bot)
      << ") after " << result.history.records.back().iter << " iterations\n";
}

void command_sensitivity(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  prepare_output_dir(o.out, o.force);
  write_resolved(c, o.out);
  const ModelState initial = experiment_initial_state(c);
  write_snapshot(initial, o.out / "initial.dosn");
  const auto obs = calibrate::observe(
      initial, c.physics, c.grid, c.stepping,
      calibrate::observation_steps(c.sensitivity.obs_interval, c.sensitivity.obs_steps));
  const double s = c.sensitivity.span;
  const auto grid = calibrate::sensitivity_grid(
      obs, c.physics, c.grid, c.stepping, c.physics.A_h / s, c.physics.A_h * s,
      c.physics.r_bot / s, c.physics.r_bot * s, c.sensitivity.n_Ah, c.sensitivity.n_rbot);
  CsvWriter csv(o.out / "sensitivity.csv", {"A_h", "r_bot", "loss", "dL_dAh", "dL_drbot"});
  int non_finite = 0;
  for (const auto& cell : grid.cells) {
    csv.row({cell.A_h, cell.r_bot, cell.loss, cell.dL_dAh, cell.dL_drbot});
    non_finite += cell.finite ? 0 : 1;
  }
  log << "sensitivity: " << grid.cells.size() << " cells, " << non_finite << " non-finite\n";
}

void command_benchmark(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  prepare_output_dir(o.out, o.force);
  write_resolved(c, o.out);
  const ModelState initial = experiment_initial_state(c);
  const auto family = calibrate::bsf_loss_family(initial, c.physics, c.grid, c.stepping,
                                                 c.gradcheck.scale_Ah, c.gradcheck.scale_rbot);
  const auto rows = gradcheck::cost_scaling(family, c.benchmark.n_list, c.benchmark.repetitions,
                                            ad::DiffSelector::all());
  CsvWriter csv(o.out / "timing.csv", {"n_steps", "forward_ms", "vjp_ms"});
  std::vector<double> n, t;
  for (const auto& r : rows) {
    csv.row({static_cast<long long>(r.n_steps), r.forward_ms, r.vjp_ms});
    n.push_back(r.n_steps);
    t.push_back(r.vjp_ms);
  }
  log << "benchmark: vjp log-log slope " << format_real(gradcheck::loglog_slope(n, t)) << "\n";
}

}  // namespace diffsw::io
