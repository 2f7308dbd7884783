#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffsw/dyncore.hpp"
#include "diffsw/gradcheck.hpp"

namespace diffsw::calibrate {

/// f + amplitude * exp(-r^2 / (2 sigma^2)) at cell centers, where r uses the
/// periodic zonal distance to (xc, yc).
Field gaussian_perturbation(const Field& f, const GridSpec& g, double amplitude, double sigma,
                            double xc, double yc);

struct HistoryRecord {
  int iter = 0;
  double loss = 0.0;
  std::vector<double> metrics;  // see OptimHistory::metric_names
  double grad_norm = 0.0;
  double alpha = 0.0;           // step size actually taken from this iterate (0 if none)
};

struct OptimHistory {
  std::vector<std::string> metric_names;
  std::vector<HistoryRecord> records;
};

// Initial-state reconstruction.

struct ReconstructOptions {
  int l = 4;                 // rollout length inside the loss
  double alpha = 0.0;        // <= 0: pick by a 3-point line search at iteration 0
  int iters = 500;
  int divergence_window = 10;
};

struct ReconstructResult {
  OptimHistory history;  // metrics: {distance} = ||T0 - T_ref||^2
  ModelState state;      // the reference state with the recovered T0
  double alpha = 0.0;
};

/// Gradient descent on L(T0) = ||S^l(T0) - S^l(T_ref)||^2 (temperature only),
/// differentiating with respect to T alone. `reference` carries T_ref and the
/// frozen u, v, eta.
ReconstructResult reconstruct_initial_state(const ModelState& reference, const Field& perturbed_T0,
                                            const PhysParams& p, const GridSpec& g,
                                            const StepConfig& c, const ReconstructOptions& o);

// Parameter calibration from barotropic streamfunction observations.

/// Rest state with a temperature ramp, integrated for `spinup_steps` under
/// `truth`, then seeded with random eddies of the given RMS speed.
ModelState spun_up_state(const GridSpec& g, const PhysParams& truth, const StepConfig& c,
                         int spinup_steps, double eddy_rms, int eddy_smoothing,
                         std::uint64_t seed);

/// interval, 2 interval, ..., total.
std::vector<int> observation_steps(int interval, int total);

struct ObservationSet {
  ModelState initial;
  std::vector<int> steps;   // strictly increasing step indices after `initial`
  std::vector<Field> psi;   // reference streamfunction at each step
  double norm = 1.0;        // mean over observations of mean(psi^2)
};

ObservationSet observe(const ModelState& initial, const PhysParams& truth, const GridSpec& g,
                       const StepConfig& c, std::vector<int> steps);

/// Mean over observations of bsf_mse_loss, divided by obs.norm, as a function
/// of the model_inputs leaves.
ad::PureFunction observation_loss(const ObservationSet& obs, const PhysParams& fixed,
                                  const GridSpec& g, const StepConfig& c);

struct LossPartials {
  double loss = 0.0;
  double dL_dAh = 0.0;
  double dL_drbot = 0.0;
};

/// Loss and raw partial derivatives at (p.A_h, p.r_bot): two forward-mode
/// passes, or one reverse sweep.
LossPartials loss_partials(const ObservationSet& obs, const PhysParams& p, const GridSpec& g,
                           const StepConfig& c, gradcheck::Mode mode = gradcheck::Mode::jvp);

double observation_loss_value(const ObservationSet& obs, const PhysParams& p, const GridSpec& g,
                              const StepConfig& c);

struct CalibrateOptions {
  double alpha = 1.0;       // base step in log-parameter space
  int max_iters = 300;
  int max_halvings = 20;
  double grad_tol = 0.0;    // stop once the log-space gradient norm falls below this
  int divergence_window = 10;
  gradcheck::Mode mode = gradcheck::Mode::jvp;
};

struct CalibrationResult {
  OptimHistory history;  // metrics: {A_h, r_bot} in raw units
  double A_h = 0.0;
  double r_bot = 0.0;
};

/// Gradient descent on (log A_h, log r_bot) from the values in `init`, with
/// halve-on-increase backtracking. Every other parameter is taken from `init`.
CalibrationResult calibrate_params(const ObservationSet& obs, const PhysParams& init,
                                   const GridSpec& g, const StepConfig& c,
                                   const CalibrateOptions& o);

/// Gradient-check loss family: the BSF misfit after n steps from `initial`
/// against the truth run, normalized to 1 at the evaluation point. Leaves are
/// u, v, eta, T, A_h, r_bot, with A_h and r_bot expressed as multiples of their
/// truth values and evaluated at (scale_Ah, scale_rbot). The v leaf is masked
/// so that its wall row has no effect.
gradcheck::LossFamily bsf_loss_family(const ModelState& initial, const PhysParams& truth,
                                      const GridSpec& g, const StepConfig& c, double scale_Ah,
                                      double scale_rbot);

// Sensitivity map.

struct SensitivityCell {
  double A_h = 0.0;
  double r_bot = 0.0;
  double loss = 0.0;
  double dL_dAh = 0.0;
  double dL_drbot = 0.0;
  bool finite = true;
};

struct SensitivityGrid {
  std::vector<double> A_axis;
  std::vector<double> r_axis;
  std::vector<SensitivityCell> cells;  // r index major, A index minor

  const SensitivityCell& at(std::size_t ia, std::size_t ir) const {
    return cells[ir * A_axis.size() + ia];
  }
};

/// n points from lo to hi, evenly spaced in log.
std::vector<double> log_space(double lo, double hi, int n);

SensitivityGrid sensitivity_grid(const ObservationSet& obs, const PhysParams& base,
                                 const GridSpec& g, const StepConfig& c, double A_lo, double A_hi,
                                 double r_lo, double r_hi, int n_a, int n_r);

}  // namespace diffsw::calibrate
