#include "diffsw/calibrate.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "diffsw/errors.hpp"

namespace diffsw::calibrate {

Field gaussian_perturbation(const Field& f, const GridSpec& g, double amplitude, double sigma,
                            double xc, double yc) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_perturbation: sigma must be positive");
  if (f.stagger() != Stagger::center || f.nx() != g.nx || f.ny() != g.ny) {
    throw ShapeMismatch("gaussian_perturbation: expects a cell-centered field on the grid");
  }
  Field out = f;
  if (amplitude == 0.0) return out;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int j = 0; j < g.ny; ++j) {
    const double dy = g.y_at(Stagger::center, j) - yc;
    for (int i = 0; i < g.nx; ++i) {
      double dx = std::remainder(g.x_at(Stagger::center, i) - xc, g.Lx);
      out(i, j) += amplitude * std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
  return out;
}

namespace {

double sum_sq_diff(const Field& a, const Field& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

double norm2(const Field& f) { return std::sqrt(dot(f, f)); }

}  // namespace

ReconstructResult reconstruct_initial_state(const ModelState& reference, const Field& perturbed_T0,
                                            const PhysParams& p, const GridSpec& g,
                                            const StepConfig& c, const ReconstructOptions& o) {
  if (o.l < 1) throw InvalidArgument("reconstruct_initial_state: l must be >= 1");
  if (o.iters < 0) throw InvalidArgument("reconstruct_initial_state: iters must be >= 0");
  require_same_layout(reference.T, perturbed_T0, "reconstruct_initial_state");
  validate_cfl(g, p, c);

  const Field target = step_n(reference, o.l, p, g, c).T;
  const Forcing forcing = make_forcing(g, p);
  const int l = o.l;
  ad::PureFunction loss([p, g, c, l, forcing, target](const auto& leaves) {
    using V = std::decay_t<decltype(leaves[0])>;
    StateT<V> s = step_n(state_from(leaves, 0.0), l, params_from(leaves), p, forcing, g, c);
    return ops::sum(ops::square(ops::sub(s.T, ops::constant<V>(target))));
  });

  ModelState start = reference;
  start.T = perturbed_T0;
  ad::NamedInputs in = model_inputs(start, p);
  const std::size_t t_index = in.index_of("T");
  const ad::DiffSelector sel = ad::DiffSelector::only({"T"});

  ReconstructResult r;
  r.history.metric_names = {"distance"};
  double alpha = o.alpha;
  double previous = 0.0;
  int increases = 0;
  for (int it = 0;; ++it) {
    ad::GradResult gr = ad::grad(loss, in, sel);
    const Field& grad_T = gr.at("T");
    HistoryRecord rec;
    rec.iter = it;
    rec.loss = gr.loss;
    rec.metrics = {sum_sq_diff(in.values[t_index], reference.T)};
    rec.grad_norm = norm2(grad_T);
    if (!std::isfinite(gr.loss)) {
      throw OptimizationDiverged("reconstruction loss became non-finite at iteration " +
                                 std::to_string(it) + "; try a smaller alpha");
    }
    if (it > 0 && gr.loss > previous) {
      if (++increases >= o.divergence_window) {
        std::ostringstream msg;
        msg << "reconstruction diverged: loss increased for " << increases
            << " consecutive iterations (alpha=" << alpha << "); try a smaller alpha";
        throw OptimizationDiverged(msg.str());
      }
    } else {
      increases = 0;
    }
    previous = gr.loss;
    const bool done = it >= o.iters || rec.grad_norm == 0.0;
    if (!done && it == 0 && !(alpha > 0.0)) {
      // Parabola through phi(0), phi(a), phi(2a) along -grad.
      const double g2 = rec.grad_norm * rec.grad_norm;
      const double a = gr.loss / g2;
      auto phi = [&](double step) {
        std::vector<Field> x = in.values;
        x[t_index].axpy(-step, grad_T);
        return loss(x)[0].item();
      };
      const double f0 = gr.loss;
      const double f1 = phi(a);
      const double f2 = phi(2.0 * a);
      const double curv = f2 - 2.0 * f1 + f0;
      alpha = curv > 0.0 ? a * (0.5 + (f0 - f1) / curv) : a;
      if (!(alpha > 0.0) || !std::isfinite(alpha)) alpha = a;
    }
    rec.alpha = done ? 0.0 : alpha;
    r.history.records.push_back(rec);
    if (done) break;
    in.values[t_index].axpy(-alpha, grad_T);
  }
  r.state = reference;
  r.state.T = in.values[t_index];
  r.alpha = alpha;
  return r;
}

ModelState spun_up_state(const GridSpec& g, const PhysParams& truth, const StepConfig& c,
                         int spinup_steps, double eddy_rms, int eddy_smoothing,
                         std::uint64_t seed) {
  if (spinup_steps < 0) throw InvalidArgument("spin-up length must be >= 0");
  ModelState s = zero_state(g);
  if (!truth.T_star.empty()) s.T = truth.T_star;
  s = step_n(s, spinup_steps, truth, g, c);
  s.time = 0.0;
  if (eddy_rms > 0.0) add_random_eddies(s, g, eddy_rms, eddy_smoothing, seed);
  return s;
}

std::vector<int> observation_steps(int interval, int total) {
  if (interval < 1 || total < interval) {
    throw InvalidArgument("observation interval must be in [1, total steps]");
  }
  std::vector<int> out;
  for (int k = interval; k <= total; k += interval) out.push_back(k);
  return out;
}

ObservationSet observe(const ModelState& initial, const PhysParams& truth, const GridSpec& g,
                       const StepConfig& c, std::vector<int> steps) {
  if (steps.empty()) throw InvalidArgument("observe: no observation steps");
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (steps[k] < 1 || (k > 0 && steps[k] <= steps[k - 1])) {
      throw InvalidArgument("observe: observation steps must be positive and increasing");
    }
  }
  ObservationSet obs;
  obs.initial = initial;
  obs.steps = std::move(steps);
  ModelState s = initial;
  int done = 0;
  double norm = 0.0;
  for (int k : obs.steps) {
    s = step_n(s, k - done, truth, g, c);
    done = k;
    Field psi = barotropic_streamfunction(s, g);
    norm += dot(psi, psi) / static_cast<double>(psi.size());
    obs.psi.push_back(std::move(psi));
  }
  obs.norm = norm / static_cast<double>(obs.steps.size());
  if (!(obs.norm > 0.0)) throw InvalidArgument("observe: reference streamfunction is identically zero");
  return obs;
}

ad::PureFunction observation_loss(const ObservationSet& obs, const PhysParams& fixed,
                                  const GridSpec& g, const StepConfig& c) {
  validate_cfl(g, fixed, c);
  const double scale = 1.0 / (static_cast<double>(obs.steps.size()) * obs.norm);
  return ad::PureFunction([fixed, g, c, scale, steps = obs.steps, psi = obs.psi,
                           forcing = make_forcing(g, fixed)](const auto& leaves) {
    using V = std::decay_t<decltype(leaves[0])>;
    StateT<V> s = state_from(leaves, 0.0);
    const ParamsT<V> p = params_from(leaves);
    V total;
    int done = 0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      s = step_n(s, steps[k] - done, p, fixed, forcing, g, c, done);
      done = steps[k];
      V term = bsf_mse_loss(s.u, psi[k], g);
      total = k == 0 ? std::move(term) : ops::add(total, term);
    }
    return ops::cmul(scale, total);
  });
}

LossPartials loss_partials(const ObservationSet& obs, const PhysParams& p, const GridSpec& g,
                           const StepConfig& c, gradcheck::Mode mode) {
  const ad::PureFunction f = observation_loss(obs, p, g, c);
  const ad::NamedInputs in = model_inputs(obs.initial, p);
  LossPartials out;
  if (mode == gradcheck::Mode::vjp) {
    ad::GradResult r = ad::grad(f, in, ad::DiffSelector::only({"A_h", "r_bot"}));
    out.loss = r.loss;
    out.dL_dAh = r.at("A_h").item();
    out.dL_drbot = r.at("r_bot").item();
    return out;
  }
  const Field one = Field::scalar(1.0);
  ad::DirectionalResult a = ad::directional(f, in, ad::DiffSelector::only({"A_h"}), {one});
  ad::DirectionalResult b = ad::directional(f, in, ad::DiffSelector::only({"r_bot"}), {one});
  out.loss = a.loss;
  out.dL_dAh = a.derivative;
  out.dL_drbot = b.derivative;
  return out;
}

double observation_loss_value(const ObservationSet& obs, const PhysParams& p, const GridSpec& g,
                              const StepConfig& c) {
  return observation_loss(obs, p, g, c)(model_inputs(obs.initial, p).values)[0].item();
}

namespace {

[[noreturn]] void non_finite(double A, double r) {
  std::ostringstream msg;
  msg.precision(17);
  msg << "calibration loss is non-finite at A_h=" << A << " r_bot=" << r;
  throw OptimizationDiverged(msg.str());
}

double safe_loss(const ObservationSet& obs, const PhysParams& p, const GridSpec& g,
                 const StepConfig& c) {
  double l = 0.0;
  try {
    l = observation_loss_value(obs, p, g, c);
  } catch (const NonFiniteState&) {
    non_finite(p.A_h, p.r_bot);
  }
  if (!std::isfinite(l)) non_finite(p.A_h, p.r_bot);
  return l;
}

}  // namespace

CalibrationResult calibrate_params(const ObservationSet& obs, const PhysParams& init,
                                   const GridSpec& g, const StepConfig& c,
                                   const CalibrateOptions& o) {
  if (!(init.A_h > 0.0) || !(init.r_bot > 0.0)) {
    throw InvalidArgument("calibrate_params: initial A_h and r_bot must be positive");
  }
  if (!(o.alpha > 0.0) || o.max_iters < 0 || o.max_halvings < 0) {
    throw InvalidArgument("calibrate_params: invalid optimizer settings");
  }
  PhysParams p = init;
  double log_a = std::log(init.A_h);
  double log_r = std::log(init.r_bot);

  CalibrationResult r;
  r.history.metric_names = {"A_h", "r_bot"};
  int increases = 0;
  double previous = 0.0;
  for (int it = 0;; ++it) {
    p.A_h = std::exp(log_a);
    p.r_bot = std::exp(log_r);
    LossPartials lp;
    try {
      lp = loss_partials(obs, p, g, c, o.mode);
    } catch (const NonFiniteState&) {
      non_finite(p.A_h, p.r_bot);
    }
    if (!std::isfinite(lp.loss)) non_finite(p.A_h, p.r_bot);
    // Chain rule into log space.
    const double ga = p.A_h * lp.dL_dAh;
    const double gr = p.r_bot * lp.dL_drbot;
    HistoryRecord rec;
    rec.iter = it;
    rec.loss = lp.loss;
    rec.metrics = {p.A_h, p.r_bot};
    rec.grad_norm = std::hypot(ga, gr);

    if (it > 0 && lp.loss > previous) {
      if (++increases >= o.divergence_window) {
        throw OptimizationDiverged("calibration diverged; try a smaller alpha");
      }
    } else {
      increases = 0;
    }
    previous = lp.loss;

    if (it >= o.max_iters || rec.grad_norm == 0.0 || rec.grad_norm < o.grad_tol) {
      r.history.records.push_back(rec);
      break;
    }
    double alpha = o.alpha;
    bool accepted = false;
    for (int h = 0; h <= o.max_halvings; ++h, alpha *= 0.5) {
      PhysParams trial = p;
      trial.A_h = std::exp(log_a - alpha * ga);
      trial.r_bot = std::exp(log_r - alpha * gr);
      if (safe_loss(obs, trial, g, c) <= lp.loss) {
        accepted = true;
        break;
      }
    }
    rec.alpha = accepted ? alpha : 0.0;
    r.history.records.push_back(rec);
    if (!accepted) break;  // no descent left at the resolution of the halving schedule
    log_a -= alpha * ga;
    log_r -= alpha * gr;
  }
  r.A_h = std::exp(log_a);
  r.r_bot = std::exp(log_r);
  return r;
}

gradcheck::LossFamily bsf_loss_family(const ModelState& initial, const PhysParams& truth,
                                      const GridSpec& g, const StepConfig& c, double scale_Ah,
                                      double scale_rbot) {
  validate_cfl(g, truth, c);
  return [=, forcing = make_forcing(g, truth)](int n) {
    const Field ref = barotropic_streamfunction(step_n(initial, n, truth, g, c), g);
    const Field v_mask = g.face_mask(Stagger::v_face);
    ad::PureFunction raw([=](const auto& x) {
      using V = std::decay_t<decltype(x[0])>;
      ParamsT<V> p = constant_params<V>(truth);
      p.A_h = ops::scale(x[4], ops::scalar<V>(truth.A_h));
      p.r_bot = ops::scale(x[5], ops::scalar<V>(truth.r_bot));
      StateT<V> s{x[0], ops::mul(ops::constant<V>(v_mask), x[1]), x[2], x[3], 0.0};
      s = step_n(s, n, p, truth, forcing, g, c);
      return bsf_mse_loss(s.u, ref, g);
    });
    ad::NamedInputs point;
    point.add("u", initial.u);
    point.add("v", initial.v);
    point.add("eta", initial.eta);
    point.add("T", initial.T);
    point.add("A_h", Field::scalar(scale_Ah));
    point.add("r_bot", Field::scalar(scale_rbot));
    return gradcheck::LossProblem{gradcheck::normalize_at(raw, point.values), std::move(point)};
  };
}

std::vector<double> log_space(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw InvalidArgument("log_space: need 0 < lo < hi, n >= 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int k = 0; k < n; ++k) out[k] = std::pow(10.0, a + (b - a) * k / (n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

SensitivityGrid sensitivity_grid(const ObservationSet& obs, const PhysParams& base,
                                 const GridSpec& g, const StepConfig& c, double A_lo, double A_hi,
                                 double r_lo, double r_hi, int n_a, int n_r) {
  if (n_a < 3 || n_r < 3) throw InvalidArgument("sensitivity_grid: need at least 3x3 samples");
  SensitivityGrid sg;
  sg.A_axis = log_space(A_lo, A_hi, n_a);
  sg.r_axis = log_space(r_lo, r_hi, n_r);
  for (double r : sg.r_axis) {
    for (double a : sg.A_axis) {
      SensitivityCell cell;
      cell.A_h = a;
      cell.r_bot = r;
      PhysParams p = base;
      p.A_h = a;
      p.r_bot = r;
      try {
        LossPartials lp = loss_partials(obs, p, g, c, gradcheck::Mode::jvp);
        cell.loss = lp.loss;
        cell.dL_dAh = lp.dL_dAh;
        cell.dL_drbot = lp.dL_drbot;
        cell.finite = std::isfinite(lp.loss) && std::isfinite(lp.dL_dAh) &&
                      std::isfinite(lp.dL_drbot);
      } catch (const NonFiniteState&) {
        cell.loss = std::numeric_limits<double>::quiet_NaN();
        cell.dL_dAh = cell.loss;
        cell.dL_drbot = cell.loss;
        cell.finite = false;
      }
      sg.cells.push_back(cell);
    }
  }
  return sg;
}

}  // namespace diffsw::calibrate
