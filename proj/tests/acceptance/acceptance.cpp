// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria. `acceptance 2 7` runs a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "config_cases.hpp"
#include "diffsw/calibrate.hpp"
#include "diffsw/gradcheck.hpp"
#include "diffsw/io/commands.hpp"
#include "diffsw/io/config.hpp"
#include "diffsw/io/snapshot.hpp"
#include "test_support.hpp"

using namespace diffsw;
namespace cal = diffsw::calibrate;
namespace gc = diffsw::gradcheck;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x, int digits = 3) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

/// The shipped configuration; every experiment below starts from it.
const io::RunConfig& acc_mini() {
  static const io::RunConfig c = io::parse_config(test_util::acc_mini_config_path());
  return c;
}

const ModelState& spun_up() {
  static const ModelState s = [] {
    const io::RunConfig& c = acc_mini();
    return cal::spun_up_state(c.grid, c.physics, c.stepping, c.initial.spinup_steps,
                              c.initial.eddy_rms, c.initial.eddy_smoothing, c.seed);
  }();
  return s;
}

gc::LossFamily gradcheck_family() {
  const io::RunConfig& c = acc_mini();
  return cal::bsf_loss_family(spun_up(), c.physics, c.grid, c.stepping, c.gradcheck.scale_Ah,
                              c.gradcheck.scale_rbot);
}

Outcome purity_and_determinism() {
  const auto t0 = std::chrono::steady_clock::now();
  const io::RunConfig& c = acc_mini();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> factor(0.5, 2.0);
  int failures = 0;
  for (int k = 0; k < 100; ++k) {
    const ModelState s = test_util::random_state(c.grid, 1000 + k, 0.2);
    PhysParams p = c.physics;
    p.A_h *= factor(rng);
    p.r_bot *= factor(rng);
    p.kappa_T *= factor(rng);
    p.tau0 *= factor(rng);
    if (k % 2 == 1) {
      p.drag_mode = DragMode::quadratic;
      p.C_d = 1e-3 * factor(rng);
    }
    const ModelState s_copy = s;
    const PhysParams p_copy = p;
    const ModelState a = step(s, p, c.grid, c.stepping);
    const ModelState b = step(s, p, c.grid, c.stepping);
    const ModelState an = step_n(s, 5, p, c.grid, c.stepping);
    const ModelState bn = step_n(s, 5, p, c.grid, c.stepping);
    const bool inputs_same = bitwise_equal(s, s_copy) && p.A_h == p_copy.A_h &&
                             p.r_bot == p_copy.r_bot && bitwise_equal(p.T_star, p_copy.T_star);
    if (!inputs_same || !bitwise_equal(a, b) || !bitwise_equal(an, bn)) ++failures;
  }
  const double t = seconds_since(t0);
  return {failures == 0 && t < 60.0,
          "100 pairs, " + std::to_string(failures) + " violations, " + num(t) + " s"};
}

Outcome gradient_validation() {
  const auto t0 = std::chrono::steady_clock::now();
  const gc::LossProblem prob = gradcheck_family()(1);
  const auto sel = ad::DiffSelector::all();
  double worst = 0.0;
  for (gc::Mode mode : {gc::Mode::jvp, gc::Mode::vjp}) {
    for (std::uint64_t d = 0; d < 20; ++d) {
      const gc::Report r = gc::grad_error(prob.loss, prob.point, sel, 1e-4, 7000 + d, mode, 1);
      worst = std::max(worst, std::isfinite(r.error) ? r.error : INFINITY);
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && t < 60.0,
          "20 directions x 2 modes, max E = " + num(worst) + ", " + num(t) + " s"};
}

std::vector<Field> random_fields_like(const std::vector<Field>& like, std::mt19937_64& rng,
                                      const GridSpec& g) {
  std::vector<Field> out;
  for (const Field& f : like) {
    if (f.is_scalar()) {
      std::normal_distribution<double> n(0.0, 1.0);
      out.push_back(Field::scalar(f.item() * n(rng)));
    } else {
      double scale = std::max(max_abs(f), 1e-3);
      out.push_back(test_util::random_field(g, f.stagger(), rng, scale));
    }
  }
  return out;
}

double inner(const std::vector<Field>& a, const std::vector<Field>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += dot(a[k], b[k]);
  return s;
}

Outcome transpose_identity() {
  const io::RunConfig& c = acc_mini();
  double worst_identity = 0.0;
  for (DragMode mode : {DragMode::linear, DragMode::quadratic}) {
    PhysParams p = c.physics;
    p.drag_mode = mode;
    p.C_d = mode == DragMode::quadratic ? 2e-3 : 0.0;
    const std::vector<Field> x = model_inputs(spun_up(), p).values;
    std::mt19937_64 rng(31 + static_cast<int>(mode));
    for (int n = 1; n <= 8; ++n) {
      const ad::PureFunction f = rollout_function(p, c.grid, c.stepping, n);
      const std::vector<Field> k = random_fields_like(x, rng, c.grid);
      std::vector<std::optional<Field>> tangents(k.begin(), k.end());
      const ad::JvpResult j = ad::jvp(f, x, tangents);
      const std::vector<Field> v = random_fields_like(j.values, rng, c.grid);
      const ad::VjpResult r = ad::vjp(f, x, v);
      std::vector<Field> jt;
      for (const auto& gopt : r.gradients) jt.push_back(*gopt);
      worst_identity = std::max(worst_identity, rel(inner(v, j.tangents), inner(jt, k)));
    }
  }

  // Dense Jacobian on a 4x4 grid, one step: jvp columns against vjp rows.
  GridSpec g = make_channel_grid(4, 4, 4e5, 4e5, 100.0, -1e-4, 2e-11);
  PhysParams p;
  p.A_h = 1e4;
  p.r_bot = 1e-5;
  p.drag_mode = DragMode::quadratic;
  p.C_d = 2e-3;
  p.tau0 = 0.1;
  p.kappa_T = 1e3;
  p.lambda_relax = 1e-6;
  p.T_star = linear_temperature(g, 2, 12);
  const StepConfig sc{0.5 * cfl_limit_dt(g, p), 1};
  const std::vector<Field> x = model_inputs(test_util::random_state(g, 77, 0.2), p).values;
  const ad::PureFunction f = rollout_function(p, g, sc, 1);
  const std::vector<Field> y = f(x);
  std::vector<std::vector<double>> cols;
  for (std::size_t a = 0; a < x.size(); ++a) {
    for (std::size_t e = 0; e < x[a].size(); ++e) {
      std::vector<std::optional<Field>> t(x.size());
      for (std::size_t b = 0; b < x.size(); ++b) t[b] = Field::zeros_like(x[b]);
      (*t[a])[e] = 1.0;
      std::vector<double> col;
      for (const Field& to : ad::jvp(f, x, t).tangents) {
        col.insert(col.end(), to.values().begin(), to.values().end());
      }
      cols.push_back(std::move(col));
    }
  }
  double worst_dense = 0.0;
  std::size_t row = 0;
  for (std::size_t o = 0; o < y.size(); ++o) {
    for (std::size_t e = 0; e < y[o].size(); ++e, ++row) {
      std::vector<Field> ct;
      for (const Field& yo : y) ct.push_back(Field::zeros_like(yo));
      ct[o][e] = 1.0;
      std::size_t col = 0;
      for (const auto& gopt : ad::vjp(f, x, ct).gradients) {
        for (double val : gopt->values()) {
          const double ref = cols[col++][row];
          worst_dense = std::max(worst_dense, std::abs(val - ref) / std::max(1.0, std::abs(ref)));
        }
      }
    }
  }
  return {worst_identity <= 1e-10 && worst_dense <= 1e-10,
          "rollouts n=1..8 both drag modes, max relative gap " + num(worst_identity) +
              "; dense 4x4 Jacobian (" + std::to_string(row) + "x" + std::to_string(cols.size()) +
              ") max gap " + num(worst_dense)};
}

Outcome accuracy_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> n_list{1, 2, 4, 8, 16, 32};
  const auto reports =
      gc::accuracy_over_steps(gradcheck_family(), n_list,
                              io::gradcheck_selector(acc_mini().gradcheck), 1e-4,
                              acc_mini().seed);
  double first_min = 1.0, early = 0.0, late = 0.0;
  int n_early = 0, n_late = 0;
  bool defined = true;
  std::ostringstream table;
  for (const gc::Report& r : reports) {
    if (!r.accuracy) {
      defined = false;
      continue;
    }
    const double a = *r.accuracy;
    if (r.n_steps == 1) first_min = std::min(first_min, a);
    if (r.n_steps <= 2) early += a, ++n_early;
    if (r.n_steps >= 16) late += a, ++n_late;
    if (r.mode == gc::Mode::jvp) table << " n=" << r.n_steps << ":" << num(1.0 - a, 2);
    if (r.mode == gc::Mode::jvp && r.n_steps == 1) table << " (fd " << num(r.fd_value, 6) << ")";
  }
  early /= std::max(n_early, 1);
  late /= std::max(n_late, 1);
  const double t = seconds_since(t0);
  return {defined && first_min >= 0.99 && late <= early && t < 300.0,
          "accuracy(n=1) min " + num(first_min, 12) + ", mean{1,2} " + num(early, 12) +
              " >= mean{16,32} " + num(late, 12) + "; 1-acc(jvp)" + table.str() + "; " + num(t) +
              " s"};
}

Outcome linear_vjp_cost() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> n_list{8, 16, 32, 64, 128};
  const auto rows = gc::cost_scaling(gradcheck_family(), n_list, 5, ad::DiffSelector::all());
  std::vector<double> n, t;
  for (const auto& r : rows) {
    n.push_back(r.n_steps);
    t.push_back(r.vjp_ms);
  }
  const double slope = gc::loglog_slope(n, t);
  bool ratios_ok = true;
  std::ostringstream ratios;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k - 1].n_steps < 16) continue;
    const double q = t[k] / t[k - 1];
    ratios << " " << num(q);
    ratios_ok = ratios_ok && q >= 1.5 && q <= 3.0;
  }
  const double s = seconds_since(t0);
  return {slope >= 0.8 && slope <= 1.2 && ratios_ok && s < 600.0,
          "slope " + num(slope) + ", doubling ratios" + ratios.str() + ", vjp(128) " +
              num(t.back()) + " ms, " + num(s) + " s"};
}

Outcome toy_reconstruction() {
  const auto t0 = std::chrono::steady_clock::now();
  const io::RunConfig& c = acc_mini();
  const ModelState& reference = spun_up();
  const Field bad = cal::gaussian_perturbation(reference.T, c.grid, c.reconstruct.amplitude,
                                               c.reconstruct.sigma_frac * c.grid.Lx,
                                               0.5 * c.grid.Lx, 0.5 * c.grid.Ly);
  cal::ReconstructOptions o;
  o.l = 4;
  o.iters = 500;
  const auto r = cal::reconstruct_initial_state(reference, bad, c.physics, c.grid, c.stepping, o);
  const auto& first = r.history.records.front();
  const auto& last = r.history.records.back();
  const double loss_drop = first.loss / last.loss;
  const double dist_drop = first.metrics[0] / last.metrics[0];
  const double t = seconds_since(t0);
  return {loss_drop >= 1e3 && dist_drop >= 1e3 && last.iter <= 500 && t < 600.0,
          "loss reduced x" + num(loss_drop) + ", ||T0 - T_ref||^2 reduced x" + num(dist_drop) +
              " in " + std::to_string(last.iter) + " iterations, " + num(t) + " s"};
}

Outcome parameter_calibration() {
  const auto t0 = std::chrono::steady_clock::now();
  const io::RunConfig& c = acc_mini();
  const auto obs = cal::observe(
      spun_up(), c.physics, c.grid, c.stepping,
      cal::observation_steps(c.calibrate.obs_interval, c.calibrate.obs_steps));
  PhysParams start = c.physics;
  start.A_h = 1.5 * kTruthAh;
  start.r_bot = 0.5 * kTruthRbot;
  cal::CalibrateOptions o;
  o.alpha = c.calibrate.alpha;
  o.max_iters = 300;
  o.grad_tol = c.calibrate.grad_tol;
  const auto r = cal::calibrate_params(obs, start, c.grid, c.stepping, o);
  const double ea = std::abs(r.A_h / kTruthAh - 1.0);
  const double er = std::abs(r.r_bot / kTruthRbot - 1.0);
  const int iters = r.history.records.back().iter;
  const double t = seconds_since(t0);
  return {ea <= 0.05 && er <= 0.05 && iters <= 300 && t < 1800.0,
          "A_h " + num(r.A_h, 8) + " (err " + num(100 * ea, 2) + "%), r_bot " + num(r.r_bot, 8) +
              " (err " + num(100 * er, 2) + "%) after " + std::to_string(iters) +
              " iterations, " + num(t) + " s"};
}

Outcome sensitivity_structure() {
  const auto t0 = std::chrono::steady_clock::now();
  const io::RunConfig& c = acc_mini();
  const auto obs = cal::observe(
      spun_up(), c.physics, c.grid, c.stepping,
      cal::observation_steps(c.sensitivity.obs_interval, c.sensitivity.obs_steps));
  const auto grid = cal::sensitivity_grid(obs, c.physics, c.grid, c.stepping, kTruthAh / 10,
                                          kTruthAh * 10, kTruthRbot / 10, kTruthRbot * 10, 7, 7);
  const auto& truth = grid.at(3, 3);
  auto log_grad = [](const cal::SensitivityCell& cell) {
    return std::pair{cell.A_h * cell.dL_dAh, cell.r_bot * cell.dL_drbot};
  };
  bool corners_ok = true;
  std::ostringstream cos_list;
  for (std::size_t ia : {0u, 6u}) {
    for (std::size_t ir : {0u, 6u}) {
      const auto& cell = grid.at(ia, ir);
      const auto [ga, gr] = log_grad(cell);
      const double ta = std::log(truth.A_h / cell.A_h);
      const double tr = std::log(truth.r_bot / cell.r_bot);
      const double cosine = -(ga * ta + gr * tr) / (std::hypot(ga, gr) * std::hypot(ta, tr));
      cos_list << " " << num(cosine, 2);
      corners_ok = corners_ok && cell.finite && cosine > 0.0;
    }
  }
  const auto [ta, tr] = log_grad(truth);
  const double truth_mag = std::hypot(ta, tr);
  int smaller = 0, finite = 0;
  for (const auto& cell : grid.cells) {
    if (!cell.finite) continue;
    ++finite;
    const auto [ga, gr] = log_grad(cell);
    if (std::hypot(ga, gr) < truth_mag) ++smaller;
  }
  const bool truth_ok = truth.finite && smaller <= 0.05 * static_cast<double>(grid.cells.size());
  const double t = seconds_since(t0);
  return {corners_ok && truth_ok && t < 1200.0,
          "corner cosines to truth" + cos_list.str() + "; " + std::to_string(smaller) + " of " +
              std::to_string(finite) + " finite cells have a smaller gradient than the truth cell; " +
              num(t) + " s"};
}

Outcome conservation_and_dissipation() {
  const io::RunConfig& c = acc_mini();
  // Mass: nonzero-mean elevation, full forcing, 1000 steps.
  ModelState s = spun_up();
  for (double& x : s.eta.values()) x += 0.5;
  const double m0 = sum(s.eta);
  double scale = 0.0;
  for (double x : s.eta.values()) scale += std::abs(x);
  ModelState m = step_n(s, 1000, c.physics, c.grid, c.stepping);
  const double drift = std::abs(sum(m.eta) - m0) / scale;

  // Energy: no wind, no relaxation, linear drag.
  PhysParams p = c.physics;
  p.tau0 = 0.0;
  p.lambda_relax = 0.0;
  ModelState e = spun_up();
  double prev = total_energy(e, c.grid, p);
  double worst_rise = -INFINITY;
  for (int k = 0; k < 100; ++k) {
    e = step(e, p, c.grid, c.stepping);
    const double now = total_energy(e, c.grid, p);
    worst_rise = std::max(worst_rise, (now - prev) / prev);
    prev = now;
  }
  return {drift <= 1e-10 && worst_rise <= 0.0,
          "sum(eta) drift " + num(drift) + " relative over 1000 steps; largest per-step energy "
              "change " + num(worst_rise) + " relative over 100 unforced steps"};
}

Outcome io_contract() {
  const io::RunConfig& c = acc_mini();
  int bad_round_trips = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    ModelState s = test_util::random_state(c.grid, 5000 + k, 0.3);
    s.time = 312.5 * static_cast<double>(k);
    if (!bitwise_equal(io::decode_snapshot(io::encode_snapshot(s)), s)) ++bad_round_trips;
  }
  const std::string base = test_util::read_text(test_util::acc_mini_config_path());
  int accepted = 0, wrong_line = 0, cases = 0;
  for (const auto& bad : test_util::invalid_values()) {
    ++cases;
    int line = 0;
    const std::string text = test_util::with_value(base, bad, line);
    try {
      (void)io::parse_config_text(text);
      ++accepted;
      std::cerr << "accepted " << bad.section << "." << bad.key << " = " << bad.value << "\n";
    } catch (const io::ConfigError& e) {
      if (e.line() != line ||
          std::string(e.what()).find("line " + std::to_string(line)) == std::string::npos) {
        ++wrong_line;
        std::cerr << "wrong line for " << bad.section << "." << bad.key << ": " << e.what() << "\n";
      }
    }
  }
  return {bad_round_trips == 0 && accepted == 0 && wrong_line == 0,
          std::to_string(100 - bad_round_trips) + "/100 snapshots bitwise; " +
              std::to_string(cases - accepted - wrong_line) + "/" + std::to_string(cases) +
              " invalid config values rejected with their line"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"purity and determinism", purity_and_determinism},
      {"gradient validation", gradient_validation},
      {"transpose identity", transpose_identity},
      {"accuracy degradation trend", accuracy_trend},
      {"linear vjp cost", linear_vjp_cost},
      {"toy reconstruction", toy_reconstruction},
      {"parameter calibration", parameter_calibration},
      {"sensitivity structure", sensitivity_structure},
      {"conservation and dissipation", conservation_and_dissipation},
      {"io contract", io_contract},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && selected.count(id) == 0) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[k].first
              << "): " << o.detail << std::endl;
  }
  return failed;
}
