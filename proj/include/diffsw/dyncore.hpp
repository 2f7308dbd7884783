#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "diffsw/ad/ops.hpp"
#include "diffsw/autodiff.hpp"
#include "diffsw/errors.hpp"
#include "diffsw/grid.hpp"

namespace diffsw {

enum class DragMode : std::uint8_t { linear, quadratic };

/// Physical parameters. The scalar members listed in kParamLeaves are
/// differentiable; the rest are fixed configuration.
struct PhysParams {
  double A_h = 0.0;           // lateral viscosity (m^2/s)
  double r_bot = 0.0;         // linear bottom friction (1/s)
  DragMode drag_mode = DragMode::linear;
  double C_d = 0.0;           // quadratic drag coefficient (quadratic mode only)
  double g = 9.81;            // gravity (m/s^2)
  double rho0 = 1025.0;       // reference density (kg/m^3)
  double tau0 = 0.0;          // peak wind stress (N/m^2)
  double wind_band = 1.0;     // southern fraction of the channel under the wind
  double kappa_T = 0.0;       // tracer diffusivity (m^2/s)
  double lambda_relax = 0.0;  // surface temperature relaxation rate (1/s)
  Field T_star;               // relaxation target at cell centers (degC)
  double sqrt_eps = ad::kDefaultSqrtEps;

  /// Throws InvalidArgument when a non-negativity or range invariant fails.
  void validate(const GridSpec& grid) const;
};

/// Reference values of the two calibration targets.
inline constexpr double kTruthAh = 3435.5036038313715;  // m^2/s
inline constexpr double kTruthRbot = 1e-5;               // 1/s

struct StepConfig {
  double dt = 0.0;  // s
  int n_steps = 0;
};

/// Courant number limit enforced by step(): dt * sqrt(g H) * max(1/dx, 1/dy).
inline constexpr double kMaxCourant = 0.7;

double courant_number(const GridSpec& g, const PhysParams& p, double dt);
/// Largest admissible dt, i.e. the dt at which the Courant number reaches the limit.
double cfl_limit_dt(const GridSpec& g, const PhysParams& p);
void validate_cfl(const GridSpec& g, const PhysParams& p, const StepConfig& c);

/// Prognostic state. Generic over the evaluation mode so the same step code
/// serves plain runs, tangents and tapes.
template <class V>
struct StateT {
  V u;    // u-face (m/s)
  V v;    // v-face (m/s), zero on the northern wall row
  V eta;  // center (m)
  V T;    // center (degC)
  double time = 0.0;
};

using ModelState = StateT<Field>;

/// Differentiable parameters as mode values (1x1 scalars).
template <class V>
struct ParamsT {
  V A_h, r_bot, C_d, kappa_T, lambda_relax, tau0;
};

inline constexpr std::array<std::string_view, 4> kStateLeaves = {"u", "v", "eta", "T"};
inline constexpr std::array<std::string_view, 6> kParamLeaves = {"A_h",     "r_bot",        "C_d",
                                                                 "kappa_T", "lambda_relax", "tau0"};

ModelState zero_state(const GridSpec& g);
bool bitwise_equal(const ModelState& a, const ModelState& b) noexcept;

/// Leaves in the order u, v, eta, T, A_h, r_bot, C_d, kappa_T, lambda_relax, tau0.
ad::NamedInputs model_inputs(const ModelState& s, const PhysParams& p);

template <class V>
StateT<V> state_from(const std::vector<V>& leaves, double time) {
  return StateT<V>{leaves.at(0), leaves.at(1), leaves.at(2), leaves.at(3), time};
}

template <class V>
ParamsT<V> params_from(const std::vector<V>& leaves) {
  return ParamsT<V>{leaves.at(4), leaves.at(5), leaves.at(6),
                    leaves.at(7), leaves.at(8), leaves.at(9)};
}

template <class V>
ParamsT<V> constant_params(const PhysParams& p) {
  return ParamsT<V>{ops::scalar<V>(p.A_h),     ops::scalar<V>(p.r_bot),
                    ops::scalar<V>(p.C_d),     ops::scalar<V>(p.kappa_T),
                    ops::scalar<V>(p.lambda_relax), ops::scalar<V>(p.tau0)};
}

/// tau0 * sin^2(pi * y / (band * Ly)) on u-faces south of band * Ly, zero elsewhere.
Field wind_stress_profile(const GridSpec& g, double tau0, double band);
/// The same envelope evaluated at an arbitrary latitude y.
double wind_stress_at(double y, double Ly, double tau0, double band);

/// Time-invariant fields a rollout needs, computed once per rollout.
struct Forcing {
  Field coriolis_u;  // f at u-faces
  Field coriolis_v;  // f at v-faces
  Field wind_unit;   // wind profile per unit tau0, divided by rho0 * H (m/s^2 per N/m^2)
  Field T_star;
  Field mask_u;
  Field mask_v;
  bool masked = false;
};

Forcing make_forcing(const GridSpec& g, const PhysParams& p);

namespace detail {

void check_step_input(const Field& v, const GridSpec& g);
void check_finite(const Field& f, const char* name, double time);

template <class V>
void mark_step(const StateT<V>& s, const ParamsT<V>& p, int step) {
  if constexpr (std::is_same_v<V, ad::Var>) {
    for (const ad::Var* x : {&s.u, &s.v, &s.eta, &s.T, &p.A_h, &p.r_bot, &p.C_d, &p.kappa_T,
                             &p.lambda_relax, &p.tau0}) {
      if (x->tape() != nullptr) x->tape()->mark_step(step);
    }
  }
}

template <class V>
V bottom_drag(const V& w, const V& other_at_w, const ParamsT<V>& p, const PhysParams& fixed,
              const GridSpec& g) {
  if (fixed.drag_mode == DragMode::linear) return ops::scale(p.r_bot, w);
  const V speed = ops::sqrt_reg(ops::add(ops::square(w), ops::square(other_at_w)), fixed.sqrt_eps);
  return ops::cmul(1.0 / g.H, ops::scale(p.C_d, ops::mul(speed, w)));
}

}  // namespace detail

/// One forward-backward step. The continuity equation is advanced first; the
/// momentum equations then use the new elevation, and the v equation sees the
/// already updated u in its Coriolis term. The tracer is advected by the new
/// velocities with first-order upwind fluxes. Inputs are never modified.
template <class V>
StateT<V> step(const StateT<V>& s, const ParamsT<V>& p, const PhysParams& fixed,
               const Forcing& forcing, const GridSpec& g, const StepConfig& c) {
  detail::check_step_input(ops::primal(s.v), g);
  const double dt = c.dt;

  const V eta1 = ops::sub(s.eta, ops::cmul(dt * g.H, ops::divergence(s.u, s.v, g)));

  const V v_at_u = ops::interp(ops::interp(s.v, Stagger::center, g), Stagger::u_face, g);
  V tend_u = ops::sub(ops::mul(ops::constant<V>(forcing.coriolis_u), v_at_u), ops::cmul(fixed.g, ops::ddx(eta1, g)));
  tend_u = ops::add(tend_u, ops::scale(p.A_h, ops::laplacian(s.u, g)));
  tend_u = ops::sub(tend_u, detail::bottom_drag(s.u, v_at_u, p, fixed, g));
  tend_u = ops::add(tend_u, ops::scale(p.tau0, ops::constant<V>(forcing.wind_unit)));
  V u1 = ops::add(s.u, ops::cmul(dt, tend_u));
  if (forcing.masked) u1 = ops::mul(ops::constant<V>(forcing.mask_u), u1);

  const V u_at_v = ops::interp(ops::interp(u1, Stagger::center, g), Stagger::v_face, g);
  V tend_v = ops::add(ops::mul(ops::constant<V>(forcing.coriolis_v), u_at_v), ops::cmul(fixed.g, ops::ddy(eta1, g)));
  tend_v = ops::sub(ops::scale(p.A_h, ops::laplacian(s.v, g)), tend_v);
  tend_v = ops::sub(tend_v, detail::bottom_drag(s.v, u_at_v, p, fixed, g));
  V v1 = ops::add(s.v, ops::cmul(dt, tend_v));
  if (forcing.masked) v1 = ops::mul(ops::constant<V>(forcing.mask_v), v1);

  const V advection = ops::divergence(ops::upwind_x(u1, s.T, g), ops::upwind_y(v1, s.T, g), g);
  V tend_T = ops::sub(ops::scale(p.kappa_T, ops::laplacian(s.T, g)), advection);
  tend_T = ops::add(tend_T, ops::scale(p.lambda_relax, ops::sub(ops::constant<V>(forcing.T_star), s.T)));
  const V T1 = ops::add(s.T, ops::cmul(dt, tend_T));

  StateT<V> out{std::move(u1), std::move(v1), eta1, T1, s.time + dt};
  detail::check_finite(ops::primal(out.u), "u", out.time);
  detail::check_finite(ops::primal(out.v), "v", out.time);
  detail::check_finite(ops::primal(out.eta), "eta", out.time);
  detail::check_finite(ops::primal(out.T), "T", out.time);
  return out;
}

/// n steps; n == 0 returns the input unchanged. Tape nodes are labelled with
/// step indices starting after `step_offset`.
template <class V>
StateT<V> step_n(const StateT<V>& s, int n, const ParamsT<V>& p, const PhysParams& fixed,
                 const Forcing& forcing, const GridSpec& g, const StepConfig& c,
                 int step_offset = 0) {
  if (n < 0) throw InvalidArgument("step_n: negative step count");
  StateT<V> cur = s;
  for (int k = 0; k < n; ++k) {
    detail::mark_step(cur, p, step_offset + k + 1);
    cur = step(cur, p, fixed, forcing, g, c);
  }
  return cur;
}

/// n-step rollout as a differentiable function of the leaves of model_inputs,
/// returning {u, v, eta, T}. CFL is checked here, once.
ad::PureFunction rollout_function(const PhysParams& fixed, const GridSpec& g, const StepConfig& c,
                                  int n);

ModelState step(const ModelState& s, const PhysParams& p, const GridSpec& g, const StepConfig& c);
ModelState step_n(const ModelState& s, int n, const PhysParams& p, const GridSpec& g,
                  const StepConfig& c);

/// psi(x, y) = sum over rows j' <= j of H u dy, zero below the southern wall (m^3/s).
template <class V>
V barotropic_streamfunction(const V& u, const GridSpec& g) {
  if (ops::primal(u).stagger() != Stagger::u_face) {
    throw StaggerMismatch("barotropic_streamfunction expects u on u-faces");
  }
  return ops::cumsum_y(u, g.H * g.dy);
}

Field barotropic_streamfunction(const ModelState& s, const GridSpec& g);

/// Zonal transport through the meridional section at zonal index i (Sv).
double transport(const ModelState& s, const GridSpec& g, int i);

/// Mean over cells of (psi(u) - ref_psi)^2.
template <class V>
V bsf_mse_loss(const V& u, const Field& ref_psi, const GridSpec& g) {
  const V psi = barotropic_streamfunction(u, g);
  if (ops::primal(psi).nx() != ref_psi.nx() || ops::primal(psi).ny() != ref_psi.ny()) {
    throw ShapeMismatch("bsf_mse_loss: reference streamfunction has the wrong shape");
  }
  Field ref = ref_psi;
  if (ref.stagger() != Stagger::center) {
    throw StaggerMismatch("bsf_mse_loss: reference streamfunction must be at cell centers");
  }
  return ops::mean(ops::square(ops::sub(psi, ops::constant<V>(std::move(ref)))));
}

double bsf_mse_loss(const ModelState& s, const Field& ref_psi, const GridSpec& g);

/// sum over points of H (u^2 + v^2) / 2 + g eta^2 / 2.
double total_energy(const ModelState& s, const GridSpec& g, const PhysParams& p);

/// Divergence-free velocity from a smoothed random streamfunction, scaled to
/// the requested RMS speed. Deterministic in `seed`.
void add_random_eddies(ModelState& s, const GridSpec& g, double rms_speed, int smoothing_passes,
                       std::uint64_t seed);

/// Meridional profile T_south + (T_north - T_south) * y / Ly at centers.
Field linear_temperature(const GridSpec& g, double T_south, double T_north);

}  // namespace diffsw
