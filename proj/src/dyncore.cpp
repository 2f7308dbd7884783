#include "diffsw/dyncore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <sstream>

namespace diffsw {

void PhysParams::validate(const GridSpec& grid) const {
  auto non_negative = [](double x, const char* name) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InvalidArgument(std::string(name) + " must be finite and non-negative, got " +
                            std::to_string(x));
    }
  };
  non_negative(A_h, "A_h");
  non_negative(r_bot, "r_bot");
  non_negative(C_d, "C_d");
  non_negative(kappa_T, "kappa_T");
  non_negative(lambda_relax, "lambda_relax");
  non_negative(g, "g");
  non_negative(sqrt_eps, "sqrt_eps");
  if (!(rho0 > 0.0)) throw InvalidArgument("rho0 must be positive");
  if (!std::isfinite(tau0)) throw InvalidArgument("tau0 must be finite");
  if (!(wind_band > 0.0 && wind_band <= 1.0)) {
    throw InvalidArgument("wind_band must lie in (0, 1]");
  }
  if (!T_star.empty() && (T_star.nx() != grid.nx || T_star.ny() != grid.ny)) {
    throw ShapeMismatch("T_star does not match the grid");
  }
}

double courant_number(const GridSpec& g, const PhysParams& p, double dt) {
  return dt * std::sqrt(p.g * g.H) * std::max(1.0 / g.dx, 1.0 / g.dy);
}

double cfl_limit_dt(const GridSpec& g, const PhysParams& p) {
  const double c = std::sqrt(p.g * g.H) * std::max(1.0 / g.dx, 1.0 / g.dy);
  if (c == 0.0) throw InvalidArgument("CFL limit undefined without gravity waves (g = 0)");
  return kMaxCourant / c;
}

void validate_cfl(const GridSpec& g, const PhysParams& p, const StepConfig& c) {
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw InvalidArgument("dt must be positive");
  const double cn = courant_number(g, p, c.dt);
  if (!(cn < kMaxCourant)) {
    std::ostringstream msg;
    msg << "CFL violation: dt=" << c.dt << " s gives Courant number " << cn << " >= "
        << kMaxCourant;
    throw CflViolation(msg.str());
  }
}

ModelState zero_state(const GridSpec& g) {
  return ModelState{g.zeros(Stagger::u_face), g.zeros(Stagger::v_face), g.zeros(Stagger::center),
                    g.zeros(Stagger::center), 0.0};
}

bool bitwise_equal(const ModelState& a, const ModelState& b) noexcept {
  return diffsw::bitwise_equal(a.u, b.u) && diffsw::bitwise_equal(a.v, b.v) &&
         diffsw::bitwise_equal(a.eta, b.eta) && diffsw::bitwise_equal(a.T, b.T) &&
         std::memcmp(&a.time, &b.time, sizeof(double)) == 0;
}

ad::NamedInputs model_inputs(const ModelState& s, const PhysParams& p) {
  ad::NamedInputs in;
  in.add("u", s.u);
  in.add("v", s.v);
  in.add("eta", s.eta);
  in.add("T", s.T);
  in.add("A_h", Field::scalar(p.A_h));
  in.add("r_bot", Field::scalar(p.r_bot));
  in.add("C_d", Field::scalar(p.C_d));
  in.add("kappa_T", Field::scalar(p.kappa_T));
  in.add("lambda_relax", Field::scalar(p.lambda_relax));
  in.add("tau0", Field::scalar(p.tau0));
  return in;
}

double wind_stress_at(double y, double Ly, double tau0, double band) {
  const double width = band * Ly;
  if (y < 0.0 || y > width) return 0.0;
  const double s = std::sin(std::numbers::pi * y / width);
  return tau0 * s * s;
}

Field wind_stress_profile(const GridSpec& g, double tau0, double band) {
  if (!(band > 0.0 && band <= 1.0)) throw InvalidArgument("wind band must lie in (0, 1]");
  Field out = g.zeros(Stagger::u_face);
  for (int j = 0; j < g.ny; ++j) {
    const double t = wind_stress_at(g.y_at(Stagger::u_face, j), g.Ly, tau0, band);
    for (int i = 0; i < g.nx; ++i) out(i, j) = t;
  }
  return out;
}

Forcing make_forcing(const GridSpec& g, const PhysParams& p) {
  Forcing f;
  f.coriolis_u = g.coriolis(Stagger::u_face);
  f.coriolis_v = g.coriolis(Stagger::v_face);
  f.wind_unit = wind_stress_profile(g, 1.0 / (p.rho0 * g.H), p.wind_band);
  f.T_star = p.T_star.empty() ? g.zeros(Stagger::center) : p.T_star;
  f.masked = !g.all_ocean();
  if (f.masked) {
    f.mask_u = g.face_mask(Stagger::u_face);
    f.mask_v = g.face_mask(Stagger::v_face);
  }
  return f;
}

namespace detail {

void check_step_input(const Field& v, const GridSpec& g) {
  if (v.stagger() != Stagger::v_face) throw StaggerMismatch("step: v must live on v-faces");
  if (!g.has_walls()) return;
  for (int i = 0; i < g.nx; ++i) {
    if (v(i, g.ny - 1) != 0.0) {
      throw InvalidArgument("step: v must vanish on the northern wall row");
    }
  }
}

void check_finite(const Field& f, const char* name, double time) {
  if (!all_finite(f)) {
    std::ostringstream msg;
    msg << "non-finite values in field '" << name << "' at t=" << time << " s";
    throw NonFiniteState(name, msg.str());
  }
}

}  // namespace detail

ModelState step(const ModelState& s, const PhysParams& p, const GridSpec& g, const StepConfig& c) {
  validate_cfl(g, p, c);
  const Forcing forcing = make_forcing(g, p);
  return step(s, constant_params<Field>(p), p, forcing, g, c);
}

ModelState step_n(const ModelState& s, int n, const PhysParams& p, const GridSpec& g,
                  const StepConfig& c) {
  validate_cfl(g, p, c);
  const Forcing forcing = make_forcing(g, p);
  return step_n(s, n, constant_params<Field>(p), p, forcing, g, c);
}

ad::PureFunction rollout_function(const PhysParams& fixed, const GridSpec& g, const StepConfig& c,
                                  int n) {
  validate_cfl(g, fixed, c);
  if (n < 0) throw InvalidArgument("rollout_function: negative step count");
  return ad::PureFunction([fixed, g, c, n, forcing = make_forcing(g, fixed)](const auto& leaves) {
    using V = std::decay_t<decltype(leaves[0])>;
    StateT<V> s = step_n(state_from(leaves, 0.0), n, params_from(leaves), fixed, forcing, g, c);
    return std::vector<V>{s.u, s.v, s.eta, s.T};
  });
}

Field barotropic_streamfunction(const ModelState& s, const GridSpec& g) {
  return barotropic_streamfunction(s.u, g);
}

double transport(const ModelState& s, const GridSpec& g, int i) {
  if (i < 0 || i >= g.nx) {
    throw InvalidArgument("transport: zonal index " + std::to_string(i) + " outside [0, " +
                          std::to_string(g.nx) + ")");
  }
  double acc = 0.0;
  for (int j = 0; j < g.ny; ++j) acc += s.u(i, j);
  return acc * g.H * g.dy / 1e6;
}

double bsf_mse_loss(const ModelState& s, const Field& ref_psi, const GridSpec& g) {
  return bsf_mse_loss(s.u, ref_psi, g).item();
}

double total_energy(const ModelState& s, const GridSpec& g, const PhysParams& p) {
  double kinetic = 0.0;
  for (double x : s.u.values()) kinetic += x * x;
  for (double x : s.v.values()) kinetic += x * x;
  double potential = 0.0;
  for (double x : s.eta.values()) potential += x * x;
  return 0.5 * g.H * kinetic + 0.5 * p.g * potential;
}

void add_random_eddies(ModelState& s, const GridSpec& g, double rms_speed, int smoothing_passes,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Field psi = g.zeros(Stagger::corner);
  for (double& x : psi.values()) x = normal(rng);
  for (int pass = 0; pass < smoothing_passes; ++pass) {
    // 1-2-1 filter in each direction via corner -> face -> corner averages.
    psi = interp(interp(psi, Stagger::u_face, g), Stagger::corner, g);
    psi = interp(interp(psi, Stagger::v_face, g), Stagger::corner, g);
  }
  Field u = -1.0 * ddy(psi, g);
  Field v = ddx(psi, g);
  const double n = static_cast<double>(u.size() + v.size());
  const double rms = std::sqrt((dot(u, u) + dot(v, v)) / n);
  if (rms > 0.0) {
    u *= rms_speed / rms;
    v *= rms_speed / rms;
  }
  s.u += u;
  s.v += v;
}

Field linear_temperature(const GridSpec& g, double T_south, double T_north) {
  Field out = g.zeros(Stagger::center);
  for (int j = 0; j < g.ny; ++j) {
    const double t = T_south + (T_north - T_south) * g.y_at(Stagger::center, j) / g.Ly;
    for (int i = 0; i < g.nx; ++i) out(i, j) = t;
  }
  return out;
}

}  // namespace diffsw
