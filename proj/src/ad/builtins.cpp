#include <cmath>
#include <string>

#include "diffsw/ad/prims.hpp"
#include "diffsw/errors.hpp"
#include "diffsw/grid.hpp"

namespace diffsw::ad {
namespace {

const GridSpec& grid_of(const Attrs& a, const char* who) {
  if (a.grid == nullptr) throw InvalidArgument(std::string(who) + ": primitive requires a grid");
  return *a.grid;
}

void require_stagger(const Field& f, Stagger s, const char* who) {
  if (f.stagger() != s) {
    throw StaggerMismatch(std::string(who) + ": expected " + std::string(to_string(s)) +
                          " input, got " + std::string(to_string(f.stagger())));
  }
}

void accumulate(Field* g, const Field& contribution) {
  if (g != nullptr) *g += contribution;
}

// ---------------------------------------------------------------------------
// Forward implementations

Field fwd_add(std::span<const Field* const> in, const Attrs&) { return *in[0] + *in[1]; }
Field fwd_sub(std::span<const Field* const> in, const Attrs&) { return *in[0] - *in[1]; }

Field fwd_mul(std::span<const Field* const> in, const Attrs&) {
  require_same_layout(*in[0], *in[1], "mul");
  Field out = *in[0];
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= (*in[1])[k];
  return out;
}

Field fwd_scale(std::span<const Field* const> in, const Attrs&) {
  if (!in[0]->is_scalar()) throw StaggerMismatch("scale: first operand must be a scalar");
  return in[0]->item() * Field(*in[1]);
}

Field fwd_cmul(std::span<const Field* const> in, const Attrs& a) { return a.c * Field(*in[0]); }

Field fwd_square(std::span<const Field* const> in, const Attrs&) {
  Field out = *in[0];
  for (double& x : out.values()) x *= x;
  return out;
}

Field fwd_sqrt(std::span<const Field* const> in, const Attrs&) {
  Field out = *in[0];
  for (double& x : out.values()) {
    if (x < 0.0 || std::isnan(x)) {
      throw DomainError("sqrt: negative or NaN input " + std::to_string(x));
    }
    x = std::sqrt(x);
  }
  return out;
}

Field fwd_laplacian(std::span<const Field* const> in, const Attrs& a) {
  return diffsw::laplacian(*in[0], grid_of(a, "laplacian"));
}

Field fwd_ddx(std::span<const Field* const> in, const Attrs& a) {
  return diffsw::ddx(*in[0], grid_of(a, "ddx"));
}

Field fwd_ddy(std::span<const Field* const> in, const Attrs& a) {
  return diffsw::ddy(*in[0], grid_of(a, "ddy"));
}

Field fwd_interp(std::span<const Field* const> in, const Attrs& a) {
  return diffsw::interp(*in[0], a.to, grid_of(a, "interp"));
}

// Upwind donor-cell index helpers. A non-negative velocity takes the tracer
// from the western/southern cell; u == 0 counts as eastward.
Field fwd_upwind_x(std::span<const Field* const> in, const Attrs&) {
  const Field& u = *in[0];
  const Field& t = *in[1];
  require_stagger(u, Stagger::u_face, "upwind_x");
  require_stagger(t, Stagger::center, "upwind_x");
  if (u.nx() != t.nx() || u.ny() != t.ny()) throw ShapeMismatch("upwind_x: shape mismatch");
  Field out(u.nx(), u.ny(), Stagger::u_face);
  const int nx = u.nx();
  for (int j = 0; j < u.ny(); ++j) {
    for (int i = 0; i < nx; ++i) {
      const double vel = u(i, j);
      out(i, j) = vel * (vel >= 0.0 ? t(i, j) : t((i + 1) % nx, j));
    }
  }
  return out;
}

int last_open_row(const GridSpec& g) { return g.has_walls() ? g.ny - 1 : g.ny; }

Field fwd_upwind_y(std::span<const Field* const> in, const Attrs& a) {
  const GridSpec& g = grid_of(a, "upwind_y");
  const Field& v = *in[0];
  const Field& t = *in[1];
  require_stagger(v, Stagger::v_face, "upwind_y");
  require_stagger(t, Stagger::center, "upwind_y");
  if (v.nx() != g.nx || v.ny() != g.ny || t.nx() != g.nx || t.ny() != g.ny) {
    throw ShapeMismatch("upwind_y: shape mismatch");
  }
  Field out(g.nx, g.ny, Stagger::v_face);
  for (int j = 0; j < last_open_row(g); ++j) {
    const int jn = (j + 1) % g.ny;
    for (int i = 0; i < g.nx; ++i) {
      const double vel = v(i, j);
      out(i, j) = vel * (vel >= 0.0 ? t(i, j) : t(i, jn));
    }
  }
  return out;
}

Field fwd_cumsum_y(std::span<const Field* const> in, const Attrs& a) {
  const Field& u = *in[0];
  require_stagger(u, Stagger::u_face, "cumsum_y");
  Field out(u.nx(), u.ny(), Stagger::center);
  for (int i = 0; i < u.nx(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < u.ny(); ++j) {
      acc += u(i, j);
      out(i, j) = a.c * acc;
    }
  }
  return out;
}

Field fwd_sum(std::span<const Field* const> in, const Attrs&) {
  return Field::scalar(diffsw::sum(*in[0]));
}

// ---------------------------------------------------------------------------
// Rules

Field zero_or(const Field* t, const Field& like) { return t ? *t : Field::zeros_like(like); }

void install_linear_unary(Registry& r, const Primitive& p, Field (*apply)(const Field&, const Call&),
                          Field (*transpose)(const Field&, const Call&)) {
  r.set_builtin(std::string(p.name),
                GradientRule{
                    [apply](const Call& c, std::span<const Field* const> t) {
                      if (!t[0]) return Field::zeros_like(c.output);
                      return apply(*t[0], c);
                    },
                    [transpose](const Call& c, const Field& ct, std::span<Field* const> g) {
                      if (g[0]) *g[0] += transpose(ct, c);
                    }});
}

Field interp_back(const Field& ct, const Call& c) {
  return diffsw::interp(ct, c.inputs[0]->stagger(), *c.attrs.grid);
}

Field cumsum_transpose(const Field& ct, const Call& c) {
  Field g(ct.nx(), ct.ny(), Stagger::u_face);
  for (int i = 0; i < ct.nx(); ++i) {
    double acc = 0.0;
    for (int j = ct.ny() - 1; j >= 0; --j) {
      acc += ct(i, j);
      g(i, j) = c.attrs.c * acc;
    }
  }
  return g;
}

Registry make_builtins() {
  Registry r;

  r.set_builtin("add", GradientRule{
                           [](const Call& c, std::span<const Field* const> t) {
                             Field out = zero_or(t[0], c.output);
                             if (t[1]) out += *t[1];
                             return out;
                           },
                           [](const Call&, const Field& ct, std::span<Field* const> g) {
                             accumulate(g[0], ct);
                             accumulate(g[1], ct);
                           }});

  r.set_builtin("sub", GradientRule{
                           [](const Call& c, std::span<const Field* const> t) {
                             Field out = zero_or(t[0], c.output);
                             if (t[1]) out -= *t[1];
                             return out;
                           },
                           [](const Call&, const Field& ct, std::span<Field* const> g) {
                             accumulate(g[0], ct);
                             if (g[1]) *g[1] -= ct;
                           }});

  r.set_builtin("mul", GradientRule{
                           [](const Call& c, std::span<const Field* const> t) {
                             const Field& a = *c.inputs[0];
                             const Field& b = *c.inputs[1];
                             Field out = Field::zeros_like(c.output);
                             for (std::size_t k = 0; k < out.size(); ++k) {
                               double d = 0.0;
                               if (t[0]) d += (*t[0])[k] * b[k];
                               if (t[1]) d += a[k] * (*t[1])[k];
                               out[k] = d;
                             }
                             return out;
                           },
                           [](const Call& c, const Field& ct, std::span<Field* const> g) {
                             const Field& a = *c.inputs[0];
                             const Field& b = *c.inputs[1];
                             for (std::size_t k = 0; k < ct.size(); ++k) {
                               if (g[0]) (*g[0])[k] += ct[k] * b[k];
                               if (g[1]) (*g[1])[k] += ct[k] * a[k];
                             }
                           }});

  r.set_builtin("scale", GradientRule{
                             [](const Call& c, std::span<const Field* const> t) {
                               const double s = c.inputs[0]->item();
                               Field out = Field::zeros_like(c.output);
                               if (t[1]) out.axpy(s, *t[1]);
                               if (t[0]) out.axpy(t[0]->item(), *c.inputs[1]);
                               return out;
                             },
                             [](const Call& c, const Field& ct, std::span<Field* const> g) {
                               if (g[0]) (*g[0])[0] += dot(ct, *c.inputs[1]);
                               if (g[1]) g[1]->axpy(c.inputs[0]->item(), ct);
                             }});

  r.set_builtin("cmul", GradientRule{
                            [](const Call& c, std::span<const Field* const> t) {
                              if (!t[0]) return Field::zeros_like(c.output);
                              return c.attrs.c * Field(*t[0]);
                            },
                            [](const Call& c, const Field& ct, std::span<Field* const> g) {
                              if (g[0]) g[0]->axpy(c.attrs.c, ct);
                            }});

  r.set_builtin("square", GradientRule{
                              [](const Call& c, std::span<const Field* const> t) {
                                if (!t[0]) return Field::zeros_like(c.output);
                                Field out = *t[0];
                                const Field& x = *c.inputs[0];
                                for (std::size_t k = 0; k < out.size(); ++k) out[k] *= 2.0 * x[k];
                                return out;
                              },
                              [](const Call& c, const Field& ct, std::span<Field* const> g) {
                                if (!g[0]) return;
                                const Field& x = *c.inputs[0];
                                for (std::size_t k = 0; k < ct.size(); ++k) {
                                  (*g[0])[k] += 2.0 * x[k] * ct[k];
                                }
                              }});

  // Exact derivative; singular at zero.
  r.set_builtin("sqrt", GradientRule{
                            [](const Call& c, std::span<const Field* const> t) {
                              if (!t[0]) return Field::zeros_like(c.output);
                              Field out = *t[0];
                              for (std::size_t k = 0; k < out.size(); ++k) {
                                out[k] *= 0.5 / c.output[k];
                              }
                              return out;
                            },
                            [](const Call& c, const Field& ct, std::span<Field* const> g) {
                              if (!g[0]) return;
                              for (std::size_t k = 0; k < ct.size(); ++k) {
                                (*g[0])[k] += ct[k] * (0.5 / c.output[k]);
                              }
                            }});

  install_linear_unary(
      r, prims::laplacian(),
      [](const Field& f, const Call& c) { return diffsw::laplacian(f, *c.attrs.grid); },
      [](const Field& ct, const Call& c) { return diffsw::laplacian(ct, *c.attrs.grid); });
  install_linear_unary(
      r, prims::ddx(), [](const Field& f, const Call& c) { return diffsw::ddx(f, *c.attrs.grid); },
      [](const Field& ct, const Call& c) { return -1.0 * diffsw::ddx(ct, *c.attrs.grid); });
  install_linear_unary(
      r, prims::ddy(), [](const Field& f, const Call& c) { return diffsw::ddy(f, *c.attrs.grid); },
      [](const Field& ct, const Call& c) { return -1.0 * diffsw::ddy(ct, *c.attrs.grid); });
  install_linear_unary(
      r, prims::interp(),
      [](const Field& f, const Call& c) { return diffsw::interp(f, c.attrs.to, *c.attrs.grid); },
      interp_back);
  install_linear_unary(
      r, prims::cumsum_y(),
      [](const Field& f, const Call& c) {
        const Field* p = &f;
        return fwd_cumsum_y(std::span<const Field* const>(&p, 1), c.attrs);
      },
      cumsum_transpose);
  install_linear_unary(
      r, prims::sum(),
      [](const Field& f, const Call&) { return Field::scalar(diffsw::sum(f)); },
      [](const Field& ct, const Call& c) {
        return Field(c.inputs[0]->nx(), c.inputs[0]->ny(), c.inputs[0]->stagger(), ct.item());
      });

  r.set_builtin("upwind_x",
                GradientRule{
                    [](const Call& c, std::span<const Field* const> t) {
                      const Field& u = *c.inputs[0];
                      const Field& tr = *c.inputs[1];
                      const int nx = u.nx();
                      Field out = Field::zeros_like(c.output);
                      for (int j = 0; j < u.ny(); ++j) {
                        for (int i = 0; i < nx; ++i) {
                          const int up = u(i, j) >= 0.0 ? i : (i + 1) % nx;
                          double d = 0.0;
                          if (t[0]) d += (*t[0])(i, j) * tr(up, j);
                          if (t[1]) d += u(i, j) * (*t[1])(up, j);
                          out(i, j) = d;
                        }
                      }
                      return out;
                    },
                    [](const Call& c, const Field& ct, std::span<Field* const> g) {
                      const Field& u = *c.inputs[0];
                      const Field& tr = *c.inputs[1];
                      const int nx = u.nx();
                      for (int j = 0; j < u.ny(); ++j) {
                        for (int i = 0; i < nx; ++i) {
                          const int up = u(i, j) >= 0.0 ? i : (i + 1) % nx;
                          if (g[0]) (*g[0])(i, j) += ct(i, j) * tr(up, j);
                          if (g[1]) (*g[1])(up, j) += ct(i, j) * u(i, j);
                        }
                      }
                    }});

  r.set_builtin("upwind_y",
                GradientRule{
                    [](const Call& c, std::span<const Field* const> t) {
                      const GridSpec& gr = *c.attrs.grid;
                      const Field& v = *c.inputs[0];
                      const Field& tr = *c.inputs[1];
                      Field out = Field::zeros_like(c.output);
                      for (int j = 0; j < last_open_row(gr); ++j) {
                        for (int i = 0; i < gr.nx; ++i) {
                          const int up = v(i, j) >= 0.0 ? j : (j + 1) % gr.ny;
                          double d = 0.0;
                          if (t[0]) d += (*t[0])(i, j) * tr(i, up);
                          if (t[1]) d += v(i, j) * (*t[1])(i, up);
                          out(i, j) = d;
                        }
                      }
                      return out;
                    },
                    [](const Call& c, const Field& ct, std::span<Field* const> g) {
                      const GridSpec& gr = *c.attrs.grid;
                      const Field& v = *c.inputs[0];
                      const Field& tr = *c.inputs[1];
                      for (int j = 0; j < last_open_row(gr); ++j) {
                        for (int i = 0; i < gr.nx; ++i) {
                          const int up = v(i, j) >= 0.0 ? j : (j + 1) % gr.ny;
                          if (g[0]) (*g[0])(i, j) += ct(i, j) * tr(i, up);
                          if (g[1]) (*g[1])(i, up) += ct(i, j) * v(i, j);
                        }
                      }
                    }});
  return r;
}

}  // namespace

namespace prims {

#define DIFFSW_PRIMITIVE(fn, label, impl, n)   \
  const Primitive& fn() {                      \
    static const Primitive p{label, impl, n};  \
    return p;                                  \
  }

DIFFSW_PRIMITIVE(add, "add", fwd_add, 2)
DIFFSW_PRIMITIVE(sub, "sub", fwd_sub, 2)
DIFFSW_PRIMITIVE(mul, "mul", fwd_mul, 2)
DIFFSW_PRIMITIVE(scale, "scale", fwd_scale, 2)
DIFFSW_PRIMITIVE(cmul, "cmul", fwd_cmul, 1)
DIFFSW_PRIMITIVE(square, "square", fwd_square, 1)
DIFFSW_PRIMITIVE(sqrt, "sqrt", fwd_sqrt, 1)
DIFFSW_PRIMITIVE(laplacian, "laplacian", fwd_laplacian, 1)
DIFFSW_PRIMITIVE(ddx, "ddx", fwd_ddx, 1)
DIFFSW_PRIMITIVE(ddy, "ddy", fwd_ddy, 1)
DIFFSW_PRIMITIVE(interp, "interp", fwd_interp, 1)
DIFFSW_PRIMITIVE(upwind_x, "upwind_x", fwd_upwind_x, 2)
DIFFSW_PRIMITIVE(upwind_y, "upwind_y", fwd_upwind_y, 2)
DIFFSW_PRIMITIVE(cumsum_y, "cumsum_y", fwd_cumsum_y, 1)
DIFFSW_PRIMITIVE(sum, "sum", fwd_sum, 1)

#undef DIFFSW_PRIMITIVE

}  // namespace prims

Registry Registry::with_builtins() { return make_builtins(); }

void Registry::set_builtin(std::string name, GradientRule rule) {
  builtin_[std::move(name)] = std::move(rule);
}

RegistryHandle Registry::register_custom_gradient(CustomGradientEntry entry) {
  if (custom_.contains(entry.primitive)) throw DuplicateRegistration(entry.primitive);
  if (!entry.backward || !entry.tangent) {
    throw InvalidArgument("custom gradient for '" + entry.primitive +
                          "' must supply both tangent and backward rules");
  }
  RegistryHandle handle{entry.primitive};
  custom_.emplace(entry.primitive, GradientRule{std::move(entry.tangent), std::move(entry.backward)});
  return handle;
}

const GradientRule& Registry::rule(std::string_view primitive) const {
  if (auto it = custom_.find(primitive); it != custom_.end()) return it->second;
  if (auto it = builtin_.find(primitive); it != builtin_.end()) return it->second;
  throw UnregisteredPrimitive(std::string(primitive));
}

bool Registry::has_rule(std::string_view primitive) const {
  return custom_.find(primitive) != custom_.end() || builtin_.find(primitive) != builtin_.end();
}

bool Registry::is_overridden(std::string_view primitive) const {
  return custom_.find(primitive) != custom_.end();
}

CustomGradientEntry sqrt_reg_entry() {
  auto factor = [](double x, double eps) {
    const double clamped = x >= eps ? x : eps;
    return 0.5 / std::sqrt(clamped);
  };
  CustomGradientEntry e;
  e.primitive = "sqrt";
  e.tangent = [factor](const Call& c, std::span<const Field* const> t) {
    if (!t[0]) return Field::zeros_like(c.output);
    Field out = *t[0];
    const Field& x = *c.inputs[0];
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= factor(x[k], c.attrs.c);
    return out;
  };
  e.backward = [factor](const Call& c, const Field& ct, std::span<Field* const> g) {
    if (!g[0]) return;
    const Field& x = *c.inputs[0];
    for (std::size_t k = 0; k < ct.size(); ++k) (*g[0])[k] += ct[k] * factor(x[k], c.attrs.c);
  };
  return e;
}

const Registry& default_registry() {
  static const Registry reg = [] {
    Registry r = Registry::with_builtins();
    r.register_custom_gradient(sqrt_reg_entry());
    return r;
  }();
  return reg;
}

}  // namespace diffsw::ad
