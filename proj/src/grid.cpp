#include "diffsw/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diffsw/errors.hpp"

namespace diffsw {
namespace {

bool x_centered(Stagger s) { return s == Stagger::center || s == Stagger::v_face; }
bool y_centered(Stagger s) { return s == Stagger::center || s == Stagger::u_face; }

int wrap(int k, int n) { return ((k % n) + n) % n; }

void require_grid_field(const Field& f, const GridSpec& g, const char* where) {
  if (f.nx() != g.nx || f.ny() != g.ny) {
    throw ShapeMismatch(std::string(where) + ": field is " + std::to_string(f.nx()) + "x" +
                        std::to_string(f.ny()) + " but grid is " + std::to_string(g.nx) + "x" +
                        std::to_string(g.ny));
  }
  if (f.is_scalar()) {
    throw StaggerMismatch(std::string(where) + ": scalar fields have no grid position");
  }
}

// Value of a y-face field at row k, honouring the wall convention.
inline double yface(const Field& f, const GridSpec& g, int i, int k) {
  if (g.has_walls()) {
    if (k < 0 || k >= g.ny - 1) return 0.0;
    return f(i, k);
  }
  return f(i, wrap(k, g.ny));
}

// Two-point combination a*left + b*right along x.
Field combine_x(const Field& f, const GridSpec& g, Stagger to, double a, double b) {
  Field out(g.nx, g.ny, to);
  const int nx = g.nx;
  const bool forward = x_centered(f.stagger());
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int lo = forward ? i : wrap(i - 1, nx);
      const int hi = forward ? wrap(i + 1, nx) : i;
      out(i, j) = a * f(lo, j) + b * f(hi, j);
    }
  }
  // v-face and corner rows on the northern wall stay zero.
  if (g.has_walls() && !y_centered(to)) {
    for (int i = 0; i < nx; ++i) out(i, g.ny - 1) = 0.0;
  }
  return out;
}

// Two-point combination a*south + b*north along y.
Field combine_y(const Field& f, const GridSpec& g, Stagger to, double a, double b) {
  Field out(g.nx, g.ny, to);
  const int nx = g.nx;
  const int ny = g.ny;
  if (y_centered(f.stagger())) {
    const int last = g.has_walls() ? ny - 1 : ny;
    for (int j = 0; j < last; ++j) {
      const int jn = wrap(j + 1, ny);
      for (int i = 0; i < nx; ++i) out(i, j) = a * f(i, j) + b * f(i, jn);
    }
  } else {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) out(i, j) = a * yface(f, g, i, j - 1) + b * yface(f, g, i, j);
    }
  }
  return out;
}

}  // namespace

bool GridSpec::all_ocean() const noexcept {
  return std::all_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; });
}

double GridSpec::x_at(Stagger s, int i) const noexcept {
  return x_centered(s) ? (i + 0.5) * dx : (i + 1.0) * dx;
}

double GridSpec::y_at(Stagger s, int j) const noexcept {
  return y_centered(s) ? (j + 0.5) * dy : (j + 1.0) * dy;
}

Field GridSpec::coriolis(Stagger s) const {
  Field out(nx, ny, s);
  for (int j = 0; j < ny; ++j) {
    const double f = f0 + beta * y_at(s, j);
    for (int i = 0; i < nx; ++i) out(i, j) = f;
  }
  return out;
}

Field GridSpec::face_mask(Stagger s) const {
  Field out(nx, ny, s, 1.0);
  auto wet = [&](int i, int j) { return mask[static_cast<std::size_t>(j) * nx + i] != 0; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      bool open = true;
      switch (s) {
        case Stagger::center: open = wet(i, j); break;
        case Stagger::u_face: open = wet(i, j) && wet(wrap(i + 1, nx), j); break;
        case Stagger::v_face:
          if (has_walls() && j == ny - 1) {
            open = false;
          } else {
            open = wet(i, j) && wet(i, wrap(j + 1, ny));
          }
          break;
        default:
          throw StaggerMismatch("face_mask: unsupported staggering " + std::string(to_string(s)));
      }
      out(i, j) = open ? 1.0 : 0.0;
    }
  }
  return out;
}

void GridSpec::set_land(int i, int j) {
  if (i < 0 || i >= nx || j < 0 || j >= ny) throw InvalidArgument("set_land: index out of range");
  mask[static_cast<std::size_t>(j) * nx + i] = 0;
}

void GridSpec::validate_mask() const {
  if (mask.size() != cells()) throw InvalidArgument("mask size does not match grid");
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
    throw InvalidArgument("mask has no ocean cells");
  }
}

GridSpec make_channel_grid(int nx, int ny, double Lx, double Ly, double H, double f0, double beta,
                           BoundaryKind boundary) {
  if (nx < 4 || ny < 4) {
    throw InvalidArgument("grid must be at least 4x4 cells, got " + std::to_string(nx) + "x" +
                          std::to_string(ny));
  }
  if (!(Lx > 0.0) || !(Ly > 0.0) || !(H > 0.0) || !std::isfinite(Lx) || !std::isfinite(Ly) ||
      !std::isfinite(H)) {
    throw InvalidArgument("domain extents and depth must be positive and finite");
  }
  if (!std::isfinite(f0) || !std::isfinite(beta)) {
    throw InvalidArgument("Coriolis parameters must be finite");
  }
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.Lx = Lx;
  g.Ly = Ly;
  g.dx = Lx / nx;
  g.dy = Ly / ny;
  g.f0 = f0;
  g.beta = beta;
  g.H = H;
  g.boundary = boundary;
  g.mask.assign(g.cells(), 1);
  return g;
}

Stagger ddx_target(Stagger from) {
  switch (from) {
    case Stagger::center: return Stagger::u_face;
    case Stagger::u_face: return Stagger::center;
    case Stagger::v_face: return Stagger::corner;
    case Stagger::corner: return Stagger::v_face;
    default: break;
  }
  throw StaggerMismatch("ddx: no zonal neighbour for staggering " + std::string(to_string(from)));
}

Stagger ddy_target(Stagger from) {
  switch (from) {
    case Stagger::center: return Stagger::v_face;
    case Stagger::v_face: return Stagger::center;
    case Stagger::u_face: return Stagger::corner;
    case Stagger::corner: return Stagger::u_face;
    default: break;
  }
  throw StaggerMismatch("ddy: no meridional neighbour for staggering " +
                        std::string(to_string(from)));
}

Field laplacian(const Field& f, const GridSpec& g) {
  require_grid_field(f, g, "laplacian");
  const int nx = g.nx;
  const int ny = g.ny;
  const double idx2 = 1.0 / (g.dx * g.dx);
  const double idy2 = 1.0 / (g.dy * g.dy);
  const Stagger s = f.stagger();
  Field out(nx, ny, s);

  const bool face_rows = !y_centered(s);
  // Ghost-row sign for y-centered fields: +1 mirrors (zero normal derivative),
  // -1 antisymmetric (zero value on the wall, no-slip u).
  const double ghost =
      (s == Stagger::u_face && g.boundary == BoundaryKind::no_slip) ? -1.0 : 1.0;

  for (int j = 0; j < ny; ++j) {
    if (face_rows && g.has_walls() && j == ny - 1) continue;  // wall row stays zero
    for (int i = 0; i < nx; ++i) {
      const double c = f(i, j);
      const double xs = f(wrap(i + 1, nx), j) + f(wrap(i - 1, nx), j) - 2.0 * c;
      double south = 0.0;
      double north = 0.0;
      if (!g.has_walls()) {
        south = f(i, wrap(j - 1, ny));
        north = f(i, wrap(j + 1, ny));
      } else if (face_rows) {
        south = yface(f, g, i, j - 1);
        north = yface(f, g, i, j + 1);
      } else {
        south = j > 0 ? f(i, j - 1) : ghost * c;
        north = j < ny - 1 ? f(i, j + 1) : ghost * c;
      }
      out(i, j) = xs * idx2 + (south + north - 2.0 * c) * idy2;
    }
  }
  return out;
}

Field ddx(const Field& f, const GridSpec& g) {
  require_grid_field(f, g, "ddx");
  const double inv = 1.0 / g.dx;
  return combine_x(f, g, ddx_target(f.stagger()), -inv, inv);
}

Field ddy(const Field& f, const GridSpec& g) {
  require_grid_field(f, g, "ddy");
  const double inv = 1.0 / g.dy;
  return combine_y(f, g, ddy_target(f.stagger()), -inv, inv);
}

Field divergence(const Field& u, const Field& v, const GridSpec& g) {
  if (u.stagger() != Stagger::u_face || v.stagger() != Stagger::v_face) {
    throw StaggerMismatch("divergence expects (u-face, v-face), got (" +
                          std::string(to_string(u.stagger())) + ", " +
                          std::string(to_string(v.stagger())) + ")");
  }
  Field out = ddx(u, g);
  out += ddy(v, g);
  return out;
}

Field interp(const Field& f, Stagger to, const GridSpec& g) {
  require_grid_field(f, g, "interp");
  const Stagger from = f.stagger();
  if (to == from) return f;
  if (from != Stagger::scalar && to != Stagger::scalar) {
    if (to == ddx_target(from)) return combine_x(f, g, to, 0.5, 0.5);
    if (to == ddy_target(from)) return combine_y(f, g, to, 0.5, 0.5);
  }
  throw StaggerMismatch("interp: " + std::string(to_string(from)) + " -> " +
                        std::string(to_string(to)) + " is not an adjacent staggering pair");
}

Field roll_x(const Field& f, int cells) {
  Field out = Field::zeros_like(f);
  const int nx = f.nx();
  for (int j = 0; j < f.ny(); ++j) {
    for (int i = 0; i < nx; ++i) out(wrap(i + cells, nx), j) = f(i, j);
  }
  return out;
}

}  // namespace diffsw
