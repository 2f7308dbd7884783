#pragma once

#include <cstdint>
#include <vector>

#include "diffsw/field.hpp"

namespace diffsw {

/// Treatment of the meridional (y) boundaries.
///
/// The zonal direction is always periodic. `free_slip` and `no_slip` put solid
/// walls at y = 0 and y = Ly and differ only in the ghost value used for the
/// tangential velocity u. `periodic` wraps y as well and exists for operator
/// tests on doubly periodic grids.
enum class BoundaryKind : std::uint8_t { free_slip, no_slip, periodic };

struct GridSpec {
  int nx = 0;
  int ny = 0;
  double Lx = 0.0;
  double Ly = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double f0 = 0.0;    // Coriolis parameter at the southern wall (1/s)
  double beta = 0.0;  // meridional Coriolis gradient (1/(m s))
  double H = 0.0;     // resting depth (m)
  BoundaryKind boundary = BoundaryKind::free_slip;
  std::vector<std::uint8_t> mask;  // 1 = ocean, 0 = land, per cell (j * nx + i)

  bool has_walls() const noexcept { return boundary != BoundaryKind::periodic; }
  bool all_ocean() const noexcept;
  std::size_t cells() const noexcept {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  }

  /// Physical coordinate of point (i, j) for the given staggering.
  double x_at(Stagger s, int i) const noexcept;
  double y_at(Stagger s, int j) const noexcept;

  Field zeros(Stagger s) const { return Field(nx, ny, s, 0.0); }

  /// f0 + beta * y sampled at the given staggering.
  Field coriolis(Stagger s) const;

  /// 1 where a face is open ocean (both adjacent cells wet, not a wall), else 0.
  Field face_mask(Stagger s) const;

  void set_land(int i, int j);
  /// Throws InvalidArgument if the mask has the wrong size or no ocean cell.
  void validate_mask() const;
};

/// Uniform beta-plane channel with an all-ocean mask.
GridSpec make_channel_grid(int nx, int ny, double Lx, double Ly, double H, double f0,
                           double beta, BoundaryKind boundary = BoundaryKind::free_slip);

// Discrete operators on the C-grid. With walls, the northernmost row of a
// v-face or corner field sits on the wall: operators ignore it on input and
// write zero there on output, so wall-normal flow is identically zero.

/// 5-point Laplacian with the same staggering as the input.
Field laplacian(const Field& f, const GridSpec& g);

/// Two-point zonal difference: center <-> u-face, v-face <-> corner.
Field ddx(const Field& f, const GridSpec& g);

/// Two-point meridional difference: center <-> v-face, u-face <-> corner.
Field ddy(const Field& f, const GridSpec& g);

/// ddx(u) + ddy(v) at cell centers.
Field divergence(const Field& u, const Field& v, const GridSpec& g);

/// Two-point average onto an adjacent staggering.
Field interp(const Field& f, Stagger to, const GridSpec& g);

/// Staggering produced by ddx / ddy for a given input, or throws StaggerMismatch.
Stagger ddx_target(Stagger from);
Stagger ddy_target(Stagger from);

/// Circular zonal shift by `cells` (positive moves values eastward).
Field roll_x(const Field& f, int cells);

}  // namespace diffsw
