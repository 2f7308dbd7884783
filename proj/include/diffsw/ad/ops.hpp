#pragma once

#include <concepts>
#include <type_traits>

#include "diffsw/ad/dual.hpp"
#include "diffsw/ad/prims.hpp"
#include "diffsw/ad/tape.hpp"
#include "diffsw/grid.hpp"

// Mode-generic field operations. The same code evaluates plainly (V = Field),
// propagates tangents (V = ad::Dual) or records a tape (V = ad::Var).
namespace diffsw::ops {

template <class V>
concept Value =
    std::same_as<V, Field> || std::same_as<V, ad::Dual> || std::same_as<V, ad::Var>;

inline const Field& primal(const Field& f) noexcept { return f; }
inline const Field& primal(const ad::Dual& d) noexcept { return d.primal(); }
inline const Field& primal(const ad::Var& v) noexcept { return v.primal(); }

/// Wraps a non-differentiated field in the value type of the current mode.
template <Value V>
V constant(Field f) {
  if constexpr (std::same_as<V, Field>) {
    return f;
  } else {
    return V(std::move(f));
  }
}

template <Value V>
V scalar(double x) {
  return constant<V>(Field::scalar(x));
}

template <Value V>
V add(const V& a, const V& b) {
  return ad::apply(ad::prims::add(), {}, {&a, &b});
}

template <Value V>
V sub(const V& a, const V& b) {
  return ad::apply(ad::prims::sub(), {}, {&a, &b});
}

template <Value V>
V mul(const V& a, const V& b) {
  return ad::apply(ad::prims::mul(), {}, {&a, &b});
}

/// s * f with s a 1x1 value.
template <Value V>
V scale(const V& s, const V& f) {
  return ad::apply(ad::prims::scale(), {}, {&s, &f});
}

/// c * f for a fixed constant c.
template <Value V>
V cmul(double c, const V& f) {
  ad::Attrs a;
  a.c = c;
  return ad::apply(ad::prims::cmul(), a, {&f});
}

template <Value V>
V square(const V& f) {
  return ad::apply(ad::prims::square(), {}, {&f});
}

/// Square root with the regularized gradient 1 / (2 sqrt(max(x, eps))) when
/// the active registry carries the sqrt_reg override (the default one does).
/// The primal result is the exact square root.
template <Value V>
V sqrt_reg(const V& f, double eps = ad::kDefaultSqrtEps) {
  ad::Attrs a;
  a.c = eps;
  return ad::apply(ad::prims::sqrt(), a, {&f});
}

template <Value V>
V laplacian(const V& f, const GridSpec& g) {
  ad::Attrs a;
  a.grid = &g;
  return ad::apply(ad::prims::laplacian(), a, {&f});
}

template <Value V>
V ddx(const V& f, const GridSpec& g) {
  ad::Attrs a;
  a.grid = &g;
  return ad::apply(ad::prims::ddx(), a, {&f});
}

template <Value V>
V ddy(const V& f, const GridSpec& g) {
  ad::Attrs a;
  a.grid = &g;
  return ad::apply(ad::prims::ddy(), a, {&f});
}

template <Value V>
V divergence(const V& u, const V& v, const GridSpec& g) {
  return ops::add(ops::ddx(u, g), ops::ddy(v, g));
}

template <Value V>
V interp(const V& f, Stagger to, const GridSpec& g) {
  ad::Attrs a;
  a.grid = &g;
  a.to = to;
  return ad::apply(ad::prims::interp(), a, {&f});
}

template <Value V>
V upwind_x(const V& u, const V& tracer, const GridSpec& g) {
  ad::Attrs a;
  a.grid = &g;
  return ad::apply(ad::prims::upwind_x(), a, {&u, &tracer});
}

template <Value V>
V upwind_y(const V& v, const V& tracer, const GridSpec& g) {
  ad::Attrs a;
  a.grid = &g;
  return ad::apply(ad::prims::upwind_y(), a, {&v, &tracer});
}

/// c * running sum over rows j' <= j.
template <Value V>
V cumsum_y(const V& f, double c) {
  ad::Attrs a;
  a.c = c;
  return ad::apply(ad::prims::cumsum_y(), a, {&f});
}

template <Value V>
V sum(const V& f) {
  return ad::apply(ad::prims::sum(), {}, {&f});
}

template <Value V>
V mean(const V& f) {
  const double n = static_cast<double>(primal(f).size());
  return ops::cmul(1.0 / n, ops::sum(f));
}

}  // namespace diffsw::ops
