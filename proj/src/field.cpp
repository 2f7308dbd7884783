#include "diffsw/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "diffsw/errors.hpp"

namespace diffsw {

std::string_view to_string(Stagger s) {
  switch (s) {
    case Stagger::center: return "center";
    case Stagger::u_face: return "u-face";
    case Stagger::v_face: return "v-face";
    case Stagger::corner: return "corner";
    case Stagger::scalar: return "scalar";
  }
  return "unknown";
}

Field::Field(int nx, int ny, Stagger stagger, double fill)
    : nx_(nx), ny_(ny), stagger_(stagger) {
  if (nx <= 0 || ny <= 0) {
    throw ShapeMismatch("field extents must be positive, got " + std::to_string(nx) + "x" +
                        std::to_string(ny));
  }
  values_.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), fill);
}

Field Field::scalar(double value) { return Field(1, 1, Stagger::scalar, value); }

Field Field::zeros_like(const Field& other) {
  return Field(other.nx_, other.ny_, other.stagger_, 0.0);
}

double Field::item() const {
  if (values_.size() != 1) {
    throw ShapeMismatch("item() requires a 1x1 field");
  }
  return values_[0];
}

void require_same_layout(const Field& a, const Field& b, std::string_view where) {
  if (a.nx() != b.nx() || a.ny() != b.ny()) {
    throw ShapeMismatch(std::string(where) + ": shape " + std::to_string(a.nx()) + "x" +
                        std::to_string(a.ny()) + " vs " + std::to_string(b.nx()) + "x" +
                        std::to_string(b.ny()));
  }
  if (a.stagger() != b.stagger()) {
    throw StaggerMismatch(std::string(where) + ": staggering " + std::string(to_string(a.stagger())) +
                          " vs " + std::string(to_string(b.stagger())));
  }
}

Field& Field::operator+=(const Field& other) {
  require_same_layout(*this, other, "operator+=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_layout(*this, other, "operator-=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

Field& Field::operator*=(double c) noexcept {
  for (double& x : values_) x *= c;
  return *this;
}

Field& Field::axpy(double c, const Field& other) {
  require_same_layout(*this, other, "axpy");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += c * other.values_[k];
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double c, Field a) { return a *= c; }

bool bitwise_equal(const Field& a, const Field& b) noexcept {
  if (!a.same_layout(b)) return false;
  if (a.size() == 0) return true;
  return std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

double dot(const Field& a, const Field& b) {
  if (a.size() != b.size()) throw ShapeMismatch("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

double sum(const Field& f) noexcept {
  double acc = 0.0;
  for (double x : f.values()) acc += x;
  return acc;
}

double max_abs(const Field& f) noexcept {
  double m = 0.0;
  for (double x : f.values()) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(const Field& f) noexcept {
  return std::all_of(f.values().begin(), f.values().end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace diffsw
