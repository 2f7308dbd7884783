#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace diffsw {

/// Position of a value on the Arakawa C-grid.
///
/// `corner` is the vorticity point (north-east corner of a cell) and is only
/// produced by mixed derivatives; `scalar` tags 1x1 values such as parameters
/// and losses flowing through the differentiation engine.
enum class Stagger : std::uint8_t { center, u_face, v_face, corner, scalar };

std::string_view to_string(Stagger s);

/// Dense nx-by-ny array of doubles, stored row-major with the zonal index
/// fastest: value (i, j) lives at j * nx + i.
class Field {
 public:
  Field() = default;
  Field(int nx, int ny, Stagger stagger, double fill = 0.0);

  static Field scalar(double value);
  static Field zeros_like(const Field& other);

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  Stagger stagger() const noexcept { return stagger_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  bool is_scalar() const noexcept { return stagger_ == Stagger::scalar; }

  double& operator()(int i, int j) noexcept { return values_[index(i, j)]; }
  double operator()(int i, int j) const noexcept { return values_[index(i, j)]; }
  double& operator[](std::size_t k) noexcept { return values_[k]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Value of a 1x1 field.
  double item() const;

  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) +
           static_cast<std::size_t>(i);
  }

  bool same_layout(const Field& other) const noexcept {
    return nx_ == other.nx_ && ny_ == other.ny_ && stagger_ == other.stagger_;
  }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double c) noexcept;

  /// this += c * other
  Field& axpy(double c, const Field& other);

 private:
  int nx_ = 0;
  int ny_ = 0;
  Stagger stagger_ = Stagger::center;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double c, Field a);

/// Throws ShapeMismatch / StaggerMismatch unless both fields share a layout.
void require_same_layout(const Field& a, const Field& b, std::string_view where);

/// Bit-level equality, so NaN payloads and signed zeros are distinguished.
bool bitwise_equal(const Field& a, const Field& b) noexcept;

double dot(const Field& a, const Field& b);
double sum(const Field& f) noexcept;
double max_abs(const Field& f) noexcept;
bool all_finite(const Field& f) noexcept;

}  // namespace diffsw
