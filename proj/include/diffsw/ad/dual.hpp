#pragma once

#include <initializer_list>
#include <optional>

#include "diffsw/ad/primitive.hpp"
#include "diffsw/field.hpp"

namespace diffsw::ad {

/// Forward-mode value: a primal field paired with its tangent.
///
/// A Dual without a tangent is a constant; operations on constants only are
/// evaluated eagerly and never consult the registry.
class Dual {
 public:
  Dual() = default;
  explicit Dual(Field primal) : primal_(std::move(primal)) {}
  Dual(Field primal, Field tangent, const Registry& registry);

  const Field& primal() const noexcept { return primal_; }
  bool has_tangent() const noexcept { return tangent_.has_value(); }
  /// Null when the tangent is identically zero.
  const Field* tangent() const noexcept { return tangent_ ? &*tangent_ : nullptr; }
  Field tangent_or_zero() const { return tangent_ ? *tangent_ : Field::zeros_like(primal_); }
  const Registry* registry() const noexcept { return registry_; }

 private:
  friend Dual apply(const Primitive&, const Attrs&, std::initializer_list<const Dual*>);

  Field primal_;
  std::optional<Field> tangent_;
  const Registry* registry_ = nullptr;
};

Field apply(const Primitive& prim, const Attrs& attrs, std::initializer_list<const Field*> inputs);
Dual apply(const Primitive& prim, const Attrs& attrs, std::initializer_list<const Dual*> inputs);

}  // namespace diffsw::ad
