#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "diffsw/field.hpp"

namespace diffsw {
struct GridSpec;
}

namespace diffsw::ad {

/// Static attributes of one primitive application (not differentiated).
struct Attrs {
  const GridSpec* grid = nullptr;
  Stagger to = Stagger::center;
  double c = 0.0;
};

using ForwardFn = Field (*)(std::span<const Field* const> inputs, const Attrs& attrs);

/// A field-level operation the engine knows how to evaluate. Differentiation
/// rules live separately in a Registry, keyed by `name`.
struct Primitive {
  std::string_view name;
  ForwardFn forward;
  std::size_t arity;
};

/// Everything a rule may look at: primal inputs, primal output, attributes.
struct Call {
  const Primitive& prim;
  std::span<const Field* const> inputs;
  const Field& output;
  const Attrs& attrs;
};

/// Output tangent from input tangents; a null tangent pointer means zero.
using TangentRule = std::function<Field(const Call&, std::span<const Field* const> tangents)>;

/// Accumulates (+=) input cotangents from the output cotangent; a null slot in
/// `grads` means that input does not need a gradient.
using BackwardRule =
    std::function<void(const Call&, const Field& cotangent, std::span<Field* const> grads)>;

struct GradientRule {
  TangentRule tangent;
  BackwardRule backward;
};

/// Replacement differentiation rules for an existing primitive. The primal
/// computation is never affected.
struct CustomGradientEntry {
  std::string primitive;
  BackwardRule backward;
  TangentRule tangent;
};

struct RegistryHandle {
  std::string primitive;
};

class Registry {
 public:
  /// Registry holding only the built-in (mathematically exact) rules.
  static Registry with_builtins();

  /// Overrides the rules of one primitive. Each primitive may be overridden once.
  RegistryHandle register_custom_gradient(CustomGradientEntry entry);

  /// Active rule for a primitive; throws UnregisteredPrimitive if there is none.
  const GradientRule& rule(std::string_view primitive) const;

  bool has_rule(std::string_view primitive) const;
  bool is_overridden(std::string_view primitive) const;

  void set_builtin(std::string name, GradientRule rule);

 private:
  std::map<std::string, GradientRule, std::less<>> builtin_;
  std::map<std::string, GradientRule, std::less<>> custom_;
};

/// Process-wide registry: built-ins plus the regularized square-root gradient
/// (eps supplied per call through Attrs::c). Read-only after first use.
const Registry& default_registry();

/// Custom gradient for "sqrt": d/dx sqrt(x) := 1 / (2 sqrt(max(x, eps))), with
/// eps taken from the call's Attrs::c. max() breaks ties toward x.
CustomGradientEntry sqrt_reg_entry();

/// Default clamp for the regularized square-root gradient.
inline constexpr double kDefaultSqrtEps = 1e-12;

}  // namespace diffsw::ad
