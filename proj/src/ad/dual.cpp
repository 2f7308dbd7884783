#include "diffsw/ad/dual.hpp"

#include <string>
#include <vector>

#include "diffsw/errors.hpp"

namespace diffsw::ad {
namespace {

void check_arity(const Primitive& prim, std::size_t n) {
  if (prim.arity != n) {
    throw InvalidArgument(std::string(prim.name) + ": expected " + std::to_string(prim.arity) +
                          " inputs, got " + std::to_string(n));
  }
}

}  // namespace

Dual::Dual(Field primal, Field tangent, const Registry& registry)
    : primal_(std::move(primal)), tangent_(std::move(tangent)), registry_(&registry) {
  if (!tangent_->same_layout(primal_)) {
    throw ShapeMismatch("tangent layout does not match primal");
  }
}

Field apply(const Primitive& prim, const Attrs& attrs, std::initializer_list<const Field*> inputs) {
  check_arity(prim, inputs.size());
  return prim.forward(std::span<const Field* const>(inputs.begin(), inputs.size()), attrs);
}

Dual apply(const Primitive& prim, const Attrs& attrs, std::initializer_list<const Dual*> inputs) {
  check_arity(prim, inputs.size());
  std::vector<const Field*> primals;
  std::vector<const Field*> tangents;
  primals.reserve(inputs.size());
  tangents.reserve(inputs.size());
  const Registry* registry = nullptr;
  bool any_tangent = false;
  for (const Dual* d : inputs) {
    primals.push_back(&d->primal_);
    tangents.push_back(d->tangent());
    any_tangent = any_tangent || d->has_tangent();
    if (registry == nullptr) registry = d->registry_;
  }

  Dual out(prim.forward(primals, attrs));
  if (registry == nullptr) return out;

  // Look the rule up even when every tangent is zero, so a primitive without
  // rules is reported as soon as traced data reaches it.
  const GradientRule& rule = registry->rule(prim.name);
  out.registry_ = registry;
  if (any_tangent) {
    const Call call{prim, primals, out.primal_, attrs};
    out.tangent_ = rule.tangent(call, tangents);
  }
  return out;
}

}  // namespace diffsw::ad
