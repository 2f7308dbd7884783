#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "diffsw/ad/dual.hpp"
#include "diffsw/ad/ops.hpp"
#include "diffsw/ad/primitive.hpp"
#include "diffsw/ad/tape.hpp"

namespace diffsw::ad {

/// A function of several fields written once against the generic ops and
/// usable in every evaluation mode.
///
/// Construct it from a generic callable `f(const std::vector<V>&)` returning
/// either a V or a std::vector<V>. Such a callable must not keep state between
/// calls: the engine relies on it being pure.
class PureFunction {
 public:
  template <class F>
    requires(!std::is_same_v<std::decay_t<F>, PureFunction>)
  PureFunction(F f)  // NOLINT(google-explicit-constructor)
      : plain_(wrap<Field>(f)), dual_(wrap<Dual>(f)), var_(wrap<Var>(f)) {}

  std::vector<Field> operator()(const std::vector<Field>& x) const { return plain_(x); }
  std::vector<Dual> operator()(const std::vector<Dual>& x) const { return dual_(x); }
  std::vector<Var> operator()(const std::vector<Var>& x) const { return var_(x); }

 private:
  template <class V, class F>
  static std::function<std::vector<V>(const std::vector<V>&)> wrap(F f) {
    return [f](const std::vector<V>& x) -> std::vector<V> {
      auto r = f(x);
      if constexpr (std::is_same_v<decltype(r), V>) {
        return {std::move(r)};
      } else {
        return r;
      }
    };
  }

  std::function<std::vector<Field>(const std::vector<Field>&)> plain_;
  std::function<std::vector<Dual>(const std::vector<Dual>&)> dual_;
  std::function<std::vector<Var>(const std::vector<Var>&)> var_;
};

struct JvpResult {
  std::vector<Field> values;
  std::vector<Field> tangents;  // one per output; zero when unreachable
};

/// Forward mode. `tangents[i] == nullopt` freezes input i.
JvpResult jvp(const PureFunction& f, const std::vector<Field>& x,
              const std::vector<std::optional<Field>>& tangents,
              const Registry& registry = default_registry());

struct VjpOptions {
  const Registry* registry = nullptr;  // null selects default_registry()
  std::size_t max_tape_bytes = 0;      // 0 = unlimited
};

struct VjpResult {
  std::vector<Field> values;
  std::vector<std::optional<Field>> gradients;  // nullopt for frozen inputs
  std::size_t tape_nodes = 0;
};

/// Reverse mode: values and v^T J for every active input. An empty `active`
/// mask activates all inputs.
VjpResult vjp(const PureFunction& f, const std::vector<Field>& x,
              const std::vector<Field>& cotangents, const std::vector<bool>& active = {},
              const VjpOptions& options = {});

/// Ordered, named leaves of a differentiable computation.
struct NamedInputs {
  std::vector<std::string> names;
  std::vector<Field> values;

  void add(std::string name, Field value);
  /// Index of a leaf, or throws InvalidArgument.
  std::size_t index_of(std::string_view name) const;
  const Field& at(std::string_view name) const { return values[index_of(name)]; }
};

/// Set of leaves that are differentiated; everything else is frozen.
class DiffSelector {
 public:
  static DiffSelector all();
  static DiffSelector none();
  static DiffSelector only(std::initializer_list<std::string> leaves);
  static DiffSelector only(std::vector<std::string> leaves);

  bool selects(std::string_view leaf) const;
  /// Active mask aligned with `inputs`; throws if a selected name is unknown.
  std::vector<bool> mask(const NamedInputs& inputs) const;

 private:
  bool all_ = false;
  std::set<std::string, std::less<>> leaves_;
};

struct GradResult {
  double loss = 0.0;
  std::vector<std::string> names;  // selected leaves only, in input order
  std::vector<Field> gradients;

  const Field& at(std::string_view name) const;
};

/// Gradient of a scalar loss restricted to the selected leaves.
GradResult grad(const PureFunction& loss, const NamedInputs& inputs, const DiffSelector& selector,
                const VjpOptions& options = {});

/// Directional derivative of a scalar loss along a tangent given per selected leaf.
struct DirectionalResult {
  double loss = 0.0;
  double derivative = 0.0;
};
DirectionalResult directional(const PureFunction& loss, const NamedInputs& inputs,
                              const DiffSelector& selector, const std::vector<Field>& direction,
                              const Registry& registry = default_registry());

/// Scalar convenience: sqrt with the regularized backward rule. Returns the
/// exact square root; throws DomainError for x < 0.
double sqrt_reg(double x);
/// Gradient of sqrt_reg at x under the given clamp.
double sqrt_reg_grad(double x, double eps = kDefaultSqrtEps);

}  // namespace diffsw::ad
