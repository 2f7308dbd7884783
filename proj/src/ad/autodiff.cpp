#include "diffsw/autodiff.hpp"

#include <cmath>
#include <memory>
#include <new>
#include <string>

#include "diffsw/errors.hpp"

namespace diffsw::ad {

JvpResult jvp(const PureFunction& f, const std::vector<Field>& x,
              const std::vector<std::optional<Field>>& tangents, const Registry& registry) {
  if (tangents.size() != x.size()) {
    throw ShapeMismatch("jvp: " + std::to_string(tangents.size()) + " tangents for " +
                        std::to_string(x.size()) + " inputs");
  }
  std::vector<Dual> in;
  in.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (tangents[i]) {
      in.emplace_back(x[i], *tangents[i], registry);
    } else {
      in.emplace_back(x[i]);
    }
  }
  std::vector<Dual> out = f(in);
  JvpResult r;
  r.values.reserve(out.size());
  r.tangents.reserve(out.size());
  for (Dual& d : out) {
    r.tangents.push_back(d.tangent_or_zero());
    r.values.push_back(d.primal());
  }
  return r;
}

VjpResult vjp(const PureFunction& f, const std::vector<Field>& x,
              const std::vector<Field>& cotangents, const std::vector<bool>& active,
              const VjpOptions& options) {
  if (!active.empty() && active.size() != x.size()) {
    throw ShapeMismatch("vjp: active mask size does not match inputs");
  }
  const Registry& registry = options.registry ? *options.registry : default_registry();
  Tape tape(registry, options.max_tape_bytes);

  std::vector<Var> in;
  in.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool on = active.empty() || active[i];
    in.push_back(on ? tape.variable(x[i]) : Var(x[i]));
  }

  std::vector<Var> out;
  try {
    out = f(in);
  } catch (const std::bad_alloc&) {
    throw TapeExhausted("out of memory while recording step " +
                            std::to_string(tape.current_step()),
                        tape.current_step());
  }
  if (cotangents.size() != out.size()) {
    throw ShapeMismatch("vjp: " + std::to_string(cotangents.size()) + " cotangents for " +
                        std::to_string(out.size()) + " outputs");
  }

  std::vector<std::pair<Var, Field>> seeds;
  seeds.reserve(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    require_same_layout(out[k].primal(), cotangents[k], "vjp cotangent");
    seeds.emplace_back(out[k], cotangents[k]);
  }
  std::vector<Field> g = tape.backward(seeds, in);

  VjpResult r;
  r.tape_nodes = tape.size();
  r.values.reserve(out.size());
  for (const Var& v : out) r.values.push_back(v.primal());
  r.gradients.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (active.empty() || active[i]) r.gradients[i] = std::move(g[i]);
  }
  return r;
}

void NamedInputs::add(std::string name, Field value) {
  for (const auto& n : names) {
    if (n == name) throw InvalidArgument("duplicate leaf name '" + name + "'");
  }
  names.push_back(std::move(name));
  values.push_back(std::move(value));
}

std::size_t NamedInputs::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw InvalidArgument("unknown leaf '" + std::string(name) + "'");
}

DiffSelector DiffSelector::all() {
  DiffSelector s;
  s.all_ = true;
  return s;
}

DiffSelector DiffSelector::none() { return DiffSelector{}; }

DiffSelector DiffSelector::only(std::initializer_list<std::string> leaves) {
  return only(std::vector<std::string>(leaves));
}

DiffSelector DiffSelector::only(std::vector<std::string> leaves) {
  DiffSelector s;
  for (auto& l : leaves) s.leaves_.insert(std::move(l));
  return s;
}

bool DiffSelector::selects(std::string_view leaf) const {
  return all_ || leaves_.find(leaf) != leaves_.end();
}

std::vector<bool> DiffSelector::mask(const NamedInputs& inputs) const {
  for (const auto& l : leaves_) (void)inputs.index_of(l);
  std::vector<bool> m(inputs.names.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = selects(inputs.names[i]);
  return m;
}

const Field& GradResult::at(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return gradients[i];
  }
  throw InvalidArgument("leaf '" + std::string(name) + "' is not in the gradient");
}

namespace {

void require_scalar_output(const std::vector<Field>& values, const char* who) {
  if (values.size() != 1 || values[0].size() != 1) {
    throw InvalidArgument(std::string(who) + ": loss must return a single scalar");
  }
}

}  // namespace

GradResult grad(const PureFunction& loss, const NamedInputs& inputs, const DiffSelector& selector,
                const VjpOptions& options) {
  const std::vector<bool> active = selector.mask(inputs);
  GradResult r;
  bool any = false;
  for (bool a : active) any = any || a;
  if (!any) {
    std::vector<Field> values = loss(inputs.values);
    require_scalar_output(values, "grad");
    r.loss = values[0].item();
    return r;
  }
  VjpResult v = vjp(loss, inputs.values, {Field::scalar(1.0)}, active, options);
  require_scalar_output(v.values, "grad");
  r.loss = v.values[0].item();
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!active[i]) continue;
    r.names.push_back(inputs.names[i]);
    r.gradients.push_back(std::move(*v.gradients[i]));
  }
  return r;
}

DirectionalResult directional(const PureFunction& loss, const NamedInputs& inputs,
                              const DiffSelector& selector, const std::vector<Field>& direction,
                              const Registry& registry) {
  const std::vector<bool> active = selector.mask(inputs);
  std::vector<std::optional<Field>> tangents(inputs.values.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!active[i]) continue;
    if (k >= direction.size()) throw ShapeMismatch("directional: too few direction fields");
    require_same_layout(inputs.values[i], direction[k], "directional");
    tangents[i] = direction[k++];
  }
  if (k != direction.size()) throw ShapeMismatch("directional: too many direction fields");
  JvpResult j = jvp(loss, inputs.values, tangents, registry);
  require_scalar_output(j.values, "directional");
  return {j.values[0].item(), j.tangents[0].item()};
}

double sqrt_reg(double x) {
  std::vector<Field> y = PureFunction([](const auto& in) { return ops::sqrt_reg(in[0]); })(
      std::vector<Field>{Field::scalar(x)});
  return y[0].item();
}

double sqrt_reg_grad(double x, double eps) {
  PureFunction f([eps](const auto& in) { return ops::sqrt_reg(in[0], eps); });
  VjpResult r = vjp(f, {Field::scalar(x)}, {Field::scalar(1.0)});
  return r.gradients[0]->item();
}

}  // namespace diffsw::ad
