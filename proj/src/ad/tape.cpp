#include "diffsw/ad/tape.hpp"

#include <new>
#include <string>

#include "diffsw/errors.hpp"

namespace diffsw::ad {

Tape::Tape(const Registry& registry, std::size_t max_bytes)
    : registry_(&registry), max_bytes_(max_bytes) {}

Var Tape::push(Node node) {
  const std::size_t add = node.value->size() * sizeof(double);
  if (max_bytes_ != 0 && bytes_ + add > max_bytes_) {
    throw TapeExhausted("tape memory budget of " + std::to_string(max_bytes_) +
                            " bytes exhausted while recording step " + std::to_string(step_),
                        step_);
  }
  node.step = step_;
  Var v;
  v.value_ = node.value;
  v.tape_ = this;
  v.node_ = static_cast<int>(nodes_.size());
  try {
    nodes_.push_back(std::move(node));
  } catch (const std::bad_alloc&) {
    throw TapeExhausted("out of memory while recording step " + std::to_string(step_), step_);
  }
  bytes_ += add;
  return v;
}

Var Tape::variable(Field value) {
  Node n;
  n.value = std::make_shared<const Field>(std::move(value));
  return push(std::move(n));
}

Var Tape::record(const Primitive& prim, const Attrs& attrs, std::span<const Var* const> inputs,
                 Field output) {
  Node n;
  n.prim = &prim;
  n.attrs = attrs;
  n.rule = &registry_->rule(prim.name);
  n.inputs.reserve(inputs.size());
  n.saved.reserve(inputs.size());
  for (const Var* in : inputs) {
    if (in->tape_ != nullptr && in->tape_ != this) {
      throw InvalidArgument(std::string(prim.name) + ": inputs recorded on different tapes");
    }
    n.inputs.push_back(in->tape_ ? in->node_ : -1);
    n.saved.push_back(in->value_);
  }
  try {
    n.value = std::make_shared<const Field>(std::move(output));
  } catch (const std::bad_alloc&) {
    throw TapeExhausted("out of memory while recording step " + std::to_string(step_), step_);
  }
  return push(std::move(n));
}

std::vector<Field> Tape::backward(std::span<const std::pair<Var, Field>> seeds,
                                  std::span<const Var> leaves, SweepStats* stats) const {
  std::vector<std::optional<Field>> grads(nodes_.size());
  for (const auto& [var, ct] : seeds) {
    if (var.tape_ == nullptr) continue;  // constant output: nothing to propagate
    if (var.tape_ != this) throw InvalidArgument("backward: seed belongs to another tape");
    require_same_layout(var.primal(), ct, "backward seed");
    auto& slot = grads[static_cast<std::size_t>(var.node_)];
    if (slot) {
      *slot += ct;
    } else {
      slot = ct;
    }
  }

  std::vector<const Field*> in_ptrs;
  std::vector<Field*> grad_ptrs;
  if (stats != nullptr) stats->order.clear();
  for (std::size_t idx = nodes_.size(); idx-- > 0;) {
    const Node& node = nodes_[idx];
    if (!grads[idx] || node.prim == nullptr) continue;
    in_ptrs.clear();
    grad_ptrs.clear();
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      in_ptrs.push_back(node.saved[k].get());
      const int src = node.inputs[k];
      if (src < 0) {
        grad_ptrs.push_back(nullptr);
        continue;
      }
      auto& g = grads[static_cast<std::size_t>(src)];
      if (!g) g = Field::zeros_like(*node.saved[k]);
      grad_ptrs.push_back(&*g);
    }
    const Call call{*node.prim, in_ptrs, *node.value, node.attrs};
    node.rule->backward(call, *grads[idx], grad_ptrs);
    grads[idx].reset();
    if (stats != nullptr) stats->order.push_back(idx);
  }

  std::vector<Field> out;
  out.reserve(leaves.size());
  for (const Var& leaf : leaves) {
    if (leaf.tape_ != this) {
      out.push_back(Field::zeros_like(leaf.primal()));
      continue;
    }
    auto& g = grads[static_cast<std::size_t>(leaf.node_)];
    out.push_back(g ? *g : Field::zeros_like(leaf.primal()));
  }
  return out;
}

bool Tape::replay_matches() const {
  std::vector<std::shared_ptr<const Field>> replayed(nodes_.size());
  std::vector<const Field*> in_ptrs;
  for (std::size_t idx = 0; idx < nodes_.size(); ++idx) {
    const Node& node = nodes_[idx];
    if (node.prim == nullptr) {
      replayed[idx] = node.value;
      continue;
    }
    in_ptrs.clear();
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const int src = node.inputs[k];
      in_ptrs.push_back(src < 0 ? node.saved[k].get() : replayed[static_cast<std::size_t>(src)].get());
    }
    auto value = std::make_shared<const Field>(node.prim->forward(in_ptrs, node.attrs));
    if (!bitwise_equal(*value, *node.value)) return false;
    replayed[idx] = std::move(value);
  }
  return true;
}

Var apply(const Primitive& prim, const Attrs& attrs, std::initializer_list<const Var*> inputs) {
  if (prim.arity != inputs.size()) {
    throw InvalidArgument(std::string(prim.name) + ": expected " + std::to_string(prim.arity) +
                          " inputs, got " + std::to_string(inputs.size()));
  }
  std::vector<const Field*> primals;
  primals.reserve(inputs.size());
  Tape* tape = nullptr;
  for (const Var* v : inputs) {
    primals.push_back(&v->primal());
    if (tape == nullptr) tape = v->tape();
  }
  Field out = prim.forward(primals, attrs);
  if (tape == nullptr) return Var(std::move(out));
  return tape->record(prim, attrs, std::span<const Var* const>(inputs.begin(), inputs.size()),
                      std::move(out));
}

}  // namespace diffsw::ad
