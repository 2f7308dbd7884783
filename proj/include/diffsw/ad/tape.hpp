#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "diffsw/ad/primitive.hpp"
#include "diffsw/field.hpp"

namespace diffsw::ad {

class Tape;

/// Reverse-mode value: a handle to a tape node, or a constant.
class Var {
 public:
  Var() = default;
  explicit Var(Field constant) : value_(std::make_shared<const Field>(std::move(constant))) {}

  const Field& primal() const noexcept { return *value_; }
  Tape* tape() const noexcept { return tape_; }
  int node() const noexcept { return node_; }
  bool is_constant() const noexcept { return tape_ == nullptr; }

 private:
  friend class Tape;
  std::shared_ptr<const Field> value_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

/// Ordered record of primitive applications for one reverse sweep.
///
/// Nodes are appended in evaluation order, so inputs always precede their
/// consumers. Every node keeps its primal output and shares (not copies) the
/// primal values of its inputs.
class Tape {
 public:
  explicit Tape(const Registry& registry = default_registry(), std::size_t max_bytes = 0);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// New differentiable leaf.
  Var variable(Field value);

  /// Appends a node. Throws UnregisteredPrimitive if the registry has no rule
  /// for `prim`, TapeExhausted if the memory budget would be exceeded.
  Var record(const Primitive& prim, const Attrs& attrs, std::span<const Var* const> inputs,
             Field output);

  /// Labels subsequently recorded nodes with a rollout step index.
  void mark_step(int step) noexcept { step_ = step; }
  int current_step() const noexcept { return step_; }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t bytes() const noexcept { return bytes_; }
  const Registry& registry() const noexcept { return *registry_; }

  struct SweepStats {
    std::vector<std::size_t> order;  // node ids whose backward rule ran, in sweep order
  };

  /// Propagates the seeded output cotangents back to `leaves`. Leaves the
  /// sweep never reaches get a zero gradient.
  std::vector<Field> backward(std::span<const std::pair<Var, Field>> seeds,
                              std::span<const Var> leaves, SweepStats* stats = nullptr) const;

  /// Re-evaluates every node from the recorded leaves and reports whether all
  /// outputs match the recording bit for bit.
  bool replay_matches() const;

 private:
  struct Node {
    const Primitive* prim = nullptr;  // null for leaves
    Attrs attrs;
    std::vector<int> inputs;          // node ids, -1 for constants
    std::vector<std::shared_ptr<const Field>> saved;
    std::shared_ptr<const Field> value;
    const GradientRule* rule = nullptr;
    int step = 0;
  };

  Var push(Node node);

  const Registry* registry_;
  std::size_t max_bytes_;
  std::size_t bytes_ = 0;
  int step_ = 0;
  std::vector<Node> nodes_;
};

Var apply(const Primitive& prim, const Attrs& attrs, std::initializer_list<const Var*> inputs);

}  // namespace diffsw::ad
