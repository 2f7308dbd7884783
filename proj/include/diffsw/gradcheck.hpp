#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "diffsw/autodiff.hpp"

namespace diffsw::gradcheck {

enum class Mode : std::uint8_t { jvp, vjp };
std::string_view to_string(Mode m);

struct Report {
  double eps = 0.0;
  std::uint64_t seed = 0;  // direction descriptor
  double ad_value = 0.0;
  double fd_value = 0.0;
  double error = 0.0;               // |ad - fd|
  std::optional<double> accuracy;   // 1 - |ad - fd| / |fd|; empty when |fd| < kUndefinedBelow
  int n_steps = 0;
  Mode mode = Mode::jvp;
};

inline constexpr double kUndefinedBelow = 1e-14;

/// A scalar loss together with the point it is evaluated at.
struct LossProblem {
  ad::PureFunction loss;
  ad::NamedInputs point;
};

/// Loss family indexed by rollout length.
using LossFamily = std::function<LossProblem(int n_steps)>;

/// Divides the loss by |loss(point)| so that it is O(1) at the point. A loss
/// that vanishes there is returned unchanged.
ad::PureFunction normalize_at(const ad::PureFunction& loss, const std::vector<Field>& point);

/// (loss(w + eps k) - loss(w - eps k)) / (2 eps), with exactly two evaluations.
/// `k` covers every input and must have unit L2 norm within 1e-12.
double fd_directional(const ad::PureFunction& loss, const std::vector<Field>& w,
                      const std::vector<Field>& k, double eps);

/// Standard normal entries on the selected leaves, zero elsewhere, scaled to
/// unit L2 norm. Deterministic in `seed`.
std::vector<Field> random_direction(const ad::NamedInputs& w, const ad::DiffSelector& sel,
                                    std::uint64_t seed);

/// <grad loss, k> by one forward-mode pass or by one reverse sweep.
double ad_directional(const ad::PureFunction& loss, const ad::NamedInputs& w,
                      const ad::DiffSelector& sel, const std::vector<Field>& k, Mode mode);

Report grad_error(const ad::PureFunction& loss, const ad::NamedInputs& w,
                  const ad::DiffSelector& sel, double eps, std::uint64_t seed, Mode mode,
                  int n_steps = 0);

/// One report per (n, mode), both modes for every n, in n_list order. The
/// direction is drawn once per n from `seed`.
std::vector<Report> accuracy_over_steps(const LossFamily& family, const std::vector<int>& n_list,
                                        const ad::DiffSelector& sel, double eps,
                                        std::uint64_t seed);

struct TimingRow {
  int n_steps = 0;
  double forward_ms = 0.0;
  double vjp_ms = 0.0;
};

/// Median wall time of a plain loss evaluation and of a full reverse-mode
/// gradient, over `repetitions` runs after one discarded warm-up.
std::vector<TimingRow> cost_scaling(const LossFamily& family, const std::vector<int>& n_list,
                                    int repetitions, const ad::DiffSelector& sel);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace diffsw::gradcheck
