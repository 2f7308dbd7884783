#include "diffsw/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "diffsw/errors.hpp"

namespace diffsw::gradcheck {

std::string_view to_string(Mode m) { return m == Mode::jvp ? "jvp" : "vjp"; }

ad::PureFunction normalize_at(const ad::PureFunction& loss, const std::vector<Field>& point) {
  const std::vector<Field> v = loss(point);
  if (v.size() != 1 || v[0].size() != 1) {
    throw InvalidArgument("normalize_at: loss must return a single scalar");
  }
  const double l0 = std::abs(v[0].item());
  if (l0 == 0.0 || !std::isfinite(l0)) return loss;
  const double inv = 1.0 / l0;
  return ad::PureFunction([loss, inv](const auto& x) { return ops::cmul(inv, loss(x)[0]); });
}

namespace {

double evaluate(const ad::PureFunction& loss, const std::vector<Field>& x, const char* where) {
  const std::vector<Field> v = loss(x);
  if (v.size() != 1 || v[0].size() != 1) {
    throw InvalidArgument("loss must return a single scalar");
  }
  const double l = v[0].item();
  if (!std::isfinite(l)) {
    throw NonFiniteState("loss", std::string("non-finite loss at ") + where);
  }
  return l;
}

std::vector<Field> shifted(const std::vector<Field>& w, const std::vector<Field>& k, double c) {
  std::vector<Field> out = w;
  for (std::size_t i = 0; i < out.size(); ++i) out[i].axpy(c, k[i]);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double fd_directional(const ad::PureFunction& loss, const std::vector<Field>& w,
                      const std::vector<Field>& k, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("fd_directional: eps must be > 0");
  if (k.size() != w.size()) throw ShapeMismatch("fd_directional: direction does not match point");
  double norm2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    require_same_layout(w[i], k[i], "fd_directional");
    norm2 += dot(k[i], k[i]);
  }
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "fd_directional: direction norm " << std::sqrt(norm2) << " is not 1";
    throw InvalidArgument(msg.str());
  }
  const double plus = evaluate(loss, shifted(w, k, eps), "w + eps k");
  const double minus = evaluate(loss, shifted(w, k, -eps), "w - eps k");
  return (plus - minus) / (2.0 * eps);
}

std::vector<Field> random_direction(const ad::NamedInputs& w, const ad::DiffSelector& sel,
                                    std::uint64_t seed) {
  const std::vector<bool> active = sel.mask(w);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Field> k;
  k.reserve(w.values.size());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    Field f = Field::zeros_like(w.values[i]);
    if (active[i]) {
      for (double& x : f.values()) x = normal(rng);
      norm2 += dot(f, f);
    }
    k.push_back(std::move(f));
  }
  if (norm2 == 0.0) throw InvalidArgument("random_direction: no selected leaf");
  const double inv = 1.0 / std::sqrt(norm2);
  for (Field& f : k) f *= inv;
  return k;
}

double ad_directional(const ad::PureFunction& loss, const ad::NamedInputs& w,
                      const ad::DiffSelector& sel, const std::vector<Field>& k, Mode mode) {
  const std::vector<bool> active = sel.mask(w);
  if (mode == Mode::jvp) {
    std::vector<Field> dir;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (active[i]) dir.push_back(k[i]);
    }
    return ad::directional(loss, w, sel, dir).derivative;
  }
  ad::GradResult g = ad::grad(loss, w, sel);
  double acc = 0.0;
  for (std::size_t i = 0; i < g.names.size(); ++i) {
    acc += dot(g.gradients[i], k[w.index_of(g.names[i])]);
  }
  return acc;
}

Report grad_error(const ad::PureFunction& loss, const ad::NamedInputs& w,
                  const ad::DiffSelector& sel, double eps, std::uint64_t seed, Mode mode,
                  int n_steps) {
  const std::vector<Field> k = random_direction(w, sel, seed);
  Report r;
  r.eps = eps;
  r.seed = seed;
  r.mode = mode;
  r.n_steps = n_steps;
  r.fd_value = fd_directional(loss, w.values, k, eps);
  r.ad_value = ad_directional(loss, w, sel, k, mode);
  r.error = std::abs(r.ad_value - r.fd_value);
  if (std::abs(r.fd_value) >= kUndefinedBelow) r.accuracy = 1.0 - r.error / std::abs(r.fd_value);
  return r;
}

std::vector<Report> accuracy_over_steps(const LossFamily& family, const std::vector<int>& n_list,
                                        const ad::DiffSelector& sel, double eps,
                                        std::uint64_t seed) {
  if (!std::is_sorted(n_list.begin(), n_list.end())) {
    throw InvalidArgument("accuracy_over_steps: n_list must be sorted ascending");
  }
  std::vector<Report> out;
  for (int n : n_list) {
    const LossProblem p = family(n);
    for (Mode m : {Mode::jvp, Mode::vjp}) {
      out.push_back(grad_error(p.loss, p.point, sel, eps, seed, m, n));
    }
  }
  return out;
}

std::vector<TimingRow> cost_scaling(const LossFamily& family, const std::vector<int>& n_list,
                                    int repetitions, const ad::DiffSelector& sel) {
  if (repetitions < 3) throw InvalidArgument("cost_scaling: at least 3 repetitions required");
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
  std::vector<TimingRow> rows;
  for (int n : n_list) {
    const LossProblem p = family(n);
    (void)p.loss(p.point.values);
    (void)ad::grad(p.loss, p.point, sel);
    std::vector<double> fwd;
    std::vector<double> rev;
    for (int r = 0; r < repetitions; ++r) {
      auto t0 = clock::now();
      (void)p.loss(p.point.values);
      auto t1 = clock::now();
      (void)ad::grad(p.loss, p.point, sel);
      auto t2 = clock::now();
      fwd.push_back(ms(t1 - t0));
      rev.push_back(ms(t2 - t1));
    }
    rows.push_back({n, median(fwd), median(rev)});
  }
  return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("loglog_slope: need at least two paired samples");
  }
  double mx = 0.0;
  double my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("loglog_slope: samples must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw DomainError("loglog_slope: x values are all equal");
  return sxy / sxx;
}

}  // namespace diffsw::gradcheck
