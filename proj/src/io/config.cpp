#include "diffsw/io/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace diffsw::io {

namespace {

const std::vector<std::string> kSections = {"grid",        "physics",     "stepping",
                                            "initial",     "gradcheck",   "reconstruct",
                                            "calibrate",   "sensitivity", "benchmark",
                                            "output"};
const std::vector<std::string> kRequiredSections = {"grid", "physics", "stepping"};

const std::set<std::string, std::less<>> kKnownKeys = {
    "seed",
    "grid.nx", "grid.ny", "grid.Lx", "grid.Ly", "grid.H", "grid.f0", "grid.beta",
    "grid.boundary",
    "physics.A_h", "physics.r_bot", "physics.drag_mode", "physics.C_d", "physics.g",
    "physics.rho0", "physics.tau0", "physics.wind_band", "physics.kappa_T",
    "physics.lambda_relax", "physics.T_star_south", "physics.T_star_north", "physics.sqrt_eps",
    "stepping.dt", "stepping.n_steps",
    "initial.spinup_steps", "initial.eddy_rms", "initial.eddy_smoothing",
    "gradcheck.n_list", "gradcheck.eps", "gradcheck.scale_Ah", "gradcheck.scale_rbot", "gradcheck.leaves",
    "reconstruct.l", "reconstruct.alpha", "reconstruct.iters", "reconstruct.amplitude",
    "reconstruct.sigma_frac",
    "calibrate.init_scale_Ah", "calibrate.init_scale_rbot", "calibrate.alpha",
    "calibrate.max_iters", "calibrate.grad_tol", "calibrate.obs_interval",
    "calibrate.obs_steps", "calibrate.mode",
    "sensitivity.n_Ah", "sensitivity.n_rbot", "sensitivity.span", "sensitivity.obs_interval",
    "sensitivity.obs_steps",
    "benchmark.n_list", "benchmark.repetitions",
    "output.directory", "output.snapshot_every",
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  int line = 0;  // 0 = --set
};

std::string where(int line, const std::string& key) {
  return line > 0 ? "line " + std::to_string(line) + ": " + key : "--set " + key;
}

struct Document {
  std::map<std::string, Entry> entries;
  std::map<std::string, int> sections;  // name -> header line (0 when only from --set)
};

Document read_document(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(line, "line " + std::to_string(line) + ": malformed section header '" + s + "'");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
        throw ConfigError(line, "line " + std::to_string(line) + ": unknown section [" + section + "]");
      }
      if (doc.sections.count(section) != 0) {
        throw ConfigError(line, "line " + std::to_string(line) + ": duplicate section [" + section + "]");
      }
      doc.sections[section] = line;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, "line " + std::to_string(line) + ": expected 'key = value', got '" + s + "'");
    }
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "line " + std::to_string(line) + ": empty key");
    const std::string path = section.empty() ? key : section + "." + key;
    if (kKnownKeys.count(path) == 0) {
      throw ConfigError(line, where(line, path) + ": unknown key");
    }
    if (doc.entries.count(path) != 0) {
      throw ConfigError(line, where(line, path) + ": duplicate key (first set on line " +
                                  std::to_string(doc.entries[path].line) + ")");
    }
    doc.entries[path] = Entry{value, line};
  }
  return doc;
}

class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  template <class T, class Check>
  void get(const std::string& key, T& out, Check check, const char* invariant) {
    const Entry* e = find(key);
    if (e == nullptr) return;
    out = convert<T>(*e, key);
    if (!check(out)) {
      throw ConfigError(e->line, where(e->line, key) + " = " + e->value +
                                     " violates invariant: " + invariant);
    }
  }

  template <class T>
  void get(const std::string& key, T& out) {
    get(key, out, [](const T&) { return true; }, "");
  }

  template <class T, class Check>
  void require(const std::string& key, T& out, Check check, const char* invariant) {
    if (find(key) == nullptr) {
      const std::string section = key.substr(0, key.find('.'));
      const auto it = doc_.sections.find(section);
      const int line = it == doc_.sections.end() ? 0 : it->second;
      throw ConfigError(line, (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                                  "missing required key " + key);
    }
    get(key, out, check, invariant);
  }

  const Entry* find(const std::string& key) const {
    const auto it = doc_.entries.find(key);
    return it == doc_.entries.end() ? nullptr : &it->second;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const Entry* e = find(key);
    const int line = e ? e->line : 0;
    throw ConfigError(line, where(line, key) + ": " + msg);
  }

 private:
  template <class T>
  T convert(const Entry& e, const std::string& key) const {
    const std::string& v = e.value;
    auto type_error = [&](const char* type) {
      return ConfigError(e.line, where(e.line, key) + ": expected " + type + ", got '" + v + "'");
    };
    if constexpr (std::is_same_v<T, std::string>) {
      if (v.empty()) throw type_error("a non-empty string");
      return v;
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      std::vector<std::string> out;
      std::istringstream in(v);
      std::string item;
      while (std::getline(in, item, ',')) {
        std::string t = trim(item);
        if (t.empty()) throw type_error("a comma-separated list of names");
        out.push_back(std::move(t));
      }
      if (out.empty()) throw type_error("a comma-separated list of names");
      return out;
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      std::vector<int> out;
      std::istringstream in(v);
      std::string item;
      while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        int x = 0;
        const auto r = std::from_chars(t.data(), t.data() + t.size(), x);
        if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) {
          throw type_error("a comma-separated list of integers");
        }
        out.push_back(x);
      }
      if (out.empty()) throw type_error("a comma-separated list of integers");
      return out;
    } else {
      T x{};
      const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
      if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) {
        throw type_error(std::is_floating_point_v<T> ? "a number" : "an integer");
      }
      if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(x)) throw type_error("a finite number");
      }
      return x;
    }
  }

  const Document& doc_;
};

const auto non_negative = [](double x) { return x >= 0.0; };
const auto positive = [](double x) { return x > 0.0; };
const auto any_value = [](double) { return true; };
const auto at_least = [](int lo) { return [lo](int x) { return x >= lo; }; };
const auto increasing_positive = [](const std::vector<int>& v) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] < 1 || (k > 0 && v[k] <= v[k - 1])) return false;
  }
  return true;
};

template <class E>
E parse_enum(const Reader& r, const std::string& key, E fallback,
             const std::vector<std::pair<std::string, E>>& names) {
  const Entry* e = r.find(key);
  if (e == nullptr) return fallback;
  for (const auto& [n, v] : names) {
    if (e->value == n) return v;
  }
  std::string allowed;
  for (const auto& [n, v] : names) allowed += (allowed.empty() ? "" : "|") + n;
  r.fail(key, "expected one of " + allowed + ", got '" + e->value + "'");
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (int x : v) s += (s.empty() ? "" : ", ") + std::to_string(x);
  return s;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

RunConfig build(const Document& doc) {
  std::string missing;
  for (const auto& s : kRequiredSections) {
    if (doc.sections.count(s) == 0) missing += (missing.empty() ? "[" : ", [") + s + "]";
  }
  if (!missing.empty()) throw ConfigError(0, "missing required sections: " + missing);

  Reader r(doc);
  RunConfig c;
  r.get("seed", c.seed);

  int nx = 0, ny = 0;
  double Lx = 0, Ly = 0, H = 0, f0 = 0, beta = 0;
  r.require("grid.nx", nx, at_least(4), "must be >= 4");
  r.require("grid.ny", ny, at_least(4), "must be >= 4");
  r.require("grid.Lx", Lx, positive, "must be > 0");
  r.require("grid.Ly", Ly, positive, "must be > 0");
  r.require("grid.H", H, positive, "must be > 0");
  r.get("grid.f0", f0, any_value, "");
  r.get("grid.beta", beta, any_value, "");
  const BoundaryKind boundary =
      parse_enum(r, "grid.boundary", BoundaryKind::free_slip,
                 {{"free_slip", BoundaryKind::free_slip},
                  {"no_slip", BoundaryKind::no_slip},
                  {"periodic", BoundaryKind::periodic}});
  c.grid = make_channel_grid(nx, ny, Lx, Ly, H, f0, beta, boundary);

  PhysParams& p = c.physics;
  r.require("physics.A_h", p.A_h, non_negative, "must be >= 0 (non-negative)");
  r.require("physics.r_bot", p.r_bot, non_negative, "must be >= 0 (non-negative)");
  p.drag_mode = parse_enum(r, "physics.drag_mode", DragMode::linear,
                           {{"linear", DragMode::linear}, {"quadratic", DragMode::quadratic}});
  r.get("physics.C_d", p.C_d, non_negative, "must be >= 0 (non-negative)");
  r.get("physics.g", p.g, positive, "must be > 0");
  r.get("physics.rho0", p.rho0, positive, "must be > 0");
  r.require("physics.tau0", p.tau0, any_value, "");
  r.get("physics.wind_band", p.wind_band, [](double x) { return x > 0.0 && x <= 1.0; },
        "must lie in (0, 1]");
  r.get("physics.kappa_T", p.kappa_T, non_negative, "must be >= 0 (non-negative)");
  r.get("physics.lambda_relax", p.lambda_relax, non_negative, "must be >= 0 (non-negative)");
  r.get("physics.T_star_south", c.T_star_south, any_value, "");
  r.get("physics.T_star_north", c.T_star_north, any_value, "");
  r.get("physics.sqrt_eps", p.sqrt_eps, positive, "must be > 0");
  p.T_star = linear_temperature(c.grid, c.T_star_south, c.T_star_north);

  if (const Entry* e = r.find("stepping.dt"); e != nullptr && e->value == "auto-cfl") {
    c.auto_cfl = true;
    c.stepping.dt = 0.5 * cfl_limit_dt(c.grid, p);
  } else {
    r.require("stepping.dt", c.stepping.dt, positive, "must be > 0 or auto-cfl");
    const double cn = courant_number(c.grid, p, c.stepping.dt);
    if (!(cn < kMaxCourant)) {
      r.fail("stepping.dt", "violates invariant: Courant number " + fmt(cn) + " >= " +
                                fmt(kMaxCourant) + " (CFL limit dt = " +
                                fmt(cfl_limit_dt(c.grid, p)) + " s)");
    }
  }
  r.require("stepping.n_steps", c.stepping.n_steps, at_least(0), "must be >= 0");

  InitialConfig& ic = c.initial;
  r.get("initial.spinup_steps", ic.spinup_steps, at_least(0), "must be >= 0");
  r.get("initial.eddy_rms", ic.eddy_rms, non_negative, "must be >= 0 (non-negative)");
  r.get("initial.eddy_smoothing", ic.eddy_smoothing, at_least(0), "must be >= 0");

  GradcheckConfig& gc = c.gradcheck;
  r.get("gradcheck.n_list", gc.n_list, increasing_positive,
        "entries must be >= 1 and strictly increasing");
  r.get("gradcheck.eps", gc.eps, positive, "must be > 0");
  r.get("gradcheck.scale_Ah", gc.scale_Ah, positive, "must be > 0");
  r.get("gradcheck.scale_rbot", gc.scale_rbot, positive, "must be > 0");
  r.get("gradcheck.leaves", gc.leaves,
        [](const std::vector<std::string>& v) {
          if (v.size() == 1 && v[0] == "all") return true;
          const std::set<std::string> names{"u", "v", "eta", "T", "A_h", "r_bot"};
          std::set<std::string> seen;
          for (const auto& x : v) {
            if (names.count(x) == 0 || !seen.insert(x).second) return false;
          }
          return true;
        },
        "must be 'all' or distinct names from u, v, eta, T, A_h, r_bot");

  ReconstructConfig& rc = c.reconstruct;
  r.get("reconstruct.l", rc.l, at_least(1), "must be >= 1");
  r.get("reconstruct.alpha", rc.alpha, non_negative, "must be >= 0 (0 selects the line search)");
  r.get("reconstruct.iters", rc.iters, at_least(0), "must be >= 0");
  r.get("reconstruct.amplitude", rc.amplitude, any_value, "");
  r.get("reconstruct.sigma_frac", rc.sigma_frac, positive, "must be > 0");

  CalibrateConfig& cc = c.calibrate;
  r.get("calibrate.init_scale_Ah", cc.init_scale_Ah, positive, "must be > 0");
  r.get("calibrate.init_scale_rbot", cc.init_scale_rbot, positive, "must be > 0");
  r.get("calibrate.alpha", cc.alpha, positive, "must be > 0");
  r.get("calibrate.max_iters", cc.max_iters, at_least(0), "must be >= 0");
  r.get("calibrate.grad_tol", cc.grad_tol, non_negative, "must be >= 0 (non-negative)");
  r.get("calibrate.obs_interval", cc.obs_interval, at_least(1), "must be >= 1");
  r.get("calibrate.obs_steps", cc.obs_steps, at_least(cc.obs_interval),
        "must be >= calibrate.obs_interval");
  cc.mode = parse_enum(r, "calibrate.mode", gradcheck::Mode::jvp,
                       {{"jvp", gradcheck::Mode::jvp}, {"vjp", gradcheck::Mode::vjp}});

  SensitivityConfig& sc = c.sensitivity;
  r.get("sensitivity.n_Ah", sc.n_Ah, at_least(3), "must be >= 3");
  r.get("sensitivity.n_rbot", sc.n_rbot, at_least(3), "must be >= 3");
  r.get("sensitivity.span", sc.span, [](double x) { return x > 1.0; }, "must be > 1");
  r.get("sensitivity.obs_interval", sc.obs_interval, at_least(1), "must be >= 1");
  r.get("sensitivity.obs_steps", sc.obs_steps, at_least(sc.obs_interval),
        "must be >= sensitivity.obs_interval");

  BenchmarkConfig& bc = c.benchmark;
  r.get("benchmark.n_list", bc.n_list,
        [&](const std::vector<int>& v) { return v.size() >= 2 && increasing_positive(v); },
        "needs at least two entries, each >= 1 and strictly increasing");
  r.get("benchmark.repetitions", bc.repetitions, at_least(3), "must be >= 3");

  r.get("output.directory", c.output.directory);
  r.get("output.snapshot_every", c.output.snapshot_every, at_least(0), "must be >= 0");

  p.validate(c.grid);
  return c;
}

}  // namespace

Override parse_override(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(0, "--set " + arg + ": expected section.key=value");
  }
  Override o{trim(std::string_view(arg).substr(0, eq)), trim(std::string_view(arg).substr(eq + 1))};
  if (kKnownKeys.count(o.path) == 0) throw ConfigError(0, "--set " + o.path + ": unknown key");
  return o;
}

RunConfig parse_config_text(const std::string& text, const std::vector<Override>& overrides) {
  Document doc = read_document(text);
  for (const Override& o : overrides) {
    if (kKnownKeys.count(o.path) == 0) throw ConfigError(0, "--set " + o.path + ": unknown key");
    doc.entries[o.path] = Entry{o.value, 0};
    const auto dot = o.path.find('.');
    if (dot != std::string::npos) doc.sections.emplace(o.path.substr(0, dot), 0);
  }
  return build(doc);
}

RunConfig parse_config(const std::filesystem::path& path, const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), overrides);
}

std::string RunConfig::resolved_text() const {
  std::ostringstream o;
  auto boundary_name = [](BoundaryKind b) {
    switch (b) {
      case BoundaryKind::no_slip: return "no_slip";
      case BoundaryKind::periodic: return "periodic";
      default: return "free_slip";
    }
  };
  o << "seed = " << seed << "\n\n";
  o << "[grid]\nnx = " << grid.nx << "\nny = " << grid.ny << "\nLx = " << fmt(grid.Lx)
    << "\nLy = " << fmt(grid.Ly) << "\nH = " << fmt(grid.H) << "\nf0 = " << fmt(grid.f0)
    << "\nbeta = " << fmt(grid.beta) << "\nboundary = " << boundary_name(grid.boundary) << "\n\n";
  const PhysParams& p = physics;
  o << "[physics]\nA_h = " << fmt(p.A_h) << "\nr_bot = " << fmt(p.r_bot)
    << "\ndrag_mode = " << (p.drag_mode == DragMode::linear ? "linear" : "quadratic")
    << "\nC_d = " << fmt(p.C_d) << "\ng = " << fmt(p.g) << "\nrho0 = " << fmt(p.rho0)
    << "\ntau0 = " << fmt(p.tau0) << "\nwind_band = " << fmt(p.wind_band)
    << "\nkappa_T = " << fmt(p.kappa_T) << "\nlambda_relax = " << fmt(p.lambda_relax)
    << "\nT_star_south = " << fmt(T_star_south) << "\nT_star_north = " << fmt(T_star_north)
    << "\nsqrt_eps = " << fmt(p.sqrt_eps) << "\n\n";
  o << "[stepping]\ndt = " << fmt(stepping.dt) << (auto_cfl ? "  # auto-cfl" : "")
    << "\nn_steps = " << stepping.n_steps << "\n\n";
  o << "[initial]\nspinup_steps = " << initial.spinup_steps
    << "\neddy_rms = " << fmt(initial.eddy_rms) << "\neddy_smoothing = " << initial.eddy_smoothing
    << "\n\n";
  o << "[gradcheck]\nn_list = " << join(gradcheck.n_list) << "\neps = " << fmt(gradcheck.eps)
    << "\nscale_Ah = " << fmt(gradcheck.scale_Ah) << "\nscale_rbot = " << fmt(gradcheck.scale_rbot)
    << "\nleaves = " << join(gradcheck.leaves) << "\n\n";
  o << "[reconstruct]\nl = " << reconstruct.l << "\nalpha = " << fmt(reconstruct.alpha)
    << "\niters = " << reconstruct.iters << "\namplitude = " << fmt(reconstruct.amplitude)
    << "\nsigma_frac = " << fmt(reconstruct.sigma_frac) << "\n\n";
  o << "[calibrate]\ninit_scale_Ah = " << fmt(calibrate.init_scale_Ah)
    << "\ninit_scale_rbot = " << fmt(calibrate.init_scale_rbot)
    << "\nalpha = " << fmt(calibrate.alpha) << "\nmax_iters = " << calibrate.max_iters
    << "\ngrad_tol = " << fmt(calibrate.grad_tol) << "\nobs_interval = " << calibrate.obs_interval
    << "\nobs_steps = " << calibrate.obs_steps << "\nmode = " << gradcheck::to_string(calibrate.mode)
    << "\n\n";
  o << "[sensitivity]\nn_Ah = " << sensitivity.n_Ah << "\nn_rbot = " << sensitivity.n_rbot
    << "\nspan = " << fmt(sensitivity.span) << "\nobs_interval = " << sensitivity.obs_interval
    << "\nobs_steps = " << sensitivity.obs_steps << "\n\n";
  o << "[benchmark]\nn_list = " << join(benchmark.n_list)
    << "\nrepetitions = " << benchmark.repetitions << "\n\n";
  o << "[output]\ndirectory = " << output.directory
    << "\nsnapshot_every = " << output.snapshot_every << "\n";
  return o.str();
}

}  // namespace diffsw::io
