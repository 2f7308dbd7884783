#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "diffsw/dyncore.hpp"
#include "diffsw/errors.hpp"
#include "diffsw/gradcheck.hpp"

namespace diffsw::io {

/// Parse or validation failure. `line()` is the 1-based line of the offending
/// entry in the config file, or 0 for entries supplied through --set and for
/// whole-file problems.
class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& what) : Error(what), line_(line) {}
  int line() const noexcept { return line_; }
  const char* category() const noexcept override { return "config"; }

 private:
  int line_;
};

/// Shared initial-condition recipe for the experiments.
struct InitialConfig {
  int spinup_steps = 1000;
  double eddy_rms = 0.3;   // m/s
  int eddy_smoothing = 0;
};

struct GradcheckConfig {
  std::vector<int> n_list{1, 2, 4, 8, 16, 32};
  double eps = 1e-4;
  double scale_Ah = 1.5;   // evaluation point as multiples of the physics values
  double scale_rbot = 0.5;
  std::vector<std::string> leaves{"r_bot"};  // differentiated leaves, or {"all"}
};

struct ReconstructConfig {
  int l = 4;
  double alpha = 0.0;       // 0 selects the line search
  int iters = 500;
  double amplitude = 1.0;   // degC
  double sigma_frac = 0.0625;  // Gaussian width as a fraction of Lx
};

struct CalibrateConfig {
  double init_scale_Ah = 1.5;
  double init_scale_rbot = 0.5;
  double alpha = 10.0;
  int max_iters = 300;
  double grad_tol = 1e-6;
  int obs_interval = 50;
  int obs_steps = 500;
  gradcheck::Mode mode = gradcheck::Mode::jvp;
};

struct SensitivityConfig {
  int n_Ah = 7;
  int n_rbot = 7;
  double span = 10.0;  // the grid runs from truth / span to truth * span
  int obs_interval = 50;
  int obs_steps = 500;
};

struct BenchmarkConfig {
  std::vector<int> n_list{8, 16, 32, 64, 128};
  int repetitions = 3;
};

struct OutputConfig {
  std::string directory = "out";
  int snapshot_every = 0;  // 0 writes only the initial and final states
};

struct RunConfig {
  GridSpec grid;
  PhysParams physics;      // T_star is built from the two ramp endpoints below
  double T_star_south = 2.0;  // degC
  double T_star_north = 12.0;
  StepConfig stepping;
  bool auto_cfl = false;
  InitialConfig initial;
  GradcheckConfig gradcheck;
  ReconstructConfig reconstruct;
  CalibrateConfig calibrate;
  SensitivityConfig sensitivity;
  BenchmarkConfig benchmark;
  OutputConfig output;
  std::uint64_t seed = 0;

  /// Normalized `section.key = value` listing of every setting, in a form
  /// parse_config_text accepts.
  std::string resolved_text() const;
};

/// `section.key=value` applied after the file is read and before validation.
struct Override {
  std::string path;
  std::string value;
};

Override parse_override(const std::string& arg);

RunConfig parse_config_text(const std::string& text, const std::vector<Override>& overrides = {});
/// Throws ConfigError when the file cannot be read.
RunConfig parse_config(const std::filesystem::path& path,
                       const std::vector<Override>& overrides = {});

}  // namespace diffsw::io
