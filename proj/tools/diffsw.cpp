// Command-line driver: run | gradcheck | reconstruct | calibrate | sensitivity | benchmark.
#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "diffsw/io/commands.hpp"
#include "diffsw/io/config.hpp"

namespace {

using Command = void (*)(const diffsw::io::RunConfig&, const diffsw::io::CommandOptions&,
                         std::ostream&);

// One line, tab-separated: "error", category, config line (0 if none), message.
int report(const char* category, int line, std::string msg, int code) {
  for (char& ch : msg) {
    if (ch == '\n' || ch == '\t') ch = ' ';
  }
  std::cerr << "error\t" << category << "\t" << line << "\t" << msg << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable shallow-water channel model"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::string init;

  const std::map<std::string, std::pair<Command, const char*>> commands = {
      {"run", {diffsw::io::command_run, "integrate the model, writing snapshots"}},
      {"gradcheck", {diffsw::io::command_gradcheck, "compare AD and finite-difference derivatives"}},
      {"reconstruct", {diffsw::io::command_reconstruct, "recover a perturbed initial temperature"}},
      {"calibrate", {diffsw::io::command_calibrate, "fit A_h and r_bot to streamfunction observations"}},
      {"sensitivity", {diffsw::io::command_sensitivity, "loss and gradient over an (A_h, r_bot) grid"}},
      {"benchmark", {diffsw::io::command_benchmark, "time forward and reverse passes against n"}},
  };
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.second);
    sub->add_option("--config", config_path, "config file")->required();
    sub->add_option("--set", sets, "override, section.key=value (repeatable)");
    sub->add_option("--out", out, "output directory (default: output.directory)");
    sub->add_option("--seed", seed, "random seed (default: config seed)");
    sub->add_flag("--force", force, "replace a non-empty output directory");
    if (name == "run") sub->add_option("--init", init, "initial state snapshot");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", 0, e.what(), 2);
  }

  try {
    std::vector<diffsw::io::Override> overrides;
    for (const auto& s : sets) overrides.push_back(diffsw::io::parse_override(s));
    diffsw::io::RunConfig config = diffsw::io::parse_config(config_path, overrides);
    if (seed) config.seed = *seed;
    diffsw::io::CommandOptions options;
    options.out = out.empty() ? config.output.directory : out;
    options.force = force;
    if (!init.empty()) options.init = init;
    const std::string name = app.get_subcommands().front()->get_name();
    commands.at(name).first(config, options, std::cout);
  } catch (const diffsw::io::ConfigError& e) {
    return report(e.category(), e.line(), e.what(), 2);
  } catch (const diffsw::Error& e) {
    return report(e.category(), 0, e.what(), 1);
  } catch (const std::exception& e) {
    return report("internal", 0, e.what(), 1);
  }
  return 0;
}
