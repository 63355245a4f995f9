// plapdpp: run declarative p-Laplacian DPP experiments.
//
//   plapdpp run <config.json> [--override key=value]...
//   plapdpp list-experiments

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plapdpp/experiments.hpp"

namespace ex = plapdpp::experiments;

namespace {

ex::Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw plapdpp::Error(plapdpp::ErrorKind::ConfigError, "cannot open config '" + path + "'");
  ex::Json tree = ex::Json::parse(in, nullptr, false, true);
  if (tree.is_discarded())
    throw plapdpp::Error(plapdpp::ErrorKind::ConfigError, "config '" + path + "' is not valid JSON");
  return tree;
}

int run_command(const std::string& config_path, const std::vector<std::string>& overrides) {
  try {
    ex::Json tree = load_json(config_path);
    for (const auto& o : overrides) ex::apply_override(tree, o);
    const ex::ExperimentConfig cfg = ex::parse_config(tree);
    const ex::RunStatus status = ex::run(cfg);
    for (const auto& m : status.messages) std::cerr << (status.exit_code == 1 ? "error: " : "violation: ") << m << '\n';
    if (status.exit_code == 0) std::cout << ex::to_string(cfg.experiment) << ": all properties hold\n";
    else if (status.exit_code == 2) std::cout << ex::to_string(cfg.experiment) << ": property violated\n";
    return status.exit_code;
  } catch (const plapdpp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == plapdpp::ErrorKind::ConfigError || e.kind() == plapdpp::ErrorKind::IoError ? 1 : 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic programming principles for the p-Laplacian"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_option("--override", overrides, "Set a dotted config key, e.g. average.p=4 (repeatable)");

  auto* list = app.add_subcommand("list-experiments", "List the available experiment kinds");

  CLI11_PARSE(app, argc, argv);

  if (*list) {
    for (const auto& e : ex::experiment_catalog()) std::printf("%-18s %s\n", e.name, e.summary);
    return 0;
  }
  return run_command(config_path, overrides);
}
