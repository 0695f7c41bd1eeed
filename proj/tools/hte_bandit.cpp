#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hte_bandit/hte_bandit.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;

hte_bandit::RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  auto config = hte_bandit::config::load(path);
  for (const auto& o : overrides) hte_bandit::config::apply_override(config, o);
  config.validate();
  return config;
}

void print_summary(const hte_bandit::RunConfig& config, const hte_bandit::ExperimentResult& result) {
  std::size_t triggered = 0;
  for (const auto& run : result.runs) triggered += run.triggered ? 1 : 0;
  std::printf("%s on %s: final cumulative regret %.3f +- %.3f over %zu seeds, safety triggered in %zu\n",
              std::string(to_string(config.algorithm)).c_str(),
              std::string(to_string(config.environment.scenario)).c_str(), result.curve.final_mean(),
              result.curve.final_std(), result.runs.size(), triggered);
  std::printf("wrote %s\n", config.output_dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual bandits with inverse gap weighting driven by an R-loss oracle"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "Run one algorithm over every configured seed");
  run->add_option("--config", config_path, "Configuration file")->required();
  run->add_option("--set", overrides, "Override, e.g. --set policy.algorithm=igw");

  std::string algos;
  auto* cmp = app.add_subcommand("compare", "Paired comparison of several algorithms");
  cmp->add_option("--config", config_path, "Configuration file")->required();
  cmp->add_option("--algos", algos, "Comma-separated algorithms")->required();
  cmp->add_option("--set", overrides, "Override, e.g. --set environment.d=100");

  auto* val = app.add_subcommand("validate", "Run the enumeration checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*val) {
      const bool ok = hte_bandit::validation::report(hte_bandit::validation::run_validation(), std::cout);
      return ok ? kExitOk : kExitCheckFailed;
    }
    const auto config = load_config(config_path, overrides);
    if (*run) {
      print_summary(config, hte_bandit::run_experiment(config));
      return kExitOk;
    }
    std::vector<hte_bandit::RunConfig> configs;
    for (auto name : hte_bandit::config::detail::split(algos, ',')) {
      if (name.empty()) continue;
      auto c = config;
      try {
        c.algorithm = hte_bandit::parse_algorithm(name);
      } catch (const std::invalid_argument& e) {
        throw hte_bandit::ConfigError(e.what());
      }
      configs.push_back(std::move(c));
    }
    const auto result = hte_bandit::compare(configs);
    for (const auto& row : result.rows)
      std::printf("%-12s %10.3f +- %8.3f  ratio %.3f\n", std::string(to_string(row.algorithm)).c_str(),
                  row.final_mean, row.final_std, row.ratio_to_first);
    std::printf("wrote %s\n", (config.output_dir / "compare.csv").string().c_str());
    return kExitOk;
  } catch (const hte_bandit::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCheckFailed;
  }
}
