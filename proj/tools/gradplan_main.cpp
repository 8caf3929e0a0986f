// gradplan: plan by backpropagation through unrolled domain dynamics.
//
//   gradplan run --domain nav-nonlinear --epochs 500 --out out/nav
//   gradplan compare --domain hvac --optimizers sgd,rmsprop --rate 0.001
//   gradplan sweep --domain reservoir-nonlinear --rates 0.1,0.01,0.001
//
// Options may also come from --config FILE (key = value lines); flags given
// on the command line override file entries. Domain parameters are set with
// --set key=value, e.g. --set reservoir.rain=10.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradplan/errors.hpp"
#include "gradplan/harness.hpp"

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct FlagBinding {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

void print_curve_summary(const gradplan::cli::CurveSet& set) {
  for (std::size_t k = 0; k < set.results.size(); ++k) {
    std::printf("%-10s best_value=%s epochs=%zu\n", set.labels[k].c_str(),
                gradplan::cli::format_real(set.results[k].best_value).c_str(),
                set.results[k].epochs_run);
  }
  std::printf("curves: %s\n", set.csv.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planning by backpropagation for hybrid domains"};
  app.require_subcommand(1);

  std::vector<FlagBinding> flags;
  flags.reserve(16);
  auto add_flag = [&](const std::string& name, const std::string& key,
                      const std::string& help) {
    flags.push_back({key, {}, nullptr});
    flags.back().option = app.add_option(name, flags.back().value, help);
  };
  add_flag("--domain", "domain",
           "nav-nonlinear, nav-bilinear, nav-linear, reservoir-nonlinear, "
           "reservoir-linear or hvac");
  add_flag("--optimizer", "optimizer", "sgd, rmsprop, adagrad, adadelta or adam");
  add_flag("--rate", "rate", "learning rate");
  add_flag("--epsilon", "epsilon", "optimizer epsilon (default per optimizer)");
  add_flag("--epochs", "epochs", "maximum epochs");
  add_flag("--batch", "batch", "parallel instances N");
  add_flag("--horizon", "horizon", "planning horizon H (default per domain)");
  add_flag("--seed", "seed", "random seed");
  add_flag("--tol", "tol", "early-stop improvement threshold");
  add_flag("--patience", "patience", "epochs without improvement before stopping");
  add_flag("--workers", "workers", "worker threads (default GRADPLAN_WORKERS or 1)");
  add_flag("--out", "out", "output directory");
  add_flag("--optimizers", "optimizers", "comma-separated list for compare");
  add_flag("--rates", "rates", "comma-separated list for sweep");

  std::string config_path;
  std::vector<std::string> sets;
  bool heuristic = false;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--set", sets, "domain parameter override key=value")
      ->allow_extra_args(false);
  app.add_flag("--heuristic", heuristic, "also roll out the domain heuristic");

  auto* run_cmd = app.add_subcommand("run", "plan once and write curve, plan, summary");
  auto* compare_cmd =
      app.add_subcommand("compare", "one curve per optimizer from shared initial actions");
  auto* sweep_cmd = app.add_subcommand("sweep", "one curve per learning rate");
  for (auto* sub : {run_cmd, compare_cmd, sweep_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    gradplan::cli::KeyValues entries;
    if (!config_path.empty()) entries = gradplan::cli::read_config_file(config_path);
    for (const auto& f : flags) {
      if (f.option->count() > 0) entries.emplace_back(f.key, f.value);
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        throw gradplan::ConfigError("expected key=value, got '" + s + "'", "set");
      }
      entries.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (heuristic) entries.emplace_back("heuristic", "true");

    const gradplan::cli::RunConfig config = gradplan::cli::parse_config(entries);

    if (run_cmd->parsed()) {
      const auto out = gradplan::cli::run(config);
      std::printf("best_value=%s instance=%zu epochs=%zu wall_ms=%.1f\n",
                  gradplan::cli::format_real(out.result.best_value).c_str(),
                  out.result.best_instance, out.result.epochs_run, out.wall_ms);
      if (out.heuristic_value) {
        std::printf("heuristic_value=%s\n",
                    gradplan::cli::format_real(*out.heuristic_value).c_str());
      }
      std::printf("wrote %s\n", config.out_dir.string().c_str());
    } else if (compare_cmd->parsed()) {
      std::vector<std::string> names = config.optimizers;
      if (names.empty()) names = {"sgd", "rmsprop", "adagrad", "adadelta", "adam"};
      print_curve_summary(gradplan::cli::compare_optimizers(config, names));
    } else {
      std::vector<double> rates = config.rates;
      if (rates.empty()) rates = {0.1, 0.01, 0.001};
      print_curve_summary(gradplan::cli::sweep_rates(config, rates));
    }
  } catch (const gradplan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const gradplan::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const gradplan::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
