#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "lmsx/commands.hpp"
#include "lmsx/errors.hpp"

namespace {

// 0 success, 1 validation error, 2 runtime/numerical failure
constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kRuntimeError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-margin softmax training and evaluation"};
  app.require_subcommand(1);

  std::string dataset = "mnist";
  std::string dest;
  auto* fetch = app.add_subcommand("fetch", "Download a dataset with checksum verification");
  fetch->add_option("dataset", dataset, "Dataset name (mnist)")->required();
  fetch->add_option("dest", dest, "Destination directory")->required();

  std::string train_config;
  auto* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("config", train_config, "Experiment config (INI)")->required();

  std::string eval_params, eval_config;
  auto* eval = app.add_subcommand("eval", "Evaluate saved parameters");
  eval->add_option("params", eval_params, "Parameter file from train")->required();
  eval->add_option("config", eval_config, "Experiment config (INI)")->required();

  std::vector<int> margins{1, 2, 3, 4};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double tolerance = 1e-6;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of loss gradients");
  gradcheck->add_option("--margins", margins, "Margin values to test");
  gradcheck->add_option("--seeds", seeds, "Random seeds");
  gradcheck->add_option("--tolerance", tolerance, "Max relative error");

  std::string fig_config;
  std::uint64_t fig_seed = 0;
  bool fig_seed_set = false;
  auto* figure1 = app.add_subcommand("figure1", "Train 2-D feature nets for m = 1..4");
  figure1->add_option("config", fig_config, "Experiment config (INI)")->required();
  auto* seed_opt = figure1->add_option("--seed", fig_seed, "Seed override");

  try {
    app.parse(argc, argv);
    fig_seed_set = seed_opt->count() > 0;

    if (*fetch) {
      if (dataset != "mnist") {
        std::cerr << "unknown dataset '" << dataset << "'\n";
        return kValidationError;
      }
      lmsx::fetch_dataset(lmsx::mnist_registry(), dest, lmsx::http_downloader());
      return kOk;
    }
    if (*train) {
      lmsx::cmd_train(lmsx::parse_config_file(train_config));
      return kOk;
    }
    if (*eval) {
      lmsx::cmd_eval(eval_params, lmsx::parse_config_file(eval_config));
      return kOk;
    }
    if (*gradcheck) {
      const auto outcome = lmsx::cmd_gradcheck(margins, seeds, tolerance);
      return outcome.all_passed ? kOk : kRuntimeError;
    }
    if (*figure1) {
      lmsx::cmd_figure1(lmsx::parse_config_file(fig_config),
                        fig_seed_set ? std::optional<std::uint64_t>(fig_seed) : std::nullopt);
      return kOk;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidationError;
  } catch (const lmsx::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
