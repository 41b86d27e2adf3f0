#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qkiter/error.h"
#include "qkiter_cli/commands.h"

namespace {

using qkiter::cli::RunArgs;

void add_run_flags(CLI::App* cmd, RunArgs& args) {
  cmd->add_option("--config", args.config, "Experiment config (JSON)")->required();
  cmd->add_option("--out", args.out, "Output directory")->required();
  cmd->add_option("--data", args.data_dir, "Data directory (overrides paths.data_dir)");
  cmd->add_option("--workers", args.workers, "Worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed-override", args.seed_override, "Replace the master seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qkiter: alternating query/key contrastive training on synthetic descriptors"};
  app.require_subcommand(1);

  RunArgs gen_args;
  add_run_flags(app.add_subcommand("gen-data", "Generate training and evaluation data"),
                gen_args);

  qkiter::cli::TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train query and key encoders");
  add_run_flags(train, train_args);
  train->add_option("--mode", train_args.mode, "qk or simclr")
      ->check(CLI::IsMember({"qk", "simclr"}));
  train->add_flag("--resume", train_args.resume, "Continue from <out>/train_state.qkts");
  train->add_option("--max-phases", train_args.max_phases)->group("");

  qkiter::cli::EmbedArgs embed_args;
  std::string role = "query";
  auto* embed = app.add_subcommand("embed", "Write descriptors for a dataset");
  embed->add_option("--checkpoint", embed_args.checkpoint, "Encoder checkpoint")->required();
  embed->add_option("--dataset", embed_args.dataset, "Dataset file")->required();
  embed->add_option("--role", role, "query or key")->check(CLI::IsMember({"query", "key"}));
  embed->add_option("--out", embed_args.out, "Descriptor file")->required();
  embed->add_option("--workers", embed_args.workers)->check(CLI::PositiveNumber);

  qkiter::cli::EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Score descriptor files against ground truth");
  evaluate->add_option("--queries", eval_args.queries, "Query descriptor file")->required();
  evaluate->add_option("--keys", eval_args.keys, "Key descriptor file")->required();
  evaluate->add_option("--ground-truth", eval_args.ground_truth, "Ground-truth CSV")->required();
  evaluate->add_option("--out", eval_args.out, "Metrics JSON (stdout if omitted)");

  RunArgs compare_args;
  add_run_flags(app.add_subcommand("compare", "Run qk and simclr from one seed"), compare_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("gen-data")) {
      qkiter::cli::cmd_gen_data(gen_args);
    } else if (app.got_subcommand("train")) {
      const auto summary = qkiter::cli::cmd_train(train_args);
      std::cout << summary.at("final").dump() << '\n';
    } else if (app.got_subcommand("embed")) {
      embed_args.role = role == "query" ? qkiter::Role::kQuery : qkiter::Role::kKey;
      qkiter::cli::cmd_embed(embed_args);
    } else if (app.got_subcommand("evaluate")) {
      qkiter::cli::cmd_evaluate(eval_args);
    } else if (app.got_subcommand("compare")) {
      std::cout << qkiter::cli::cmd_compare(compare_args).dump(2) << '\n';
    }
  } catch (const qkiter::Error& e) {
    std::cerr << "qkiter: " << e.what() << '\n';
    return qkiter::cli::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "qkiter: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
