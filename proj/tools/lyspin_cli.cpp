#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lyspin/cli.hpp"

int main(int argc, char** argv) {
  lyspin::cli::Options opt;
  std::string out_dir = ".";
  std::string format = "csv";

  CLI::App app{"Lee-Yang / finite-volume spin system toolkit"};
  app.add_option("command", opt.command, "Subcommand; falls back to the config key 'command'")
      ->check(CLI::IsMember(lyspin::cli::command_names()));
  app.add_option("--config", opt.config_path, "YAML configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", opt.seed, "Seed for random instance suites");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    lyspin::cli::write_error(std::cerr, "ConfigParse", e.what(), lyspin::cli::kValidationError);
    return lyspin::cli::kValidationError;
  }
  opt.out_dir = out_dir;
  opt.format = format == "json" ? lyspin::Format::Json : lyspin::Format::Csv;
  return lyspin::cli::run(opt);
}
