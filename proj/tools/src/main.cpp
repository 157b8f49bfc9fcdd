#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "hml/errors.hpp"
#include "hml/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace hml::cli;
  CLI::App app{"H-measure experiments for Maxwell's system"};
  app.require_subcommand(1);

  std::string config, out, format;
  int jobs = 0;
  std::string verify_case;
  std::vector<CLI::App*> subs;
  for (const char* name : {"run", "synthesize", "estimate", "verify", "transport", "report"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment config (JSON)");
    sub->add_option("--out", out, "output directory (overrides output.directory)");
    sub->add_option("--format", format, "field file precision")->check(CLI::IsMember({"f32", "f64"}));
    sub->add_option("--jobs", jobs, "worker threads (default: $HML_JOBS or 1)")->check(CLI::PositiveNumber);
    if (std::string(name) == "verify")
      sub->add_option("--case", verify_case, "support case")->check(CLI::IsMember({"constant", "variable"}));
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  RunOptions options;
  if (!out.empty()) options.out = out;
  if (!format.empty()) options.format = hml::precision_from_string(format);
  if (jobs > 0) {
    options.jobs = jobs;
  } else if (const char* env = std::getenv("HML_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      std::cerr << "error: HML_JOBS must be a positive integer\n";
      return kConfigError;
    }
    options.jobs = static_cast<int>(v);
  }
  if (!verify_case.empty())
    options.verify_case = verify_case == "variable" ? hml::SupportCase::Variable : hml::SupportCase::Constant;

  std::string command;
  for (auto* sub : subs)
    if (sub->parsed()) command = sub->get_name();
  std::optional<std::filesystem::path> config_path;
  if (!config.empty()) config_path = config;
  return execute(command, config_path, options, std::cout, std::cerr);
}
