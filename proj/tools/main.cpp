#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "pmc/error.hpp"

int main(int argc, char** argv) {
  using namespace pmc;
  CLI::App app{"Exterior prescribed mean curvature solver"};
  cli::Options opt;
  std::string mode;
  std::string trace;
  std::string out;
  std::string config;
  app.add_option("--config", config, "JSON run configuration");
  app.add_option("--mode", mode, "check | solve | oracle-compare (overrides the config)");
  app.add_option("--threads", opt.threads, "worker thread cap")->check(CLI::NonNegativeNumber);
  app.add_option("--trace", trace, "line-delimited iteration trace file");
  app.add_option("--out", out, "output directory (overrides the config)");

  cli::OracleOptions oracle;
  CLI::App* table = app.add_subcommand("oracle", "write the radial reference table (r, u(r), u'(r))");
  table->add_option("--dimension", oracle.dimension)->check(CLI::Range(3, 6));
  table->add_option("--inner-radius", oracle.inner_radius);
  table->add_option("--value", oracle.value, "u on the inner sphere");
  table->add_option("--outer-radius", oracle.outer_radius, "Dirichlet radius (default: none)");
  table->add_option("--r-max", oracle.r_max);
  table->add_option("--samples", oracle.samples);
  table->add_option("--out", oracle.out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (table->parsed()) {
      cli::oracle_table(oracle);
      return cli::kExitOk;
    }
    if (config.empty()) {
      std::cerr << "--config is required\n" << app.help();
      return cli::kExitInvalid;
    }
    opt.config = config;
    if (!mode.empty()) opt.mode = parse_run_mode(mode);
    if (!trace.empty()) opt.trace = trace;
    if (!out.empty()) opt.out = out;
    if (const auto seed = cli::seed_from_environment()) opt.seed = *seed;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitInvalid;
  }
  return cli::run(opt, std::cerr).exit_code;
}
