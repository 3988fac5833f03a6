#include "hypocoerce/io.hpp"
#include "hypocoerce/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"hypocoerce: hypocoercivity certificates for the relaxation equation"};
  app.require_subcommand(1);
  std::string config;
  std::string out;

  auto add = [&](const char* name, const char* help, bool needs_config) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* opt = sub->add_option("--config", config, "JSON run configuration");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides outputs.dir)");
    return sub;
  };
  CLI::App* gap = add("gap", "stop after the spectral stage", true);
  CLI::App* certify = add("certify", "stop after coercivity verification", true);
  CLI::App* evolve = add("evolve", "full pipeline", true);
  CLI::App* selftest = add("selftest", "invariant suite on small fixed configurations", false);
  CLI::App* sweep = add("sweep", "cartesian sweep over sweep.gamma/beta/nx", true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (selftest->parsed()) {
      const auto checks = hypo::run_selftest(std::cout);
      std::size_t passed = 0;
      for (const auto& c : checks) passed += c.pass ? 1 : 0;
      std::cout << "selftest: " << passed << "/" << checks.size() << " passed\n";
      return passed == checks.size() ? 0 : 3;
    }
    const hypo::RunConfig cfg = hypo::load_config(config);
    if (sweep->parsed()) return hypo::run_sweep(cfg, out, std::cout);
    const hypo::Stage stage = gap->parsed() ? hypo::Stage::gap : certify->parsed() ? hypo::Stage::certify : hypo::Stage::evolve;
    (void)evolve;
    const hypo::RunReport rep = hypo::run(cfg, stage, out, std::cout);
    std::cout << "report: " << (rep.out_dir / "report.json").string() << " (exit " << rep.exit_code() << ")\n";
    return rep.exit_code();
  } catch (const hypo::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
