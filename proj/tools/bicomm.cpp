// Command-line front end: norm estimation, factorization sweeps, off-support
// lower bounds, the regime table and the invariant check suite.

#include <CLI11.hpp>

#include "bicomm/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bicomm: numerical experiments for bi-parameter commutator bounds"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  int n_override = 0;
  double a_override = 0;

  for (const std::string name : {"norms", "factorize", "lowerbound", "table", "check", "paraproducts"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "TOML config file");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("-N", n_override, "override the grid resolution");
    sub->add_option("-A", a_override, "override the reflection scale A");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    bicomm::TomlTable toml =
        config_path.empty() ? bicomm::TomlTable::parse_string("") : bicomm::TomlTable::parse_file(config_path);
    auto cfg = bicomm::ExperimentConfig::from_toml(toml);
    if (seed >= 1) {
      cfg.seed = std::uint64_t(seed);
      cfg.symbol_params.seed = cfg.seed;
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (n_override > 0) {
      if (!bicomm::is_pow2(n_override)) throw std::runtime_error("validation error: field 'resolution' (-N) must be a power of two");
      cfg.n_list = {n_override};
    }
    if (a_override > 0) {
      if (a_override < 3) throw std::runtime_error("validation error: field 'A' must be >= 3");
      cfg.A = a_override;
    }
    return bicomm::run_command(app.get_subcommands().front()->get_name(), cfg);
  } catch (const std::exception& e) {
    std::string what = e.what();
    bicomm::json err{{"error", what}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    bool validation = what.find("validation error") != std::string::npos ||
                      what.find("parse error") != std::string::npos;
    return validation ? 1 : 2;
  }
}
