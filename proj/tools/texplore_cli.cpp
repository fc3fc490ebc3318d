#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "texplore/harness.hpp"

namespace fs = std::filesystem;
using namespace texplore;

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::string out = ".";
  std::int64_t seed = -1;
};

RunConfig load(const Common& c) {
  RunConfig cfg;
  if (c.config.empty()) {
    if (c.preset.empty()) throw ConfigError("either --config or --preset is required");
    cfg = load_config(nlohmann::json::object(), c.preset);
  } else {
    cfg = load_config_file(c.config, c.preset);
  }
  if (c.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(c.seed);
    cfg.spec.bounds.seed = cfg.seed;
  }
  return cfg;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

int cmd_design(const Common& c) {
  const RunConfig cfg = load(c);
  DesignResult r;
  try {
    r = design_exploration(cfg.spec, cfg.prior, cfg.sys.sigma_w);
  } catch (const InfeasibleError& e) {
    std::cerr << "design infeasible: " << e.what() << "\n";
    return 2;
  }
  const fs::path out(c.out);
  write_file_atomic(out / "design.json", dump(design_to_json(r, cfg.spec)));
  const std::string summary = design_summary(r, cfg.spec);
  write_file_atomic(out / "design_summary.txt", summary);
  std::cout << summary;
  return r.certified ? 0 : 3;
}

int cmd_validate(const Common& c, const std::string& design_path, int replicas) {
  const RunConfig cfg = load(c);
  std::ifstream in(design_path);
  if (!in) throw ConfigError("cannot open design file '" + design_path + "'");
  nlohmann::json design;
  try {
    design = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed design file: ") + e.what());
  }
  const ValidationReport rep = validate_design(cfg, design, replicas > 0 ? replicas : cfg.replicas);
  const fs::path out(c.out);
  write_file_atomic(out / "validation.json", dump(validation_to_json(rep)));
  std::ostringstream csv;
  write_validation_runs_csv(csv, rep);
  write_file_atomic(out / "validation_runs.csv", csv.str());
  std::cout << "replicas          " << rep.replicas << "\n"
            << "success rate      " << rep.success_rate << "\n"
            << "containment rate  " << rep.containment_rate << "\n"
            << "noise event rate  " << rep.noise_event_rate << "\n"
            << "sufficiency rate  " << rep.data_sufficient_rate << "\n";
  return 0;
}

std::vector<std::int64_t> parse_T_list(const std::string& s) {
  std::vector<std::int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(item, &pos);
      if (pos != item.size() || !(v >= 1.0) || v > 9.0e18 || v != static_cast<double>(static_cast<std::int64_t>(v)))
        throw ConfigError("");
      out.push_back(static_cast<std::int64_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("--T-list: '" + item + "' is not a positive integer");
    }
  }
  return out;
}

int cmd_sweep(const Common& c, const std::string& T_list, double ddes_per_T) {
  const RunConfig cfg = load(c);
  const std::vector<SweepRow> rows = run_sweep(cfg, parse_T_list(T_list), ddes_per_T);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  write_file_atomic(fs::path(c.out) / "sweep.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

int cmd_constants(const Common& c) {
  const RunConfig cfg = load(c);
  const std::string text = dump(constants_audit(cfg));
  write_file_atomic(fs::path(c.out) / "constants.json", text);
  std::cout << text;
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON configuration file");
  sub->add_option("--preset", c.preset, "Named preset (paper_example)");
  sub->add_option("--seed", c.seed, "Seed overriding the configuration")->check(CLI::NonNegativeNumber);
  sub->add_option("--out", c.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Targeted exploration input design"};
  app.require_subcommand(1);

  Common design_opts, validate_opts, sweep_opts, constants_opts;
  std::string design_file;
  int replicas = 0;
  std::string T_list = "1e10,1e11,1e12,1e13,1e14,1e15";
  double ddes_per_T = 1e-10;

  CLI::App* design = app.add_subcommand("design", "Run the iterative exploration design");
  add_common(design, design_opts);
  CLI::App* validate = app.add_subcommand("validate", "Monte Carlo validation of a design");
  add_common(validate, validate_opts);
  validate->add_option("--design", design_file, "design.json produced by 'design'")->required();
  validate->add_option("--replicas", replicas, "Number of replicas")->check(CLI::PositiveNumber);
  CLI::App* sweep = app.add_subcommand("sweep", "Design-only sweep over the horizon T");
  add_common(sweep, sweep_opts);
  sweep->add_option("--T-list", T_list, "Comma-separated horizons");
  sweep->add_option("--ddes-per-T", ddes_per_T, "D_des = value * T * I at each horizon");
  CLI::App* constants = app.add_subcommand("constants", "Audit of the bound constants");
  add_common(constants, constants_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (design->parsed()) return cmd_design(design_opts);
    if (validate->parsed()) return cmd_validate(validate_opts, design_file, replicas);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, T_list, ddes_per_T);
    if (constants->parsed()) return cmd_constants(constants_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 1;
}
