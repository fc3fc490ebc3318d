#pragma once

// Run configuration, the design / validate / sweep / constants pipelines and
// their CSV/JSON outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "texplore/design.hpp"

namespace texplore {

struct RunConfig {
  std::string preset;  // "" or "paper_example"
  SystemModel sys;     // true system used for simulation
  PriorSet prior;
  DesignSpec spec;
  NoiseKind noise = NoiseKind::gaussian;
  int replicas = 200;
  std::uint64_t seed = 0;
};

/// Largest T accepted by the Monte Carlo validation.
inline constexpr std::int64_t kMaxSimulationT = 1'000'000;

/// Preset of the three-state benchmark with T = 1e12 and D_des = 1e-4 I.
nlohmann::json paper_example_json();

/// Parses a configuration; keys present in `j` override the preset named by
/// j["preset"] (or by `preset`, when given). Throws ConfigError.
RunConfig load_config(const nlohmann::json& j, const std::string& preset = "");
RunConfig load_config_file(const std::filesystem::path& path, const std::string& preset = "");

/// Replaces T (and the frequency grid) keeping the frequencies.
void set_horizon(RunConfig& cfg, std::int64_t T);

struct ReplicaRecord {
  int replica = 0;
  std::uint64_t seed = 0;
  double goal_value = 0.0;
  bool goal = false;
  bool contained = false;
  double W_sq = 0.0;
  bool noise_event = false;
  bool data_sufficient = false;
  double logdet = 0.0;
  double radius = 0.0;
  double excitation_margin = 0.0;
};

struct LineRecord {
  double omega = 0.0;
  Vector design;           // ubar(omega) from the design
  Vector measured;         // |line amplitude| at omega
  Vector measured_mirror;  // |line amplitude| at 1 - omega
};

struct ValidationReport {
  int replicas = 0;
  double success_rate = 0.0;
  double containment_rate = 0.0;
  double noise_event_rate = 0.0;
  double data_sufficient_rate = 0.0;
  double min_excitation_margin = 0.0;
  double gamma_w = 0.0;
  double theta_bar = 0.0;
  double gamma_e = 0.0;
  std::vector<LineRecord> lines;
  std::vector<ReplicaRecord> runs;
};

/// Rebuilds the final-iteration LMIs from the stored linearization point and
/// constants recomputed from the configuration, then runs the verifier.
VerifyReport reverify_design(const RunConfig& cfg, const nlohmann::json& design);

/// Monte Carlo of synthesize -> simulate -> estimate -> evaluate. Requires
/// T <= kMaxSimulationT and a design that passes reverify_design.
ValidationReport validate_design(const RunConfig& cfg, const nlohmann::json& design, int replicas);

nlohmann::json validation_to_json(const ValidationReport& rep);
void write_validation_runs_csv(std::ostream& os, const ValidationReport& rep);

struct SweepRow {
  std::int64_t T = 0;
  double Ddes_norm = 0.0;
  double gamma_e_sq = 0.0;
  double T_gamma_e_sq = 0.0;
  int iters = 0;
  std::string status;  // certified | infeasible | numerical
};

/// Design-only sweep with D_des = ddes_per_T * T * I at every horizon.
/// Infeasible points are recorded and the sweep continues.
std::vector<SweepRow> run_sweep(const RunConfig& cfg, std::vector<std::int64_t> T_list, double ddes_per_T);

inline constexpr const char* kSweepHeader = "T,Ddes_norm,gamma_e_sq,T_gamma_e_sq,iters,status";
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

nlohmann::json constants_audit(const RunConfig& cfg);

std::string design_summary(const DesignResult& r, const DesignSpec& spec);

/// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Process exit code for an exception escaping a pipeline.
int exit_code_for(const std::exception& e);

}  // namespace texplore
