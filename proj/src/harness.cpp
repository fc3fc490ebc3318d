#include "texplore/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace texplore {

namespace {

const std::set<std::string> kKnownKeys = {
    "preset", "A",          "B",   "sigma_w",  "theta_hat0", "D0",       "T",        "frequencies",
    "D_des",  "eps",        "lambda", "delta", "beta",       "tol",      "max_outer", "noise",
    "replicas", "seed",     "gammaV_samples", "gammaV_margin", "gammaV_shape", "U_tilde0", "gamma_bar0"};

double number(const nlohmann::json& j, const char* key) {
  if (!j.at(key).is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

template <typename T>
T value_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config: '") + key + "' has the wrong type");
  }
}

/// A number means a multiple of the identity; otherwise a nested row list.
Matrix scaled_identity_or_matrix(const nlohmann::json& j, int n, const std::string& what) {
  if (j.is_number()) return j.get<double>() * Matrix::Identity(n, n);
  Matrix M = matrix_from_json(j, what);
  if (M.rows() != n || M.cols() != n) throw ConfigError(what + ": expected " + std::to_string(n) + "x" + std::to_string(n));
  return M;
}

std::int64_t integer_T(const nlohmann::json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (!j.is_number()) throw ConfigError("config: 'T' must be a number");
  const double v = j.get<double>();
  if (!(v >= 1.0) || v > 9.0e18 || std::floor(v) != v) throw ConfigError("config: 'T' must be a positive integer");
  return static_cast<std::int64_t>(v);
}

}  // namespace

nlohmann::json paper_example_json() {
  Matrix A(3, 3);
  A << 0.49, 0.49, 0.0, 0.0, 0.49, 0.49, 0.0, 0.0, 0.49;
  Matrix B(3, 1);
  B << 0.0, 0.0, 0.49;
  const Vector th = ParameterVector::from_matrices(A, B).theta().array() + 4e-4;
  nlohmann::json j;
  j["preset"] = "paper_example";
  j["A"] = matrix_to_json(A);
  j["B"] = matrix_to_json(B);
  j["sigma_w"] = 0.01;
  j["theta_hat0"] = std::vector<double>(th.data(), th.data() + th.size());
  j["D0"] = 1e3;
  j["T"] = static_cast<std::int64_t>(1'000'000'000'000);
  j["frequencies"] = {0.0, 0.1, 0.2, 0.3, 0.4};
  j["D_des"] = 1e-4;
  j["eps"] = 0.5;
  j["lambda"] = 1.0;
  j["delta"] = 0.05;
  return j;
}

RunConfig load_config(const nlohmann::json& user, const std::string& preset) {
  if (!user.is_object()) throw ConfigError("config: top level must be a JSON object");
  for (const auto& [key, _] : user.items())
    if (!kKnownKeys.count(key)) throw ConfigError("config: unknown key '" + key + "'");

  std::string name = preset.empty() ? value_or<std::string>(user, "preset", "") : preset;
  nlohmann::json j = nlohmann::json::object();
  if (!name.empty()) {
    if (name != "paper_example") throw ConfigError("config: unknown preset '" + name + "'");
    j = paper_example_json();
  }
  for (const auto& [key, v] : user.items()) j[key] = v;
  j["preset"] = name;

  RunConfig cfg;
  cfg.preset = name;
  try {
    for (const char* key : {"A", "B", "sigma_w", "theta_hat0", "D0", "T", "frequencies", "D_des"})
      if (!j.contains(key)) throw ConfigError(std::string("config: missing key '") + key + "'");
    cfg.sys = system_from_json(j);
    require_true_system(cfg.sys);
    const int nx = cfg.sys.nx();
    const int nu = cfg.sys.nu();
    nlohmann::json pj = {{"theta_hat0", j["theta_hat0"]},
                         {"D0", matrix_to_json(scaled_identity_or_matrix(j["D0"], nx + nu, "D0"))}};
    cfg.prior = prior_from_json(pj, nx, nu);

    DesignSpec& s = cfg.spec;
    const auto freqs = value_or<std::vector<double>>(j, "frequencies", {});
    s.grid = FrequencyGrid(integer_T(j["T"]), freqs);
    s.D_des = scaled_identity_or_matrix(j["D_des"], nx + nu, "D_des");
    if (j.contains("eps")) s.eps = number(j, "eps");
    if (j.contains("lambda")) s.lambda = number(j, "lambda");
    if (j.contains("delta")) s.delta = number(j, "delta");
    if (j.contains("tol")) s.tol = number(j, "tol");
    s.max_outer = value_or<int>(j, "max_outer", s.max_outer);
    if (j.contains("beta")) s.bounds.beta = number(j, "beta");
    s.bounds.gammaV_samples = value_or<int>(j, "gammaV_samples", s.bounds.gammaV_samples);
    if (j.contains("gammaV_margin")) s.bounds.gammaV_margin = number(j, "gammaV_margin");
    s.bounds.gammaV_shape = parse_gammaV_shape(value_or<std::string>(j, "gammaV_shape", "nominal"));
    if (j.contains("gamma_bar0")) s.gamma_bar0 = number(j, "gamma_bar0");
    if (j.contains("U_tilde0")) s.U_tilde0 = matrix_from_json(j["U_tilde0"], "U_tilde0");
    cfg.noise = parse_noise_kind(value_or<std::string>(j, "noise", "gaussian"));
    cfg.replicas = value_or<int>(j, "replicas", cfg.replicas);
    cfg.seed = value_or<std::uint64_t>(j, "seed", cfg.seed);
    s.bounds.seed = cfg.seed;
    if (cfg.replicas < 1) throw ConfigError("config: replicas must be >= 1");
    if (!(s.bounds.beta > 0.0 && s.bounds.beta < 1.0)) throw ConfigError("config: beta must lie in (0, 1)");
    if (s.bounds.gammaV_samples < 1) throw ConfigError("config: gammaV_samples must be >= 1");
    if (!(s.bounds.gammaV_margin >= 0.0)) throw ConfigError("config: gammaV_margin must be nonnegative");
    s.validate(nu);
  } catch (const ConfigError&) {
    throw;
  } catch (const StabilityError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const GridError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const SymmetryError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path, const std::string& preset) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: malformed JSON in '" + path.string() + "': " + e.what());
  }
  return load_config(j, preset);
}

void set_horizon(RunConfig& cfg, std::int64_t T) {
  try {
    cfg.spec.grid = FrequencyGrid(T, cfg.spec.grid.omegas());
  } catch (const GridError& e) {
    throw ConfigError(std::string("horizon: ") + e.what());
  }
}

namespace {

Vector json_vector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct StoredDesign {
  Matrix amplitudes;  // n_u x L
  double gamma_e = 0.0;
  double tau = 0.0;
  Matrix U_tilde;
  double gamma_bar = 0.0;
};

StoredDesign read_design(const RunConfig& cfg, const nlohmann::json& d) {
  const int nu = cfg.sys.nu();
  const int L = cfg.spec.grid.L();
  StoredDesign s;
  try {
    if (d.at("T").get<std::int64_t>() != cfg.spec.grid.T()) throw ConfigError("design file: T differs from config");
    const auto freqs = d.at("frequencies").get<std::vector<double>>();
    if (static_cast<int>(freqs.size()) != L) throw ConfigError("design file: frequency count differs from config");
    for (int i = 0; i < L; ++i)
      if (grid_bin(freqs[static_cast<std::size_t>(i)], cfg.spec.grid.T()) != cfg.spec.grid.bins()[static_cast<std::size_t>(i)])
        throw ConfigError("design file: frequencies differ from config");
    s.gamma_e = d.at("gamma_e").get<double>();
    s.tau = d.at("tau").get<double>();
    s.amplitudes.resize(nu, L);
    const auto& amps = d.at("amplitudes");
    if (static_cast<int>(amps.size()) != L) throw ConfigError("design file: amplitude count differs from config");
    for (int i = 0; i < L; ++i) {
      const Vector a = json_vector(amps[static_cast<std::size_t>(i)].at("amplitude"));
      if (a.size() != nu) throw ConfigError("design file: amplitude length differs from n_u");
      s.amplitudes.col(i) = a;
    }
    const auto& fl = d.at("final_lmi");
    s.gamma_bar = fl.at("gamma_bar").get<double>();
    const auto& ut = fl.at("U_tilde");
    s.U_tilde.resize(nu, static_cast<Eigen::Index>(ut.size()));
    for (std::size_t i = 0; i < ut.size(); ++i) {
      const Vector a = json_vector(ut[i]);
      if (a.size() != nu) throw ConfigError("design file: U_tilde length differs from n_u");
      s.U_tilde.col(static_cast<Eigen::Index>(i)) = a;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("design file: ") + e.what());
  }
  return s;
}

}  // namespace

VerifyReport reverify_design(const RunConfig& cfg, const nlohmann::json& design) {
  const StoredDesign s = read_design(cfg, design);
  if (cfg.spec.D_des.isZero(0.0)) {
    VerifyReport trivial;
    trivial.feasible = true;
    return trivial;
  }
  if (s.U_tilde.cols() != cfg.spec.grid.L() || !(s.gamma_bar > 0.0))
    throw ConfigError("design file: missing final linearization point");
  const BoundConstants consts = compute_bound_constants(cfg.prior, cfg.spec.grid, cfg.sys.sigma_w, cfg.spec.lambda,
                                                        cfg.spec.delta, cfg.spec.bounds);
  const CMatrix V_hat = transfer_samples(cfg.prior.theta_hat0.A(), cfg.prior.theta_hat0.B(), cfg.spec.grid).V;
  const ConicProgram prog = build_exploration_program(consts, cfg.spec, V_hat, s.U_tilde, s.gamma_bar);
  const VarLayout lay{cfg.spec.grid.L(), cfg.sys.nu()};
  Vector x(lay.n_vars());
  x(lay.gamma()) = s.gamma_e;
  x.segment(1, static_cast<Eigen::Index>(lay.L) * lay.nu) = Eigen::Map<const Vector>(s.amplitudes.data(), s.amplitudes.size());
  x(lay.tau()) = s.tau;
  return verify(prog, x, cfg.spec.solver.feas_tol);
}

ValidationReport validate_design(const RunConfig& cfg, const nlohmann::json& design, int replicas) {
  const std::int64_t T64 = cfg.spec.grid.T();
  if (T64 > kMaxSimulationT)
    throw ResourceError("validate: T = " + std::to_string(T64) + " exceeds the simulation limit of " +
                        std::to_string(kMaxSimulationT) + "; horizons of this size are design-only");
  if (replicas < 1) throw ConfigError("validate: replicas must be >= 1");
  const VerifyReport rv = reverify_design(cfg, design);
  if (!rv.feasible) throw NumericError("validate: design fails re-verification against the configuration");

  const StoredDesign sd = read_design(cfg, design);
  const InputSpectrum spec(cfg.spec.grid, sd.amplitudes);
  const Matrix U = synth_multisine(spec);
  const int T = static_cast<int>(T64);
  const ParameterVector theta_tr = ParameterVector::from_matrices(cfg.sys.A, cfg.sys.B);
  const double theta_bar = theta_bound(cfg.prior);
  const double gw = disturbance_gamma_w(cfg.sys.sigma_w, static_cast<double>(T), cfg.sys.nx(), cfg.spec.delta);

  ValidationReport rep;
  rep.replicas = replicas;
  rep.gamma_w = gw;
  rep.theta_bar = theta_bar;
  rep.gamma_e = sd.gamma_e;
  for (int i = 0; i < spec.L(); ++i) {
    const std::int64_t bin = cfg.spec.grid.bins()[static_cast<std::size_t>(i)];
    LineRecord lr;
    lr.omega = cfg.spec.grid.omega(i);
    lr.design = sd.amplitudes.col(i);
    lr.measured = spectral_amplitude_bin(U, bin).cwiseAbs();
    lr.measured_mirror = spectral_amplitude_bin(U, (T64 - bin) % T64).cwiseAbs();
    rep.lines.push_back(std::move(lr));
  }

  int n_goal = 0, n_cont = 0, n_noise = 0, n_suff = 0;
  rep.min_excitation_margin = std::numeric_limits<double>::infinity();
  for (int r = 0; r < replicas; ++r) {
    ReplicaRecord rec;
    rec.replica = r;
    rec.seed = mix_seed(cfg.seed, 0x1000 + static_cast<std::uint64_t>(r));
    const Trajectory traj = simulate(cfg.sys, U, cfg.noise, rec.seed);
    const RegressorMatrix phi = build_regressors(traj);
    const RlsResult est = rls_estimate(phi, traj.X.bottomRows(T), cfg.spec.lambda, cfg.sys.nu());
    rec.goal_value = goal_value(est.theta_hat, theta_tr, cfg.spec.D_des);
    rec.goal = rec.goal_value <= 1.0;
    const ConfidenceEllipsoid ell = confidence_ellipsoid(est, cfg.sys.sigma_w, cfg.spec.delta, theta_bar);
    rec.contained = ellipsoid_contains(ell, theta_tr);
    rec.W_sq = traj.W.squaredNorm();
    rec.noise_event = rec.W_sq <= gw;
    const double R = radius_R(est.excitation, cfg.sys.sigma_w, cfg.spec.delta, cfg.sys.nx());
    rec.data_sufficient = data_sufficient(phi, cfg.spec.lambda, theta_bar, R, cfg.spec.D_des);
    rec.logdet = est.excitation.logdet;
    rec.radius = ell.radius;
    const SpectralDecomposition dec = decompose_spectrum(cfg.sys, traj, cfg.spec.grid);
    rec.excitation_margin = excitation_lower_bound_check(est.excitation.D_T / T, dec, cfg.spec.eps);
    rep.min_excitation_margin = std::min(rep.min_excitation_margin, rec.excitation_margin);
    n_goal += rec.goal;
    n_cont += rec.contained;
    n_noise += rec.noise_event;
    n_suff += rec.data_sufficient;
    rep.runs.push_back(rec);
  }
  rep.success_rate = static_cast<double>(n_goal) / replicas;
  rep.containment_rate = static_cast<double>(n_cont) / replicas;
  rep.noise_event_rate = static_cast<double>(n_noise) / replicas;
  rep.data_sufficient_rate = static_cast<double>(n_suff) / replicas;
  return rep;
}

nlohmann::json validation_to_json(const ValidationReport& rep) {
  using nlohmann::json;
  json j;
  j["schema_version"] = 1;
  j["replicas"] = rep.replicas;
  j["success_rate"] = rep.success_rate;
  j["containment_rate"] = rep.containment_rate;
  j["noise_event_rate"] = rep.noise_event_rate;
  j["data_sufficient_rate"] = rep.data_sufficient_rate;
  j["min_excitation_margin"] = rep.min_excitation_margin;
  j["gamma_w"] = rep.gamma_w;
  j["theta_bar"] = rep.theta_bar;
  j["gamma_e"] = rep.gamma_e;
  const auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  j["lines"] = json::array();
  for (const LineRecord& l : rep.lines)
    j["lines"].push_back({{"omega", l.omega},
                          {"design", vec(l.design)},
                          {"measured", vec(l.measured)},
                          {"measured_mirror", vec(l.measured_mirror)}});
  j["runs"] = json::array();
  for (const ReplicaRecord& r : rep.runs)
    j["runs"].push_back({{"replica", r.replica},
                         {"seed", r.seed},
                         {"goal_value", r.goal_value},
                         {"goal", r.goal},
                         {"contained", r.contained},
                         {"W_sq", r.W_sq},
                         {"noise_event", r.noise_event},
                         {"data_sufficient", r.data_sufficient},
                         {"logdet", r.logdet},
                         {"radius", r.radius},
                         {"excitation_margin", r.excitation_margin}});
  return j;
}

void write_validation_runs_csv(std::ostream& os, const ValidationReport& rep) {
  os << "# schema_version: 1\n";
  os << "replica,seed,goal_value,goal,contained,W_sq,noise_event,data_sufficient,logdet,radius,excitation_margin\n";
  os << std::setprecision(17);
  for (const ReplicaRecord& r : rep.runs)
    os << r.replica << ',' << r.seed << ',' << r.goal_value << ',' << r.goal << ',' << r.contained << ',' << r.W_sq
       << ',' << r.noise_event << ',' << r.data_sufficient << ',' << r.logdet << ',' << r.radius << ','
       << r.excitation_margin << '\n';
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, std::vector<std::int64_t> T_list, double ddes_per_T) {
  if (T_list.empty()) throw ConfigError("sweep: empty T list");
  if (!(ddes_per_T > 0.0)) throw ConfigError("sweep: D_des per T must be positive");
  std::sort(T_list.begin(), T_list.end());
  T_list.erase(std::unique(T_list.begin(), T_list.end()), T_list.end());
  std::vector<SweepRow> rows;
  for (std::int64_t T : T_list) {
    RunConfig c = cfg;
    set_horizon(c, T);
    const int nphi = c.sys.nphi();
    c.spec.D_des = ddes_per_T * static_cast<double>(T) * Matrix::Identity(nphi, nphi);
    SweepRow row;
    row.T = T;
    row.Ddes_norm = ddes_per_T * static_cast<double>(T);
    try {
      const DesignResult r = design_exploration(c.spec, c.prior, c.sys.sigma_w);
      row.gamma_e_sq = r.gamma_e * r.gamma_e;
      row.T_gamma_e_sq = static_cast<double>(T) * row.gamma_e_sq;
      row.iters = static_cast<int>(r.iterations.size());
      row.status = r.certified ? "certified" : "numerical";
    } catch (const InfeasibleError&) {
      row.gamma_e_sq = row.T_gamma_e_sq = std::numeric_limits<double>::quiet_NaN();
      row.status = "infeasible";
    } catch (const NumericError&) {
      row.gamma_e_sq = row.T_gamma_e_sq = std::numeric_limits<double>::quiet_NaN();
      row.status = "numerical";
    }
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "# schema_version: 1\n" << kSweepHeader << '\n';
  os << std::setprecision(17);
  for (const SweepRow& r : rows) {
    os << r.T << ',' << r.Ddes_norm << ',';
    if (std::isnan(r.gamma_e_sq))
      os << "nan,nan";
    else
      os << r.gamma_e_sq << ',' << r.T_gamma_e_sq;
    os << ',' << r.iters << ',' << r.status << '\n';
  }
}

nlohmann::json constants_audit(const RunConfig& cfg) {
  const BoundConstants c = compute_bound_constants(cfg.prior, cfg.spec.grid, cfg.sys.sigma_w, cfg.spec.lambda,
                                                   cfg.spec.delta, cfg.spec.bounds);
  nlohmann::json j = constants_to_json(c);
  j["provenance"] = {{"analytic", {"theta_bar", "C1", "C2", "gamma_w", "C3_at_zero"}},
                     {"scenario", {"Bbar", "gamma_G", "gamma_Aw", "gamma_Au", "envelope"}},
                     {"sampled", {"Gamma_V_tilde"}}};
  j["beta"] = cfg.spec.bounds.beta;
  j["seed"] = cfg.seed;
  return j;
}

std::string design_summary(const DesignResult& r, const DesignSpec& spec) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "exploration design\n";
  os << "  T            " << spec.grid.T() << "\n";
  os << "  frequencies  " << spec.grid.L() << "\n";
  os << "  certified    " << (r.certified ? "yes" : "no") << "\n";
  os << "  converged    " << (r.converged ? "yes" : "no") << " after " << r.iterations.size() << " iterations\n";
  os << "  gamma_e      " << r.gamma_e << "\n";
  os << "  gamma_e^2    " << r.gamma_e * r.gamma_e << "\n";
  os << "  tau          " << r.tau << "\n";
  if (!r.note.empty()) os << "  note         " << r.note << "\n";
  os << "  amplitudes\n";
  for (int i = 0; i < r.U_e.L(); ++i) {
    os << "    omega = " << spec.grid.omega(i) << ":";
    for (Eigen::Index c = 0; c < r.U_e.amplitudes.rows(); ++c) os << ' ' << r.U_e.amplitudes(c, i);
    os << "\n";
  }
  os << "  gamma_e trace\n";
  for (std::size_t k = 0; k < r.iterations.size(); ++k)
    os << "    " << k + 1 << ": " << r.iterations[k].gamma_e << " (" << to_string(r.iterations[k].status) << ")\n";
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw ResourceError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ResourceError*>(&e) ||
      dynamic_cast<const GridError*>(&e) || dynamic_cast<const nlohmann::json::exception*>(&e))
    return 1;
  if (dynamic_cast<const InfeasibleError*>(&e)) return 2;
  return 3;
}

}  // namespace texplore
