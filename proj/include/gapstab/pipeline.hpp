#ifndef GAPSTAB_PIPELINE_HPP
#define GAPSTAB_PIPELINE_HPP

#include <json.hpp>

#include "gapstab/stability.hpp"

namespace gapstab {

using json = nlohmann::json;

/// Declarative experiment description. Parsed from a single JSON document;
/// unknown keys are rejected, missing ones take the defaults listed in the
/// README schema table.
struct ExperimentConfig {
  json raw;  // canonical form (defaults filled), used for hashing

  std::uint64_t seed = 1;

  std::string lattice_type = "chain";
  std::vector<int> dims{6};
  std::vector<bool> periodic;

  std::string model_name = "paramagnet";
  double ising_lambda = 2.0;
  int custom_site_dim = 2;
  int custom_range = 0;
  std::vector<std::pair<Site, std::string>> custom_terms;

  std::string pert_kind = "onsite_field";  // onsite_field | none | custom
  std::string pert_op = "sz";
  double pert_coefficient = 1.0;
  DecayMeta pert_decay{1.0, 1.0, 1.0};
  std::vector<std::tuple<Site, int, std::string>> pert_terms;

  bool lambda_all = true;
  std::vector<Site> lambda_sites;

  double gamma = 0.5;
  std::string weight_profile = "bump";
  std::vector<double> weight_table;

  std::string f_family = "stretched_exp";
  double f_zeta = 2.0, f_a = 0.5, f_theta = 1.0;
  std::vector<double> f_values;

  bool ltqo_enabled = true;
  int ltqo_k_max = 1, ltqo_m_max = 3;
  std::vector<Site> ltqo_centers;
  ProbeSpec probes;

  int partition_n_max = -1;  // auto

  std::optional<double> gamma1;
  std::optional<double> alpha;

  bool stability_enabled = true;
  double s_max = 0.2;
  int sweep_points = 11;
  double s_cal = -1.0;  // auto: first nonzero flow node
  double gamma_request = 0.5;

  SolverOptions solver;
  long long max_iterative_dim = 65536;

  // tolerances, all defaults pinned here and listed in the README
  struct Tol {
    double hermiticity = 1e-12;
    double nesting = 1e-10;
    double ff_min_spec = 1e-10;
    double ltqo_zero = 1e-12;
    double fourier_identity = 1e-12;
    double transport = 1e-6;
    double flow_node = 1e-8;
    double recon_phi1 = 1e-7;
    double recon_phi2 = 1e-6;
    double annihilation = 1e-8;
    double omega_w = 1e-8;
    double form_bound = 1e-8;
    double sweep_slack = 1e-8;
  } tol;

  std::vector<std::vector<int>> drift_dims;

  static ExperimentConfig from_json(const json& j);
  static ExperimentConfig from_file(const std::string& path);
  std::uint64_t config_hash() const;
};

struct StabilityReport {
  json j;
  bool ok = true;  // no stage failed
};

/// Deterministic given (config, seed): certification stages, flow and
/// decomposition, beta, verdict. Stage failures mark downstream stages
/// skipped; the report is always produced.
StabilityReport run_pipeline(const ExperimentConfig& cfg);

/// Certification-only slice of the pipeline (assumption checks, no flow).
StabilityReport run_certify(const ExperimentConfig& cfg);

enum class EmitFormat { Json, CsvBundle };

/// Writes report.json (Json) or the per-series CSV tables (CsvBundle) into
/// the output directory. Byte-stable for identical reports.
std::vector<std::string> emit(const StabilityReport& report, const std::string& out_dir,
                              EmitFormat format);

}  // namespace gapstab

#endif
