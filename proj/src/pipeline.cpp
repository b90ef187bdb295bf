#include "gapstab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

namespace gapstab {

namespace {

json tolerances_json(const ExperimentConfig::Tol& t) {
  return json{{"hermiticity", t.hermiticity},
              {"nesting", t.nesting},
              {"ff_min_spec", t.ff_min_spec},
              {"ltqo_zero", t.ltqo_zero},
              {"fourier_identity", t.fourier_identity},
              {"transport", t.transport},
              {"flow_node", t.flow_node},
              {"recon_phi1", t.recon_phi1},
              {"recon_phi2", t.recon_phi2},
              {"annihilation", t.annihilation},
              {"omega_w", t.omega_w},
              {"form_bound", t.form_bound},
              {"sweep_slack", t.sweep_slack}};
}

template <typename T>
T get_or(const json& j, const std::string& key, T def) {
  if (!j.contains(key)) return def;
  return j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  c.seed = get_or<std::uint64_t>(j, "seed", 1);

  if (j.contains("lattice")) {
    const auto& l = j.at("lattice");
    c.lattice_type = get_or<std::string>(l, "type", "chain");
    c.dims = get_or<std::vector<int>>(l, "dims", {6});
    if (l.contains("periodic")) c.periodic = l.at("periodic").get<std::vector<bool>>();
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    c.model_name = get_or<std::string>(m, "name", "paramagnet");
    c.ising_lambda = get_or<double>(m, "lambda_deform", 2.0);
    c.custom_site_dim = get_or<int>(m, "site_dim", 2);
    c.custom_range = get_or<int>(m, "range", 0);
    if (m.contains("terms"))
      for (const auto& t : m.at("terms"))
        c.custom_terms.emplace_back(t.at("x").get<Site>(), t.at("file").get<std::string>());
  }
  if (j.contains("perturbation")) {
    const auto& p = j.at("perturbation");
    c.pert_kind = get_or<std::string>(p, "kind", "onsite_field");
    c.pert_op = get_or<std::string>(p, "op", "sz");
    c.pert_coefficient = get_or<double>(p, "coefficient", 1.0);
    if (p.contains("decay")) {
      const auto& d = p.at("decay");
      c.pert_decay.strength = get_or<double>(d, "strength", 1.0);
      c.pert_decay.a = get_or<double>(d, "a", 1.0);
      c.pert_decay.theta = get_or<double>(d, "theta", 1.0);
    }
    if (p.contains("terms"))
      for (const auto& t : p.at("terms"))
        c.pert_terms.emplace_back(t.at("x").get<Site>(), t.at("n").get<int>(),
                                  t.at("file").get<std::string>());
  }
  if (j.contains("lambda")) {
    if (j.at("lambda").is_string()) {
      c.lambda_all = j.at("lambda").get<std::string>() == "all";
    } else {
      c.lambda_all = false;
      c.lambda_sites = j.at("lambda").get<std::vector<Site>>();
    }
  }
  if (j.contains("weight")) {
    const auto& w = j.at("weight");
    c.gamma = get_or<double>(w, "gamma", 0.5);
    c.weight_profile = get_or<std::string>(w, "profile", "bump");
    if (w.contains("table")) c.weight_table = w.at("table").get<std::vector<double>>();
  }
  if (j.contains("f_function")) {
    const auto& f = j.at("f_function");
    c.f_family = get_or<std::string>(f, "family", "stretched_exp");
    c.f_zeta = get_or<double>(f, "zeta", 2.0);
    c.f_a = get_or<double>(f, "a", 0.5);
    c.f_theta = get_or<double>(f, "theta", 1.0);
    if (f.contains("values")) c.f_values = f.at("values").get<std::vector<double>>();
  }
  if (j.contains("ltqo")) {
    const auto& l = j.at("ltqo");
    c.ltqo_enabled = get_or<bool>(l, "enabled", true);
    c.ltqo_k_max = get_or<int>(l, "k_max", 1);
    c.ltqo_m_max = get_or<int>(l, "m_max", 3);
    if (l.contains("centers")) c.ltqo_centers = l.at("centers").get<std::vector<Site>>();
    if (l.contains("probes")) {
      const auto& p = l.at("probes");
      c.probes.full_basis = get_or<std::string>(p, "basis", "full") == "full";
      c.probes.random_samples = get_or<int>(p, "samples", 64);
      c.probes.basis_cap = get_or<long long>(p, "cap", 4096);
      c.probes.seed = get_or<std::uint64_t>(p, "seed", 0x9d0be5);
    }
  }
  if (j.contains("partition")) c.partition_n_max = get_or<int>(j.at("partition"), "n_max", -1);
  if (j.contains("local_gaps")) {
    const auto& g = j.at("local_gaps");
    if (g.contains("gamma1") && !g.at("gamma1").is_null()) c.gamma1 = g.at("gamma1").get<double>();
    if (g.contains("alpha") && !g.at("alpha").is_null()) c.alpha = g.at("alpha").get<double>();
  }
  if (j.contains("stability")) {
    const auto& s = j.at("stability");
    c.stability_enabled = get_or<bool>(s, "enabled", true);
    c.s_max = get_or<double>(s, "s_max", 0.2);
    c.sweep_points = get_or<int>(s, "sweep_points", 11);
    c.s_cal = get_or<double>(s, "calibration_s", -1.0);
    c.gamma_request = get_or<double>(s, "gamma_request", 0.5);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    c.solver.max_dense_dim = get_or<long long>(s, "max_dense_dim", 4096);
    c.solver.dense_kernel_dim = get_or<long long>(s, "dense_kernel_dim", 1024);
    c.solver.lanczos_tol = get_or<double>(s, "lanczos_tol", 1e-11);
    c.solver.lanczos_max_iter = get_or<int>(s, "lanczos_max_iter", 600);
    c.max_iterative_dim = get_or<long long>(s, "max_iterative_dim", 65536);
  }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    auto& tt = c.tol;
    tt.hermiticity = get_or<double>(t, "hermiticity", tt.hermiticity);
    tt.nesting = get_or<double>(t, "nesting", tt.nesting);
    tt.ff_min_spec = get_or<double>(t, "ff_min_spec", tt.ff_min_spec);
    tt.ltqo_zero = get_or<double>(t, "ltqo_zero", tt.ltqo_zero);
    tt.fourier_identity = get_or<double>(t, "fourier_identity", tt.fourier_identity);
    tt.transport = get_or<double>(t, "transport", tt.transport);
    tt.flow_node = get_or<double>(t, "flow_node", tt.flow_node);
    tt.recon_phi1 = get_or<double>(t, "recon_phi1", tt.recon_phi1);
    tt.recon_phi2 = get_or<double>(t, "recon_phi2", tt.recon_phi2);
    tt.annihilation = get_or<double>(t, "annihilation", tt.annihilation);
    tt.omega_w = get_or<double>(t, "omega_w", tt.omega_w);
    tt.form_bound = get_or<double>(t, "form_bound", tt.form_bound);
    tt.sweep_slack = get_or<double>(t, "sweep_slack", tt.sweep_slack);
  }
  if (j.contains("report") && j.at("report").contains("drift_dims"))
    c.drift_dims = j.at("report").at("drift_dims").get<std::vector<std::vector<int>>>();

  c.raw = j;
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  json j = json::parse(f);
  return from_json(j);
}

std::uint64_t ExperimentConfig::config_hash() const { return fnv1a(raw.dump()); }

namespace {

std::shared_ptr<const LatticeGraph> build_graph(const ExperimentConfig& c) {
  if (c.lattice_type == "chain") {
    if (c.dims.size() != 1) throw domain_error("config: chain needs one dimension");
    return std::make_shared<LatticeGraph>(LatticeGraph::chain(c.dims[0]));
  }
  if (c.lattice_type == "torus")
    return std::make_shared<LatticeGraph>(LatticeGraph::torus(c.dims));
  if (c.lattice_type == "box") return std::make_shared<LatticeGraph>(LatticeGraph::box(c.dims));
  if (c.lattice_type == "zv") {
    std::vector<bool> per = c.periodic;
    if (per.empty()) per.assign(c.dims.size(), false);
    return std::make_shared<LatticeGraph>(LatticeGraph::zv(c.dims, per));
  }
  throw domain_error("config: unknown lattice type " + c.lattice_type);
}

FrustrationFreeModel build_model(const ExperimentConfig& c,
                                 std::shared_ptr<const LatticeGraph> g) {
  if (c.model_name == "custom") {
    auto amb = std::make_shared<AmbientVolume>(
        g, g->all_sites(), c.custom_site_dim,
        std::max(c.solver.max_dense_dim, c.max_iterative_dim));
    return custom_model(amb, c.custom_terms, c.custom_range);
  }
  ZooParams p;
  p.lambda = c.ising_lambda;
  p.dim_cap = std::max(c.solver.max_dense_dim, c.max_iterative_dim);
  FrustrationFreeModel m = model_zoo(c.model_name, std::move(g), p);
  m.solver() = c.solver;
  return m;
}

AnchoredInteraction build_perturbation(const ExperimentConfig& c, const FrustrationFreeModel& m,
                                       const Region& lambda) {
  AnchoredInteraction phi(m.range());
  if (c.pert_kind == "none") return phi;
  if (c.pert_kind == "onsite_field") {
    for (Site x : lambda.sites) {
      int d = m.ambient()->site_dim(x);
      Matrix op = c.pert_coefficient * site_operator(c.pert_op, d);
      phi.add_term(x, m.range(), LocalOperator(m.ambient(), Region({x}), op));
    }
    double needed = std::abs(c.pert_coefficient) *
                    std::exp(c.pert_decay.a * std::pow(double(m.range()), c.pert_decay.theta));
    phi.set_decay(
        {std::max(c.pert_decay.strength, needed), c.pert_decay.a, c.pert_decay.theta});
    return phi;
  }
  if (c.pert_kind == "custom") {
    for (const auto& [x, n, file] : c.pert_terms) phi.add_term(x, n, load_operator(file, m.ambient()));
    phi.set_decay(c.pert_decay);
    return phi;
  }
  throw domain_error("config: unknown perturbation kind " + c.pert_kind);
}

json region_json(const Region& r) { return json(r.sites); }

struct Stages {
  json status = json::object();
  bool ok = true;
  void done(const std::string& name) { status[name] = "done"; }
  void failed(const std::string& name, const std::string& why) {
    status[name] = "failed: " + why;
    ok = false;
  }
  void skipped(const std::string& name, const std::string& why) {
    status[name] = "skipped: " + why;
  }
  bool is_done(const std::string& name) const {
    return status.contains(name) && status[name] == "done";
  }
};

json invariant_row(const std::string& name, double residual, double tolv) {
  return json{
      {"name", name}, {"residual", residual}, {"tolerance", tolv}, {"pass", residual <= tolv}};
}

StabilityReport run_impl(const ExperimentConfig& cfg, bool certify_only) {
  StabilityReport rep;
  Stages stages;
  json& out = rep.j;
  json invariants = json::array();

  out["provenance"] = {{"tool", "gapstab"},
                       {"version", "1.0.0"},
                       {"seed", cfg.seed},
                       {"config_hash", cfg.config_hash()},
                       {"config", cfg.raw}};
  out["tolerances"] = tolerances_json(cfg.tol);

  std::shared_ptr<const LatticeGraph> graph;
  std::optional<FrustrationFreeModel> model;
  SeparatingPartitionFamily family;
  LocalGapReport gaps;
  std::optional<LtqoEstimate> ltqo;
  bool kernel_is_one = false;
  double gamma0 = 0.0;

  // lattice
  try {
    graph = build_graph(cfg);
    json lj;
    lj["sites"] = graph->num_sites();
    lj["nu"] = graph->nu();
    lj["kappa"] = graph->kappa();
    lj["diameter"] = graph->diameter();
    if (graph->num_sites() <= 512) {
      auto mc = graph->certify_metric();
      lj["metric"] = {{"identity", mc.identity},
                      {"symmetric", mc.symmetric},
                      {"triangle", mc.triangle},
                      {"pass", mc.pass()}};
      if (!mc.pass()) throw std::runtime_error("metric axioms failed");
    }
    out["lattice"] = lj;
    stages.done("lattice");
  } catch (const std::exception& e) {
    stages.failed("lattice", e.what());
    out["stages"] = stages.status;
    rep.ok = false;
    return rep;
  }

  // partitions
  try {
    int n_max = cfg.partition_n_max >= 0 ? cfg.partition_n_max : 2 * graph->diameter();
    family = extended_partition_family(*graph, n_max);
    auto cert = verify_separation(family, *graph);
    json pj;
    pj["c"] = family.c;
    pj["zeta"] = family.zeta;
    pj["fitted_c"] = cert.fitted_c;
    pj["n_max"] = n_max;
    json rows = json::array();
    for (const auto& r : cert.rows)
      rows.push_back({{"n", r.n},
                      {"classes", r.class_count},
                      {"partition", r.is_partition},
                      {"growth", r.growth_ok},
                      {"separated", r.separated},
                      {"anchored", r.anchored}});
    pj["scales"] = rows;
    pj["pass"] = cert.overall;
    out["partitions"] = pj;
    if (!cert.overall) throw std::runtime_error("separating family certification failed");
    stages.done("partitions");
  } catch (const std::exception& e) {
    stages.failed("partitions", e.what());
  }

  // model
  try {
    model.emplace(build_model(cfg, graph));
    const auto& amb = *model->ambient();
    json mj;
    mj["name"] = model->name();
    mj["range"] = model->range();
    mj["eta_inf"] = model->eta_inf();
    mj["dim"] = amb.dim();

    std::vector<Region> vols;
    Site center = amb.region().sites[amb.region().size() / 2];
    for (int n = std::max(model->range(), 1); n <= graph->covering_radius(center); ++n)
      vols.push_back(region_intersection(graph->ball(center, n), amb.region()));
    vols.push_back(amb.region());
    auto cert = model->certify_frustration_free(vols);
    json rows = json::array();
    double worst_min_spec = 0.0;
    for (const auto& r : cert.rows) {
      rows.push_back({{"volume", region_json(r.volume)},
                      {"min_spec", r.min_spec},
                      {"kernel_dim", r.kernel_dim},
                      {"pass", r.pass}});
      worst_min_spec = std::max(worst_min_spec, std::abs(r.min_spec));
    }
    mj["ff_certification"] = {{"terms_psd", cert.terms_psd},
                              {"worst_term_min_eig", cert.worst_term_min_eig},
                              {"volumes", rows},
                              {"pass", cert.overall}};
    invariants.push_back(invariant_row("ff_min_spec", worst_min_spec, cfg.tol.ff_min_spec));

    double worst_nest = 0.0;
    for (std::size_t i = 0; i + 1 < vols.size(); ++i)
      worst_nest = std::max(worst_nest, model->nesting_residual(vols[i + 1], vols[i]));
    mj["nesting_residual_max"] = worst_nest;
    invariants.push_back(invariant_row("nesting", worst_nest, cfg.tol.nesting));

    const GroundSpace& gs = model->ground_space(amb.region());
    mj["kernel_dim"] = gs.rank();
    mj["gamma0"] = gs.gap_above;
    gamma0 = gs.gap_above;
    kernel_is_one = !gs.full_space && gs.rank() == 1;
    out["model"] = mj;
    if (!cert.overall) throw std::runtime_error("frustration-freeness certification failed");
    if (worst_nest > cfg.tol.nesting) throw std::runtime_error("nesting residual above tolerance");
    stages.done("model");
  } catch (const std::exception& e) {
    stages.failed("model", e.what());
    out["stages"] = stages.status;
    out["invariants"] = invariants;
    rep.ok = false;
    return rep;
  }

  // local gaps
  std::vector<double> gamma_table;
  if (stages.is_done("partitions")) {
    try {
      gaps = certify_local_gaps(*model, family, cfg.gamma1, cfg.alpha);
      json gj;
      json rows = json::array();
      for (const auto& r : gaps.rows) {
        rows.push_back({{"n", r.n},
                        {"gamma_n", r.gamma_n},
                        {"threshold", r.threshold},
                        {"shapes", r.shapes},
                        {"pass", r.pass}});
        gamma_table.resize(std::max<std::size_t>(gamma_table.size(), r.n + 1), 0.0);
        gamma_table[r.n] = r.gamma_n;
      }
      gj["rows"] = rows;
      gj["fitted_gamma1"] = gaps.fitted_gamma1;
      gj["fitted_alpha"] = gaps.fitted_alpha;
      gj["pass"] = gaps.overall;
      out["local_gaps"] = gj;
      if (!gaps.overall) throw std::runtime_error("declared (gamma1, alpha) not admissible");
      stages.done("local_gaps");
    } catch (const std::exception& e) {
      stages.failed("local_gaps", e.what());
    }
  } else {
    stages.skipped("local_gaps", "partitions unavailable");
  }

  // ltqo
  if (!cfg.ltqo_enabled) {
    stages.skipped("ltqo", "disabled in config");
  } else if (!kernel_is_one) {
    stages.skipped("ltqo", "ambient kernel is not one-dimensional");
  } else {
    try {
      LtqoGrid grid;
      grid.centers = cfg.ltqo_centers;
      grid.k_max = cfg.ltqo_k_max;
      grid.m_max = cfg.ltqo_m_max;
      double alpha = cfg.alpha.value_or(gaps.fitted_alpha);
      ltqo = ltqo_scan(*model, grid, cfg.probes, family.zeta, alpha, graph->nu());
      json lj;
      json rows = json::array();
      for (const auto& r : ltqo->rows)
        rows.push_back({{"x", r.x}, {"k", r.k}, {"m", r.m}, {"deviation", r.deviation}});
      lj["rows"] = rows;
      lj["excluded_points"] = ltqo->excluded_points;
      lj["monotone_in_m"] = ltqo->monotone_in_m;
      lj["raw_by_r"] = ltqo->raw_by_r;
      lj["envelope"] = ltqo->envelope;
      lj["envelope_adjusted"] = ltqo->envelope_adjusted;
      lj["fit"] = {{"ok", ltqo->fit_ok}, {"c", ltqo->fit_c}, {"q", ltqo->fit_q}};
      lj["empirical"] = true;  // probe-sampled lower bound of the true sup
      const char* verdict =
          ltqo->moment.verdict == MomentCheck::Verdict::Pass            ? "pass"
          : ltqo->moment.verdict == MomentCheck::Verdict::PassEmpirical ? "pass_empirical"
          : ltqo->moment.verdict == MomentCheck::Verdict::Fail          ? "fail"
                                                                        : "indeterminate";
      lj["moment_check"] = {{"verdict", verdict},
                            {"total_hi", ltqo->moment.total_hi},
                            {"note", ltqo->moment.note}};
      // indistinguishability slack with the measured envelope, over the
      // scanned points that leave room for padding (capped for cost)
      double worst_slack = -std::numeric_limits<double>::infinity();
      int checked = 0;
      for (const auto& r : ltqo->rows) {
        if (r.m >= cfg.ltqo_m_max || checked >= 24) continue;
        worst_slack = std::max(worst_slack, indistinguishability_check(
                                                *model, r.x, r.k, r.m, cfg.ltqo_m_max, *ltqo,
                                                cfg.probes));
        ++checked;
      }
      if (checked > 0) {
        lj["indistinguishability_slack"] = worst_slack;
        invariants.push_back(
            invariant_row("indistinguishability", std::max(worst_slack, 0.0), 1e-10));
      }
      out["ltqo"] = lj;
      stages.done("ltqo");
    } catch (const std::exception& e) {
      stages.failed("ltqo", e.what());
    }
  }

  // perturbation metadata and decay-function certificates
  Region lambda = cfg.lambda_all ? model->ambient()->region() : Region(cfg.lambda_sites);
  std::optional<AnchoredInteraction> phi;
  try {
    if (!model->ambient()->region().contains(lambda))
      throw domain_error("lambda region escapes the ambient volume");
    phi.emplace(build_perturbation(cfg, *model, lambda));
    auto ver = phi->verify();
    json dj;
    dj["terms"] = phi->terms().size();
    dj["hermitian"] = ver.hermitian;
    dj["supports_ok"] = ver.supports_ok;
    dj["decay_ok"] = ver.decay_ok;
    dj["worst_decay_excess"] = ver.worst_decay_excess;
    auto f = cfg.f_family == "table" ? DecayFunction::table(cfg.f_values)
                                     : DecayFunction::stretched_exp(cfg.f_zeta, cfg.f_a, cfg.f_theta);
    auto fcert = certify_f_function(*graph, f);
    dj["f_function"] = {{"family", cfg.f_family},
                        {"zeta", cfg.f_zeta},
                        {"a", cfg.f_a},
                        {"theta", cfg.f_theta},
                        {"certifiable", fcert.certifiable},
                        {"uniform_sum", fcert.uniform_sum},
                        {"conv_constant", fcert.conv_constant}};
    if (!phi->empty()) dj["phi_f_norm"] = interaction_f_norm(phi->term_norms(), f, *graph);
    dj["eta_f_norm"] = interaction_f_norm(model->as_anchored().term_norms(), f, *graph);
    dj["pass"] = ver.hermitian && ver.supports_ok && ver.decay_ok && fcert.certifiable;
    out["decay_check"] = dj;
    if (!ver.decay_ok) throw std::runtime_error("perturbation decay bound violated");
    stages.done("decay_check");
  } catch (const std::exception& e) {
    stages.failed("decay_check", e.what());
  }

  // weight pair
  std::optional<GapWeightPair> pair;
  try {
    pair = cfg.weight_profile == "bump" ? GapWeightPair::bump(cfg.gamma)
                                        : GapWeightPair::from_table(cfg.gamma, cfg.weight_table);
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      double xi = -3.0 * cfg.gamma + 6.0 * cfg.gamma * i / 1000.0;
      worst =
          std::max(worst, std::abs(cdouble(0, xi) * pair->W_hat(xi) + pair->w_hat(xi) - 1.0));
    }
    json wj;
    wj["gamma"] = cfg.gamma;
    wj["profile"] = cfg.weight_profile;
    wj["fourier_identity_residual"] = worst;
    wj["W_l1"] = pair->W_l1();  // empirical profile constant
    wj["W_t_moment"] = pair->W_t_moment();
    out["weight"] = wj;
    invariants.push_back(invariant_row("fourier_identity", worst, cfg.tol.fourier_identity));
    if (worst > cfg.tol.fourier_identity)
      throw std::runtime_error("weight pair identity residual above tolerance");
    stages.done("weight");
  } catch (const std::exception& e) {
    stages.failed("weight", e.what());
  }

  // flow, decomposition, beta, sweep
  if (certify_only || !cfg.stability_enabled) {
    const char* why = certify_only ? "certify-only run" : "disabled in config";
    stages.skipped("flow", why);
    stages.skipped("decomposition", why);
    stages.skipped("stability", why);
  } else if (!phi || !pair) {
    stages.skipped("flow", "prerequisite stage failed");
    stages.skipped("decomposition", "prerequisite stage failed");
    stages.skipped("stability", "prerequisite stage failed");
  } else if (model->ambient()->dim() > cfg.solver.max_dense_dim) {
    stages.skipped("flow", "ambient dimension above the dense cap");
    stages.skipped("decomposition", "ambient dimension above the dense cap");
    stages.skipped("stability", "ambient dimension above the dense cap");
  } else {
    std::optional<PerturbedFamily> fam;
    std::optional<SpectralFlowState> flow;
    std::optional<DressedInteraction> dressed;
    double beta = 0.0;
    bool beta_ready = false;
    try {
      fam.emplace(*model, lambda, *phi, cfg.solver.max_dense_dim);
      auto grid = make_sweep_grid(cfg.s_max, cfg.sweep_points);
      FlowOptions fo;
      fo.transport_tol = cfg.tol.flow_node;
      flow = integrate_flow(*fam, *pair, grid, fo);
      double transport = transport_check(*flow, *fam);
      json fj;
      fj["grid"] = grid;
      fj["substeps"] = flow->substeps_used;
      fj["max_unitarity_defect"] = flow->max_unitarity_defect;
      fj["transport_residual"] = transport;
      fj["energy_continuous"] = fam->energy_continuous(grid);
      out["flow"] = fj;
      invariants.push_back(invariant_row("transport", transport, cfg.tol.transport));
      stages.done("flow");

      double s_cal = cfg.s_cal > 0 ? cfg.s_cal : (grid.size() > 1 ? grid[1] : 0.0);
      if (s_cal == 0.0) {
        stages.skipped("decomposition", "calibration s is zero");
        beta = 0.0;
        beta_ready = true;
        out["beta"] = {{"beta", 0.0}, {"empirical", true}, {"shells", json::array()}};
      } else if (!kernel_is_one) {
        stages.skipped("decomposition", "ambient kernel is not one-dimensional");
      } else {
        dressed = decompose_phi1(*fam, *flow, s_cal, *pair, cfg.tol.recon_phi1);
        decompose_phi2(*dressed, *fam, ltqo ? &*ltqo : nullptr, cfg.tol.recon_phi2);
        json dj;
        dj["s_cal"] = s_cal;
        dj["recon_phi1_residual"] = dressed->recon1_residual;
        dj["recon_phi2_residual"] = dressed->recon2_residual;
        dj["annihilation_max"] = dressed->annihilation_max;
        dj["omega_w"] = dressed->omega_w;
        dj["ground_commutator"] = dressed->ground_commutator;
        dj["en_orthogonality"] = dressed->en_orthogonality;
        dj["shape_ratio_max"] = dressed->shape_ratio_max;
        json grows = json::array();
        for (const auto& [key, g] : dressed->g_lambda)
          grows.push_back({{"x", key.first}, {"m", key.second}, {"g", g}});
        dj["g_lambda"] = grows;
        dj["g2_envelope"] = dressed->g2_envelope;
        dj["empirical"] = true;  // measured envelopes, no analytic tail
        out["decomposition"] = dj;
        invariants.push_back(
            invariant_row("recon_phi1", dressed->recon1_residual, cfg.tol.recon_phi1));
        invariants.push_back(
            invariant_row("recon_phi2", dressed->recon2_residual, cfg.tol.recon_phi2));
        invariants.push_back(
            invariant_row("annihilation", dressed->annihilation_max, cfg.tol.annihilation));
        invariants.push_back(invariant_row("omega_w", dressed->omega_w, cfg.tol.omega_w));
        stages.done("decomposition");

        // the form bound prices each dressed term at twice the stored table:
        // the envelope entries bound |Phi2(x,n,s)| / (2 s)
        std::vector<double> genv;
        for (double g : dressed->g2_envelope) genv.push_back(2.0 * g);
        std::vector<double> gam = gamma_table;
        gam.resize(std::max(gam.size(), genv.size()), 0.0);
        auto bb = form_bound_beta(genv, gam, family.c, family.zeta, model->range());
        beta = bb.beta;
        beta_ready = true;
        json bj;
        bj["beta"] = bb.beta;
        bj["empirical"] = bb.empirical;
        json shells = json::array();
        for (const auto& sh : bb.shells)
          shells.push_back({{"n", sh.n},
                            {"weight", sh.weight},
                            {"g", sh.g},
                            {"gamma", sh.gamma},
                            {"term", sh.term}});
        bj["shells"] = shells;
        auto [lo, hi] = verify_form_bound(fam->h0(), dressed->w, s_cal * beta);
        double fb_tol = cfg.tol.form_bound * (1.0 + s_cal * beta * operator_norm(fam->h0()));
        bj["form_bound"] = {{"min_spec_minus", lo},
                            {"min_spec_plus", hi},
                            {"tolerance", fb_tol},
                            {"pass", lo >= -fb_tol && hi >= -fb_tol}};
        out["beta"] = bj;
        invariants.push_back(invariant_row("form_bound", std::max(-lo, -hi), fb_tol));
        if (lo < -fb_tol || hi < -fb_tol)
          throw std::runtime_error("relative form bound failed in operator order");
      }

      if (beta_ready || dressed) {
        double s0 = beta > 1e-300 ? (gamma0 - cfg.gamma_request) / (beta * gamma0)
                                  : std::numeric_limits<double>::infinity();
        double sweep_max = std::isfinite(s0) ? 1.2 * s0 : cfg.s_max;
        auto sgrid = make_sweep_grid(sweep_max, cfg.sweep_points);
        auto verdict = stability_sweep(*fam, beta, cfg.gamma_request, sgrid, cfg.tol.sweep_slack);
        json vj;
        vj["gamma0"] = verdict.gamma0;
        vj["gamma_request"] = verdict.gamma_request;
        vj["beta"] = verdict.beta;
        vj["s0"] = verdict.s0_infinite ? json("inf") : json(verdict.s0);
        json rows = json::array();
        for (const auto& r : verdict.rows)
          rows.push_back({{"s", r.s},
                          {"energy", r.energy},
                          {"gap", r.gap},
                          {"bound", r.bound},
                          {"multiplicity", r.multiplicity},
                          {"inside", r.inside},
                          {"outside_hypothesis", r.outside_hypothesis},
                          {"pass", r.pass}});
        vj["rows"] = rows;
        vj["pass"] = verdict.overall;
        out["stability"] = vj;
        if (!verdict.overall)
          throw std::runtime_error("gap lower bound failed inside the certified window");
        stages.done("stability");
      } else {
        stages.skipped("stability", "no beta available");
      }
    } catch (const std::exception& e) {
      if (!stages.status.contains("flow"))
        stages.failed("flow", e.what());
      else if (!stages.status.contains("decomposition"))
        stages.failed("decomposition", e.what());
      else
        stages.failed("stability", e.what());
    }
  }

  // drift over alternate ambient sizes
  if (!cfg.drift_dims.empty()) {
    json drift = json::array();
    for (const auto& dims : cfg.drift_dims) {
      try {
        ExperimentConfig alt = cfg;
        alt.dims = dims;
        auto g2 = build_graph(alt);
        auto m2 = build_model(alt, g2);
        const GroundSpace& gs2 = m2.ground_space(m2.ambient()->region());
        Site center = m2.ambient()->region().sites[m2.ambient()->region().size() / 2];
        double worst_nest = 0.0;
        std::vector<Region> vols;
        for (int n = std::max(m2.range(), 1); n <= g2->covering_radius(center); ++n)
          vols.push_back(region_intersection(g2->ball(center, n), m2.ambient()->region()));
        for (std::size_t i = 0; i + 1 < vols.size(); ++i)
          worst_nest = std::max(worst_nest, m2.nesting_residual(vols[i + 1], vols[i]));
        drift.push_back({{"dims", dims},
                         {"gamma0", gs2.gap_above},
                         {"kernel_dim", gs2.rank()},
                         {"min_spec", gs2.min_eigenvalue},
                         {"nesting_residual_max", worst_nest}});
      } catch (const std::exception& e) {
        drift.push_back({{"dims", dims}, {"error", e.what()}});
      }
    }
    out["drift"] = drift;
  }

  out["invariants"] = invariants;
  out["stages"] = stages.status;
  rep.ok = stages.ok;
  return rep;
}

}  // namespace

StabilityReport run_pipeline(const ExperimentConfig& cfg) { return run_impl(cfg, false); }
StabilityReport run_certify(const ExperimentConfig& cfg) { return run_impl(cfg, true); }

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("emit: cannot open " + path);
  f << content;
  if (!f) throw std::runtime_error("emit: write failed for " + path);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::string> emit(const StabilityReport& report, const std::string& out_dir,
                              EmitFormat format) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  if (format == EmitFormat::Json) {
    std::string path = out_dir + "/report.json";
    write_file(path, report.j.dump(2) + "\n");
    written.push_back(path);
    return written;
  }
  const json& j = report.j;
  auto table = [&](const std::string& name, const std::string& header,
                   const std::vector<std::string>& rows) {
    std::string path = out_dir + "/" + name;
    std::string body = header + "\n";
    for (const auto& r : rows) body += r + "\n";
    write_file(path, body);
    written.push_back(path);
  };
  if (j.contains("stability")) {
    std::vector<std::string> rows;
    for (const auto& r : j["stability"]["rows"])
      rows.push_back(fmt(r["s"]) + "," + fmt(r["energy"]) + "," + fmt(r["gap"]) + "," +
                     fmt(r["bound"]) + "," + std::to_string(r["multiplicity"].get<long long>()) +
                     "," + (r["pass"].get<bool>() ? "1" : "0"));
    table("gap_sweep.csv", "s,energy,gap,bound,multiplicity,pass", rows);
  }
  if (j.contains("local_gaps")) {
    std::vector<std::string> rows;
    for (const auto& r : j["local_gaps"]["rows"])
      rows.push_back(std::to_string(r["n"].get<int>()) + "," + fmt(r["gamma_n"]));
    table("local_gaps.csv", "n,gamma_n", rows);
  }
  if (j.contains("ltqo")) {
    std::vector<std::string> rows;
    for (const auto& r : j["ltqo"]["rows"])
      rows.push_back(std::to_string(r["x"].get<int>()) + "," + std::to_string(r["k"].get<int>()) +
                     "," + std::to_string(r["m"].get<int>()) + "," + fmt(r["deviation"]));
    table("ltqo_deviation.csv", "x,k,m,deviation", rows);
    std::vector<std::string> env;
    const auto& e = j["ltqo"]["envelope"];
    for (std::size_t r = 0; r < e.size(); ++r)
      env.push_back(std::to_string(r) + "," + fmt(e[r].get<double>()));
    table("g0_envelope.csv", "r,g0", env);
  }
  if (j.contains("decomposition")) {
    std::vector<std::string> rows;
    const auto& e = j["decomposition"]["g2_envelope"];
    for (std::size_t n = 0; n < e.size(); ++n)
      rows.push_back(std::to_string(n) + "," + fmt(e[n].get<double>()));
    table("g2_envelope.csv", "n,g2", rows);
  }
  if (j.contains("invariants")) {
    std::vector<std::string> rows;
    for (const auto& r : j["invariants"])
      rows.push_back(r["name"].get<std::string>() + "," + fmt(r["residual"]) + "," +
                     fmt(r["tolerance"]) + "," + (r["pass"].get<bool>() ? "1" : "0"));
    table("residuals.csv", "name,residual,tolerance,pass", rows);
  }
  return written;
}

}  // namespace gapstab
