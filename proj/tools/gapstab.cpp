#include <CLI11.hpp>
#include <cstdio>

#include "gapstab/pipeline.hpp"

using namespace gapstab;

namespace {

int do_run(const std::string& config_path, const std::string& out_dir, long long seed,
           long long max_dense, const std::string& format, bool certify_only) {
  ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
  if (seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.raw["seed"] = cfg.seed;
  }
  if (max_dense > 0) {
    cfg.solver.max_dense_dim = max_dense;
    cfg.raw["solver"]["max_dense_dim"] = max_dense;
  }
  StabilityReport rep = certify_only ? run_certify(cfg) : run_pipeline(cfg);
  if (!out_dir.empty()) {
    auto files = emit(rep, out_dir, EmitFormat::Json);
    if (format == "csv") {
      auto more = emit(rep, out_dir, EmitFormat::CsvBundle);
      files.insert(files.end(), more.begin(), more.end());
    }
    for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
  }
  const auto& stages = rep.j["stages"];
  for (auto it = stages.begin(); it != stages.end(); ++it)
    std::printf("%-16s %s\n", it.key().c_str(), it.value().get<std::string>().c_str());
  if (rep.j.contains("stability")) {
    const auto& v = rep.j["stability"];
    std::printf("gamma0=%.6g beta=%.6g s0=%s verdict=%s\n", v["gamma0"].get<double>(),
                v["beta"].get<double>(),
                v["s0"].is_string() ? "inf" : std::to_string(v["s0"].get<double>()).c_str(),
                v["pass"].get<bool>() ? "pass" : "fail");
  }
  return rep.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-volume gap stability laboratory for frustration-free spin models"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format = "json";
  long long seed = -1, max_dense = -1;

  auto* run = app.add_subcommand("run", "run the full certification and stability pipeline");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory for the report");
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--max-dense-dim", max_dense, "override the dense solver cap");
  run->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

  auto* certify = app.add_subcommand("certify", "run the assumption certifications only");
  certify->add_option("--config", config_path, "experiment config (JSON)")->required();
  certify->add_option("--out", out_dir, "output directory for the report");
  certify->add_option("--seed", seed, "override the config seed");
  certify->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

  auto* zoo = app.add_subcommand("zoo", "model zoo utilities");
  auto* zoo_list = zoo->add_subcommand("list", "list the built-in models");

  CLI11_PARSE(app, argc, argv);

  try {
    if (zoo_list->parsed()) {
      for (const auto& name : zoo_names()) std::printf("%s\n", name.c_str());
      return 0;
    }
    if (run->parsed()) return do_run(config_path, out_dir, seed, max_dense, format, false);
    if (certify->parsed()) return do_run(config_path, out_dir, seed, max_dense, format, true);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
