#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "augsgd/augsgd.hpp"

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) augsgd::fail(augsgd::ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

int cmd_train(const fs::path& config_path, bool classical, const fs::path& out_dir) {
  const augsgd::ExperimentConfig cfg = augsgd::load_config(config_path);
  fs::create_directories(out_dir);
  const augsgd::TrainOutcome out = classical ? augsgd::train_classical(cfg) : augsgd::train_augmented(cfg);

  write_text(out_dir / "diagnostics.csv", augsgd::to_csv(out.result.diagnostics));
  write_text(out_dir / "weights.json",
             augsgd::weights_to_json(cfg.network.net, augsgd::WeightVector(out.result.x)).dump(2) + "\n");
  nlohmann::json bounds = augsgd::bounds_to_json(cfg, out);
  if (out.constants) {
    const auto f = augsgd::make_objective(cfg);
    bounds["lipschitz_estimate"] = augsgd::estimate_lipschitz(f, cfg.measure, out.constants->R1, 256,
                                                              augsgd::CounterRng(cfg.seed, augsgd::channel::lipschitz));
  }
  write_text(out_dir / "bounds.json", bounds.dump(2) + "\n");

  const auto& d = out.result.diagnostics;
  std::printf("%s run: %zu steps, final |lambda| = %.6g", out.augmented ? "augmented" : "classical", d.steps.size(),
              d.final_x_norm);
  if (out.constants) std::printf(", R1 = %.6g, final margin = %.6g", out.constants->R1, d.final_margin);
  if (d.diverged) std::printf(", diverged (%s)", d.note.c_str());
  std::printf("\n");
  return 0;
}

int cmd_certify(const fs::path& config_path) {
  const augsgd::ExperimentConfig cfg = augsgd::load_config(config_path);
  const augsgd::CertifiedConstants c = augsgd::certify(cfg);
  std::printf("H         %zu\n", c.graph_height);
  std::printf("Omega     %.17g\n", c.omega);
  std::printf("M         %.17g\n", c.certificate.m_bound);
  std::printf("Theta_rho %.17g\n", c.certificate.theta_rho);
  std::printf("R0        %.17g\n", c.R0);
  std::printf("R1        %.17g\n", c.R1);
  std::printf("Phi       %.17g (%s)\n", c.phi.Phi_estimate, std::string(augsgd::to_string(c.bounds.phi_mode)).c_str());
  std::printf("phi       %.17g\n", c.phi.phi);
  return 0;
}

int cmd_gradcheck(std::size_t instances, std::uint64_t seed) {
  const augsgd::GradCheckReport r = augsgd::grad_check(instances, seed);
  constexpr double threshold = 1e-5;
  std::printf("instances %zu, entries %zu, max abs error %.3e, max rel error %.3e (instance %zu)\n", r.instances,
              r.entries, r.max_abs_error, r.max_rel_error, r.worst_instance);
  if (r.max_rel_error > threshold) {
    std::printf("FAIL: relative error above %.0e\n", threshold);
    return 1;
  }
  std::printf("OK\n");
  return 0;
}

int cmd_report(const std::vector<std::string>& csvs, const fs::path& out) {
  std::vector<fs::path> paths(csvs.begin(), csvs.end());
  const nlohmann::json summary = augsgd::report(paths, out);
  std::printf("%s\n", summary.dump(2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Augmented stochastic gradient descent for acyclic neural networks"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  bool classical = false;
  auto* train = app.add_subcommand("train", "Train a network and write diagnostics.csv, weights.json, bounds.json");
  train->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_flag("--classical", classical, "Plain back-propagation baseline");
  train->add_option("--out", out_dir, "Output directory")->required();

  std::size_t instances = 200;
  std::uint64_t seed = 0;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare back-propagation with finite differences");
  gradcheck->add_option("--instances", instances, "Number of random instances");
  gradcheck->add_option("--seed", seed, "Corpus seed");

  std::vector<std::string> csvs;
  std::string summary = "summary.json";
  auto* report = app.add_subcommand("report", "Summarize diagnostics files");
  report->add_option("csv", csvs, "Diagnostics CSV files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", summary, "Summary JSON path");

  std::string certify_config;
  auto* certify = app.add_subcommand("certify", "Print the certified constants of a config");
  certify->add_option("--config", certify_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config, classical, out_dir);
    if (*gradcheck) return cmd_gradcheck(instances, seed);
    if (*report) return cmd_report(csvs, summary);
    if (*certify) return cmd_certify(certify_config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
