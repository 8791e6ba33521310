#include "uniclip_cli/cli.hpp"

#include <cstdlib>
#include <iomanip>
#include <ostream>

#include "CLI11.hpp"
#include "uniclip/ablation.hpp"
#include "uniclip/config.hpp"
#include "uniclip/errors.hpp"
#include "uniclip/io.hpp"
#include "uniclip/oracle_suite.hpp"
#include "uniclip/training.hpp"

namespace uniclip::cli {

namespace {

RunConfig resolve_config(const Invocation& inv) {
  std::vector<std::string> overrides = inv.overrides;
  if (inv.seed) overrides.push_back("seed=" + std::to_string(*inv.seed));
  if (inv.config_path) return load_config(*inv.config_path, overrides);
  return with_overrides(default_config(), overrides);
}

void print_cells(std::ostream& out, const AblationResult& result) {
  out << std::left << std::setw(30) << "cell" << std::right << std::setw(18) << "R@1 (mean±sd)" << std::setw(18)
      << "R@5 i2t" << std::setw(12) << "probe" << std::setw(12) << "AUC" << "\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& c : result.cells) {
    const auto r1 = c.summary("r1_mean");
    const auto r5 = c.summary("r5_i2t");
    out << std::left << std::setw(30) << c.cell.id << std::right << std::setw(9) << r1.mean << " ± " << std::setw(6)
        << r1.sd << std::setw(18) << r5.mean << std::setw(12) << c.summary("probe_acc").mean << std::setw(12)
        << c.summary("auc_all").mean << "\n";
  }
  out.unsetf(std::ios::floatfield);
}

GridSpec seeded_grid(const std::string& axis, const Invocation& inv) {
  GridSpec spec = standard_grid(axis, inv.seeds);
  if (inv.seed) {
    for (auto& s : spec.seeds) s += *inv.seed;
  }
  return spec;
}

int cmd_train(const Invocation& inv, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(inv);
  TrainOptions opts;
  opts.on_epoch = [&](const MetricsRecord& r) {
    err << "epoch " << r.epoch << "  loss " << r.loss << "  R@1 " << r.retrieval.r1_mean() << "  probe "
        << r.probe_accuracy << "\n";
  };
  const TrainResult result = train(cfg, opts);
  write_atomic(inv.output_dir / "metrics.csv", metrics_csv(result.config, result.history));
  write_atomic(inv.output_dir / "summary.json", run_summary_json(result.config, result.history));
  write_atomic(inv.output_dir / "histograms.tsv", histogram_tsv(result.config, result.final_density));
  const auto& last = result.history.back();
  out << "final R@1 i2t " << last.retrieval.r1_image_to_text << "  t2i " << last.retrieval.r1_text_to_image
      << "  probe " << last.probe_accuracy << "\n";
  out << "wrote " << (inv.output_dir / "metrics.csv").string() << "\n";
  return kExitOk;
}

int run_grid(const Invocation& inv, const std::string& axis, const std::string& stem, std::ostream& out,
             std::ostream& err) {
  const RunConfig base = resolve_config(inv);
  const GridSpec spec = seeded_grid(axis, inv);
  resolve_grid(base, spec);  // reject invalid cells before any training
  const AblationResult result = run_ablation(base, spec, [&](const AblationProgress& p) {
    err << p.cell_id << " seed " << p.seed << ": R@1 " << p.final_record->retrieval.r1_mean() << "\n";
  });
  write_atomic(inv.output_dir / (stem + ".csv"), ablation_csv(base, result));
  write_atomic(inv.output_dir / (stem + ".json"), ablation_json(base, result));
  print_cells(out, result);
  return kExitOk;
}

int cmd_grad_check(const Invocation& inv, std::ostream& out) {
  if (inv.config_path || !inv.overrides.empty()) (void)resolve_config(inv);
  OracleSuiteOptions opts;
  opts.seed = inv.seed.value_or(0);
  opts.loss_instances = inv.oracle_instances;
  const auto checks = run_oracle_suite(opts);
  std::size_t passed = 0;
  out << std::scientific << std::setprecision(3);
  for (const auto& c : checks) {
    out << (c.passed() ? "PASS " : "FAIL ") << c.name << "  error " << c.error << "  tolerance " << c.tolerance
        << "\n";
    passed += c.passed() ? 1 : 0;
  }
  out.unsetf(std::ios::floatfield);
  out << passed << "/" << checks.size() << " gradient checks passed\n";
  return passed == checks.size() ? kExitOk : kExitRuntime;
}

int cmd_sim_density(const Invocation& inv, std::ostream& out, std::ostream& err) {
  const RunConfig base = resolve_config(inv);
  GridSpec spec = standard_grid("loss", 1);
  spec.seeds = {base.seed};
  const auto configs = resolve_grid(base, spec);
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const TrainResult result = train(configs[c]);
    for (std::size_t d = 0; d < kDomainCount; ++d) {
      const auto domain = static_cast<Domain>(d);
      const auto path = inv.output_dir / ("histogram_" + spec.cells[c].id + "_" + to_string(domain) + ".tsv");
      write_atomic(path, histogram_tsv(result.config, result.final_density, domain));
    }
    err << spec.cells[c].id << " done\n";
    out << spec.cells[c].id << "  AUC ii " << result.final_density.auc[0] << "  it " << result.final_density.auc[1]
        << "  tt " << result.final_density.auc[2] << "  all " << result.final_density.auc_all << "\n";
  }
  return kExitOk;
}

int cmd_export(const Invocation& inv, std::ostream& out) {
  const RunConfig cfg = resolve_config(inv);
  const Dataset data = generate_dataset(cfg.world, substream(cfg.seed, "data")());
  const auto path = inv.output_dir / "dataset.bin";
  write_atomic(path, dataset_binary(data));
  out << "wrote " << data.train.size() << " train and " << data.eval.size() << " eval pairs to " << path.string()
      << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  Invocation inv;
  const char* env_out = std::getenv(kOutputEnv);
  inv.output_dir = env_out != nullptr && *env_out != '\0' ? env_out : "uniclip_out";

  CLI::App app{"uniclip: unified contrastive image-text training on a synthetic world"};
  app.footer("\n" + config_schema_description());
  app.require_subcommand(0, 1);
  bool dump_defaults = false;
  app.add_flag("--dump-defaults", dump_defaults, "Print the default configuration as JSON and exit");

  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--set", inv.overrides, "Override a config key: dotted.key=value (repeatable)");
    sub->add_option("--out", output_dir, std::string("Output directory (default $") + kOutputEnv + " or ./uniclip_out)");
    sub->add_option("--seed", seed, "Root seed override");
    sub->footer("\n" + config_schema_description());
  };

  auto* train_cmd = app.add_subcommand("train", "Train one run and write metrics.csv, summary.json, histograms.tsv");
  auto* ablate_cmd = app.add_subcommand("ablate", "Train every cell of an ablation grid over several seeds");
  auto* grad_cmd = app.add_subcommand("grad-check", "Run the finite-difference gradient oracle suite");
  auto* loss_cmd = app.add_subcommand("loss-compare", "Loss-function comparison (five loss configurations)");
  auto* density_cmd = app.add_subcommand("sim-density", "Per-domain similarity histograms for each loss");
  auto* export_cmd = app.add_subcommand("export-dataset", "Write the synthetic dataset in the flat binary layout");
  for (auto* sub : {train_cmd, ablate_cmd, grad_cmd, loss_cmd, density_cmd, export_cmd}) add_common(sub);
  ablate_cmd->add_option("--axis", inv.axis, "Ablation axis")
      ->check(CLI::IsMember(grid_axes()));
  for (auto* sub : {ablate_cmd, loss_cmd}) sub->add_option("--seeds", inv.seeds, "Seeds per cell")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--instances", inv.oracle_instances, "Randomized instances per loss family")
      ->check(CLI::PositiveNumber);

  std::vector<const char*> raw;
  raw.reserve(argv.size());
  for (const auto& a : argv) raw.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand help is raised as CallForHelp from the subcommand; anything else is a usage error.
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (dump_defaults) {
      out << config_to_json(default_config()) << "\n";
      return kExitOk;
    }
    if (app.get_subcommands().empty()) {
      out << app.help();
      return kExitConfig;
    }
    CLI::App* sub = app.get_subcommands().front();
    inv.subcommand = sub->get_name();
    if (!config_path.empty()) inv.config_path = config_path;
    if (!output_dir.empty()) inv.output_dir = output_dir;
    if (sub->count("--seed") > 0) inv.seed = seed;

    if (inv.subcommand == "train") return cmd_train(inv, out, err);
    if (inv.subcommand == "ablate") return run_grid(inv, inv.axis, "ablation_" + inv.axis, out, err);
    if (inv.subcommand == "grad-check") return cmd_grad_check(inv, out);
    if (inv.subcommand == "loss-compare") return run_grid(inv, "loss", "loss_compare", out, err);
    if (inv.subcommand == "sim-density") return cmd_sim_density(inv, out, err);
    if (inv.subcommand == "export-dataset") return cmd_export(inv, out);
    err << "error: unknown subcommand " << inv.subcommand << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace uniclip::cli
