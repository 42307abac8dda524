#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "vjlp/config.hpp"
#include "vjlp/experiments.hpp"
#include "vjlp/io.hpp"

using namespace vjlp;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInconclusive = 2, kBlowup = 3, kFailed = 4 };

struct Overrides {
  std::string config_file;
  std::vector<std::string> settings;
  std::optional<std::string> preset, activation, out, deltas, observables, init;
  std::optional<double> gamma, rho, delta, time, burn_in;
  std::optional<std::uint64_t> steps, seed;
  std::optional<int> workers, replicas;
};

void add_common(CLI::App* cmd, Overrides& o)
{
  cmd->add_option("--config", o.config_file, "key = value config file");
  cmd->add_option("--set", o.settings, "extra key=value setting (repeatable)");
  cmd->add_option("--preset", o.preset, "gaussian2d | torus1d | free");
  cmd->add_option("--gamma", o.gamma, "friction");
  cmd->add_option("--rho", o.rho, "jump refresh parameter in [-1, 1)");
  cmd->add_option("--delta", o.delta, "step size");
  cmd->add_option("--steps", o.steps, "number of steps");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--activation", o.activation, "relu | softplus:a");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--workers", o.workers, "maximum worker threads");
  cmd->add_option("--replicas", o.replicas, "independent chains");
  cmd->add_option("--deltas", o.deltas, "comma separated step sizes, descending");
  cmd->add_option("--observables", o.observables, "comma separated observable names");
  cmd->add_option("--time", o.time, "simulated time per replica");
  cmd->add_option("--burn-in", o.burn_in, "burn-in time");
  cmd->add_option("--init", o.init, "gibbs | zero");
}

// defaults < config file < --set < dedicated flags
ExperimentConfig resolve(ExperimentConfig cfg, const Overrides& o)
{
  if (!o.config_file.empty()) cfg = load_config(o.config_file, std::move(cfg));
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ContractViolation("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  auto set = [&](const char* key, const auto& value) {
    if (!value) return;
    if constexpr (std::is_same_v<std::decay_t<decltype(*value)>, double>) apply_setting(cfg, key, format_double(*value));
    else if constexpr (std::is_same_v<std::decay_t<decltype(*value)>, std::string>) apply_setting(cfg, key, *value);
    else apply_setting(cfg, key, std::to_string(*value));
  };
  set("preset", o.preset);
  set("gamma", o.gamma);
  set("rho", o.rho);
  set("delta", o.delta);
  set("steps", o.steps);
  set("seed", o.seed);
  set("activation", o.activation);
  set("out", o.out);
  set("workers", o.workers);
  set("replicas", o.replicas);
  set("deltas", o.deltas);
  set("observables", o.observables);
  set("time", o.time);
  set("burn_in", o.burn_in);
  set("init", o.init);
  validate_config(cfg);
  return cfg;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
  std::filesystem::create_directories(path.parent_path());
  write_text_file(path, j.dump(2) + "\n");
}

int report_table(const std::filesystem::path& dir, const BiasSweepTable& table, const std::string& stem,
                 bool slope_window = true)
{
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / (stem + ".csv"), std::ios::binary);
    write_bias_sweep_csv(csv, table);
  }
  const nlohmann::json summary = sweep_summary(table);
  write_json(dir / "summary.json", summary);
  std::cout << summary.dump(2) << '\n';
  if (table.inconclusive) return kInconclusive;
  if (!slope_window) return kOk;
  return summary["in_window"].get<bool>() ? kOk : kFailed;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Velocity jump Langevin sampler: simulation, sweeps and validation"};
  app.require_subcommand(1);

  Overrides o;
  auto* simulate_cmd = app.add_subcommand("simulate", "run one chain, write trajectory.csv and summary.json");
  auto* figures_cmd = app.add_subcommand("figures", "gamma x rho trajectory grid on gaussian2d with SVG plots");
  auto* sweep_cmd = app.add_subcommand("bias-sweep", "invariant-measure bias against delta and its log-log slope");
  auto* richardson_cmd = app.add_subcommand("richardson", "bias sweep of the Richardson combination");
  auto* validate_cmd = app.add_subcommand("validate", "oracle cross-check battery");
  auto* ergodicity_cmd = app.add_subcommand("ergodicity", "decay of the gap between two extreme starts");
  for (auto* c : {simulate_cmd, figures_cmd, sweep_cmd, richardson_cmd, validate_cmd, ergodicity_cmd}) add_common(c, o);

  bool synthetic = false, baseline = false;
  sweep_cmd->add_flag("--synthetic", synthetic, "noise-free table with injected delta^2 bias");
  sweep_cmd->add_flag("--baseline", baseline, "relu with U1 = 0 (the chain is BAOAB)");
  double bound_scale = 1.0;
  validate_cmd->add_option("--bound-scale", bound_scale, "multiply every channel bound (fault injection)");
  bool quick = false;
  validate_cmd->add_flag("--quick", quick, "smaller sample sizes");
  int ensemble = 2000;
  ergodicity_cmd->add_option("--ensemble", ensemble, "chains per initial condition");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate_cmd) {
      const ExperimentConfig cfg = resolve(ExperimentConfig{}, o);
      const SimulateOutcome outcome = simulate(cfg);
      write_simulate_outputs(cfg.out, outcome);
      std::cout << outcome.summary.dump(2) << '\n';
      return kOk;
    }

    if (*figures_cmd) {
      ExperimentConfig defaults;
      defaults.activation = "relu";
      defaults.replicas = 128;
      defaults.delta = 0.01;
      defaults.steps = 10000;
      defaults.burn_in = 10.0;
      const ExperimentConfig cfg = resolve(defaults, o);
      const auto cells = figures(cfg);
      write_figure_outputs(cfg.out, cells);
      const nlohmann::json summary = figures_summary(cells);
      std::cout << summary.dump(2) << '\n';
      return summary["velocity_std_in_window"].get<bool>() && summary["half_life_ordering"].get<bool>() ? kOk
                                                                                                          : kFailed;
    }

    if (*sweep_cmd || *richardson_cmd) {
      ExperimentConfig defaults;
      defaults.preset = "torus1d";
      defaults.observables = {"cos2pi_x1"};
      defaults.replicas = 30;
      if (baseline) {
        defaults.preset = "free";
        defaults.activation = "relu";
      }
      const ExperimentConfig cfg = resolve(defaults, o);
      if (synthetic) {
        const BiasSweepTable table = synthetic_table(cfg.deltas, 0.1, 2.0);
        return report_table(cfg.out, table, "bias_sweep");
      }
      const SweepResult sweep = bias_sweep(sweep_spec(cfg));
      if (*richardson_cmd) return report_table(cfg.out, richardson_table(sweep), "richardson", false);
      return report_table(cfg.out, sweep.table, "bias_sweep");
    }

    if (*validate_cmd) {
      const ExperimentConfig cfg = resolve(ExperimentConfig{}, o);
      ValidationSizes sizes;
      if (quick) sizes = {10000, 2000, 20000, 10000};
      const auto checks = validation_battery(cfg, sizes, bound_scale);
      nlohmann::json report{{"checks", nlohmann::json::array()}};
      bool all = true;
      for (const auto& c : checks) {
        report["checks"].push_back(to_json(c));
        all = all && c.passed;
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  " << c.detail << '\n';
      }
      report["passed"] = all;
      write_json(std::filesystem::path(cfg.out) / "validation.json", report);
      return all ? kOk : kFailed;
    }

    if (*ergodicity_cmd) {
      ExperimentConfig defaults;
      defaults.preset = "torus1d";
      defaults.observables = {"cos2pi_x1"};
      const ExperimentConfig cfg = resolve(defaults, o);
      const ErgodicityReport rep = ergodicity_diagnostic(preset_from(cfg), scheme_config(cfg), cfg.deltas,
                                                         cfg.horizon, ensemble, cfg.observables.front(), cfg.seed,
                                                         cfg.workers);
      nlohmann::json j{{"monotone", rep.monotone}, {"rows", nlohmann::json::array()}};
      for (const auto& r : rep.rows)
        j["rows"].push_back({{"delta", r.delta},
                             {"first_step", r.first_step ? nlohmann::json(*r.first_step) : nlohmann::json(nullptr)},
                             {"first_time", r.first_time},
                             {"initial_gap", r.initial_gap}});
      write_json(std::filesystem::path(cfg.out) / "ergodicity.json", j);
      std::cout << j.dump(2) << '\n';
      return rep.monotone ? kOk : kInconclusive;
    }
  } catch (const NumericalBlowup& e) {
    std::cerr << "blow-up: " << e.what() << '\n';
    return kBlowup;
  } catch (const BoundViolation& e) {
    std::cerr << "bound violation: " << e.what() << '\n';
    return kFailed;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
