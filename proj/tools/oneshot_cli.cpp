#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "oneshot/config.hpp"
#include "oneshot/error.hpp"
#include "oneshot/experiments.hpp"
#include "oneshot/fem.hpp"
#include "oneshot/objective.hpp"
#include "oneshot/optim.hpp"
#include "oneshot/output.hpp"
#include "oneshot/surrogate.hpp"

namespace fs = std::filesystem;
using namespace oneshot;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "INI run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "Seed overriding the configuration");
  cmd->add_option("--out", flags.out_dir, "Output directory overriding the configuration");
}

config::ExperimentConfig resolve(const CommonFlags& flags, config::ExperimentId id) {
  config::ExperimentConfig cfg =
      flags.config_path.empty() ? config::default_config(id) : config::load_config(flags.config_path, id);
  if (cfg.id != id) {
    throw InvalidArgument("configuration is for '" + std::string(config::to_string(cfg.id)) +
                          "' but the subcommand is '" + std::string(config::to_string(id)) + "'");
  }
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.out_dir.empty()) cfg.output = flags.out_dir;
  return cfg;
}

void write_config_echo(const config::ExperimentConfig& cfg) {
  fs::create_directories(cfg.output);
  std::ofstream(fs::path(cfg.output) / "config.ini") << config::to_ini(cfg);
}

int run_rate(const config::ExperimentConfig& cfg) {
  write_config_echo(cfg);
  experiments::RateCurve curve;
  switch (cfg.id) {
    case config::ExperimentId::rate_n:
      curve = experiments::run_rate_vs_N(cfg);
      break;
    case config::ExperimentId::rate_lambda:
      curve = experiments::run_rate_vs_lambda(cfg);
      break;
    default:
      curve = experiments::run_combined(cfg);
      break;
  }
  const fs::path dir(cfg.output);
  output::write_rate_csv(dir / "curve.csv", curve);
  output::write_rate_summary(dir / "summary.json", cfg, curve);
  std::cout << config::to_string(cfg.id) << ": slope " << curve.fit.slope << " (fit residual "
            << curve.fit.residual << ", " << curve.wall_seconds << " s)\n";
  for (std::size_t i = 0; i < curve.fit.abscissae.size(); ++i) {
    std::cout << "  " << curve.fit.abscissae[i] << "  control " << curve.control_errors[i] << "  theta "
              << curve.theta_errors[i] << '\n';
  }
  std::cout << "wrote " << (dir / "curve.csv").string() << " and " << (dir / "summary.json").string() << '\n';
  return 0;
}

std::string file_label(std::string label) {
  for (char& c : label) {
    if (c == ':') c = '_';
  }
  return label;
}

int run_sgd(const config::ExperimentConfig& cfg) {
  write_config_echo(cfg);
  const auto result = experiments::run_sgd_vs_reference(cfg);
  const fs::path dir(cfg.output);
  const auto data = objective::make_problem(cfg.problem);
  for (const auto& trace : result.traces) {
    const std::string stem = file_label(trace.label);
    output::write_sgd_checkpoints(dir / (stem + "_checkpoints.csv"), trace);
    output::write_penalty_log(dir / (stem + "_log.csv"), trace.run);
    const auto spec = experiments::parse_surrogate_entry(trace.label, cfg.surrogate);
    const auto sur = surrogate::make_surrogate(spec, data.s(), data.n_dof());
    if (cfg.sgd.theta_format == "binary") {
      output::save_theta_binary(dir / (stem + "_theta.bin"), *sur, trace.run.x.theta);
    } else {
      output::save_theta_json(dir / (stem + "_theta.json"), *sur, trace.run.x.theta);
    }
    const auto& first = trace.checkpoints.front();
    const auto& last = trace.checkpoints.back();
    std::cout << trace.label << " (" << trace.param_count << " parameters): control error "
              << first.control_error << " -> " << last.control_error << ", residual " << last.residual
              << '\n';
  }
  output::write_sgd_summary(dir / "summary.json", cfg, result);
  std::cout << "wrote results to " << dir.string() << " (" << result.wall_seconds << " s)\n";
  return 0;
}

int run_mc(const config::ExperimentConfig& cfg) {
  write_config_echo(cfg);
  const auto stats = experiments::monte_carlo_state_stats(cfg);
  const fs::path dir(cfg.output);
  output::write_mc_table(dir / "state_stats.csv", stats);
  output::write_mc_summary(dir / "summary.json", cfg, stats);
  std::cout << "mc-stats: " << stats.samples << " samples, max |mean| " << stats.mean.cwiseAbs().maxCoeff()
            << ", max std " << stats.stddev.maxCoeff() << " (" << stats.wall_seconds << " s)\n";
  return 0;
}

bool report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
  return ok;
}

int run_selftest(std::uint64_t seed) {
  bool ok = true;

  std::vector<double> errors;
  for (int n : {8, 16, 32}) {
    const auto mesh = fem::build_mesh(n);
    const std::vector<double> ones(static_cast<std::size_t>(mesh.n_triangles()), 1.0);
    const double pi = std::acos(-1.0);
    const auto load = fem::assemble_load(mesh, [pi](double x1, double x2) {
      return 2.0 * pi * pi * std::sin(pi * x1) * std::sin(pi * x2);
    });
    const auto u = fem::solve_spd(fem::assemble_stiffness(mesh, ones), load);
    errors.push_back(fem::l2_error(mesh, u, [pi](double x1, double x2) {
      return std::sin(pi * x1) * std::sin(pi * x2);
    }));
  }
  const double order = std::log2(errors[1] / errors[2]);
  ok &= report("fem-order", order >= 1.8 && order <= 2.2, "observed L2 order " + std::to_string(order));

  objective::ProblemSpec spec;
  spec.n_div = 4;
  spec.s = 2;
  spec.theta_reg = 1e-3;
  const auto data = objective::make_problem(spec);
  surrogate::SurrogateSpec sspec;
  sspec.degree = 1;
  const auto sur = surrogate::make_surrogate(sspec, data.s(), data.n_dof());
  Rng rng(seed);
  const optim::OptState x{Vector::Random(data.n_dof()), sur->initial(surrogate::InitMode::scaled_uniform, rng)};
  const auto y = optim::uniform_sampler(data.s())(rng);
  const auto g = objective::grad_x(data, *sur, x, y, 10.0);
  double worst = 0.0;
  const Vector flat = x.flat();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    Vector p = flat;
    Vector m = flat;
    p[i] += 1e-6;
    m[i] -= 1e-6;
    const auto xp = optim::OptState::from_flat(p, data.n_dof());
    const auto xm = optim::OptState::from_flat(m, data.n_dof());
    const double fd = (objective::f_term(data, *sur, xp, y) + 10.0 * objective::g_term(data, *sur, xp, y) -
                       objective::f_term(data, *sur, xm, y) - 10.0 * objective::g_term(data, *sur, xm, y)) /
                      2e-6;
    worst = std::max(worst, std::abs(fd - g.flat()[i]) / std::max(1.0, std::abs(fd)));
  }
  ok &= report("gradient", worst <= 1e-5, "max relative deviation from finite differences " + std::to_string(worst));

  const auto samples = experiments::nested_samples(seed, data.s(), 16);
  const auto oracle = optim::linear_perm_oracle(
      data, dynamic_cast<const surrogate::LinearSurrogate&>(*sur), samples, 1.0);
  const optim::OptState x0{Vector::Zero(data.n_dof()), Vector::Zero(static_cast<Eigen::Index>(sur->param_count()))};
  const auto lb = optim::batch_minimize(data, *sur, x0, samples, 1.0, 1e-11, 20000);
  const double gap = (lb.x - oracle).norm() / (1.0 + oracle.norm());
  ok &= report("oracle", gap <= 1e-6, "L-BFGS vs quadratic oracle relative gap " + std::to_string(gap));

  const int counts[] = {
      static_cast<int>(surrogate::make_surrogate({"legendre", 1, {}, surrogate::InitMode::ones}, 4, 49)->param_count()),
      static_cast<int>(surrogate::make_surrogate({"legendre", 2, {}, surrogate::InitMode::ones}, 4, 49)->param_count()),
      static_cast<int>(surrogate::make_surrogate({"legendre", 3, {}, surrogate::InitMode::ones}, 4, 49)->param_count()),
      static_cast<int>(surrogate::make_surrogate({"nn", 0, {9, 9, 9}, surrogate::InitMode::ones}, 4, 49)->param_count())};
  ok &= report("param-counts", counts[0] == 245 && counts[1] == 735 && counts[2] == 1715 && counts[3] == 715,
               std::to_string(counts[0]) + " " + std::to_string(counts[1]) + " " + std::to_string(counts[2]) +
                   " " + std::to_string(counts[3]));
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-shot surrogate learning for optimal control under uncertainty"};
  app.require_subcommand(1);

  CommonFlags flags;
  struct Entry {
    const char* name;
    const char* help;
    config::ExperimentId id;
  };
  const Entry entries[] = {
      {"rate-n", "Error of the pERM solution against the sample size", config::ExperimentId::rate_n},
      {"rate-lambda", "Error of the pERM solution against the penalty", config::ExperimentId::rate_lambda},
      {"rate-combined", "Joint increase of samples and penalty", config::ExperimentId::rate_combined},
      {"sgd-compare", "Stochastic solver per surrogate against the reduced reference",
       config::ExperimentId::sgd_compare},
      {"mc-stats", "Monte Carlo mean and standard deviation of the state", config::ExperimentId::mc_stats},
  };
  std::vector<std::pair<CLI::App*, config::ExperimentId>> commands;
  for (const auto& e : entries) {
    CLI::App* cmd = app.add_subcommand(e.name, e.help);
    add_common(cmd, flags);
    commands.emplace_back(cmd, e.id);
  }
  CLI::App* selftest = app.add_subcommand("selftest", "Quick consistency checks");
  add_common(selftest, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (selftest->parsed()) return run_selftest(flags.seed.value_or(1));
    for (const auto& [cmd, id] : commands) {
      if (!cmd->parsed()) continue;
      const auto cfg = resolve(flags, id);
      switch (id) {
        case config::ExperimentId::sgd_compare:
          return run_sgd(cfg);
        case config::ExperimentId::mc_stats:
          return run_mc(cfg);
        default:
          return run_rate(cfg);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
