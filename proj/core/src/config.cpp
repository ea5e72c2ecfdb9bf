#include "oneshot/config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "oneshot/error.hpp"

namespace oneshot::config {

namespace pt = boost::property_tree;

ExperimentId parse_experiment_id(std::string_view name) {
  if (name == "rate-n") return ExperimentId::rate_n;
  if (name == "rate-lambda") return ExperimentId::rate_lambda;
  if (name == "rate-combined") return ExperimentId::rate_combined;
  if (name == "sgd-compare") return ExperimentId::sgd_compare;
  if (name == "mc-stats") return ExperimentId::mc_stats;
  throw InvalidArgument("unknown experiment id '" + std::string(name) + "'");
}

std::string_view to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::rate_n:
      return "rate-n";
    case ExperimentId::rate_lambda:
      return "rate-lambda";
    case ExperimentId::rate_combined:
      return "rate-combined";
    case ExperimentId::sgd_compare:
      return "sgd-compare";
    case ExperimentId::mc_stats:
      return "mc-stats";
  }
  return "rate-n";
}

PermSolver parse_perm_solver(std::string_view name) {
  if (name == "oracle") return PermSolver::oracle;
  if (name == "lbfgs") return PermSolver::lbfgs;
  throw InvalidArgument("unknown pERM solver '" + std::string(name) + "'");
}

std::string_view to_string(PermSolver solver) {
  return solver == PermSolver::oracle ? "oracle" : "lbfgs";
}

ExperimentConfig default_config(ExperimentId id) {
  ExperimentConfig cfg;
  cfg.id = id;
  cfg.output = "results/" + std::string(to_string(id));
  cfg.surrogate.kind = "legendre";
  cfg.surrogate.degree = 2;
  switch (id) {
    case ExperimentId::rate_n:
      cfg.problem.theta_reg = 1e-5;
      break;
    case ExperimentId::rate_lambda:
      cfg.problem.theta_reg = 1e-5;
      break;
    case ExperimentId::rate_combined:
      cfg.problem.theta_reg = 1e-5;
      cfg.rate.k_max = 9;
      cfg.rate.k_ref = 11;
      break;
    case ExperimentId::sgd_compare:
    case ExperimentId::mc_stats:
      break;
  }
  return cfg;
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first != std::string::npos) out.push_back(item.substr(first, last - first + 1));
  }
  return out;
}

template <class T>
void read(const pt::ptree& tree, const char* key, T& target) {
  if (tree.get_child_optional(key)) target = tree.get<T>(key);
}

template <class T, class Parse>
void read_enum(const pt::ptree& tree, const char* key, T& target, Parse parse) {
  if (const auto v = tree.get_optional<std::string>(key)) target = parse(*v);
}

const char* const kKnownKeys[] = {
    "experiment.id",           "experiment.seed",         "experiment.output",
    "mesh.n_div",              "field.s",                 "field.theta_decay",
    "field.tau",               "objective.alpha",         "objective.theta_reg",
    "objective.control_norm",  "objective.target_scale",  "surrogate.kind",
    "surrogate.degree",        "surrogate.hidden",        "surrogate.init",
    "rate.solver",             "rate.lambda",             "rate.k_min",
    "rate.k_max",              "rate.k_ref",              "rate.n_fixed",
    "rate.lambda_min",         "rate.lambda_max",         "rate.lambda_points",
    "rate.lambda_ref",         "rate.lambda_power",       "rate.tol",
    "rate.max_iter",           "sgd.surrogates",          "sgd.n_iter",
    "sgd.rule",                "sgd.step_kind",           "sgd.beta0",
    "sgd.k0",                  "sgd.penalty_kind",        "sgd.lambda0",
    "sgd.lambda_slope",        "sgd.lambda_bar",          "sgd.D",
    "sgd.radius",              "sgd.init_linear",         "sgd.init_nn",
    "sgd.n_reference",         "sgd.n_heldout",           "sgd.checkpoints",
    "sgd.log_stride",          "sgd.theta_format",        "mc.samples",
    "mc.load_scale",
};

void reject_unknown(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      bool known = false;
      for (const char* k : kKnownKeys) known = known || full == k;
      if (!known) throw InvalidArgument("config: unknown key '" + full + "'");
    }
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, ExperimentId fallback) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  reject_unknown(tree);

  ExperimentId id = fallback;
  read_enum(tree, "experiment.id", id, parse_experiment_id);
  ExperimentConfig cfg = default_config(id);
  try {
    read(tree, "experiment.seed", cfg.seed);
    read(tree, "experiment.output", cfg.output);

    auto& p = cfg.problem;
    read(tree, "mesh.n_div", p.n_div);
    read(tree, "field.s", p.s);
    read(tree, "field.theta_decay", p.theta_decay);
    read(tree, "field.tau", p.tau);
    read(tree, "objective.alpha", p.alpha);
    read(tree, "objective.theta_reg", p.theta_reg);
    read_enum(tree, "objective.control_norm", p.control_norm, objective::parse_control_norm);
    read(tree, "objective.target_scale", p.target_scale);

    auto& su = cfg.surrogate;
    read(tree, "surrogate.kind", su.kind);
    read(tree, "surrogate.degree", su.degree);
    if (const auto v = tree.get_optional<std::string>("surrogate.hidden")) {
      su.hidden.clear();
      for (const auto& item : split_list(*v)) su.hidden.push_back(std::stoi(item));
    }
    read_enum(tree, "surrogate.init", su.init, surrogate::parse_init_mode);

    auto& r = cfg.rate;
    read_enum(tree, "rate.solver", r.solver, parse_perm_solver);
    read(tree, "rate.lambda", r.lambda);
    read(tree, "rate.k_min", r.k_min);
    read(tree, "rate.k_max", r.k_max);
    read(tree, "rate.k_ref", r.k_ref);
    read(tree, "rate.n_fixed", r.n_fixed);
    read(tree, "rate.lambda_min", r.lambda_min);
    read(tree, "rate.lambda_max", r.lambda_max);
    read(tree, "rate.lambda_points", r.lambda_points);
    read(tree, "rate.lambda_ref", r.lambda_ref);
    read(tree, "rate.lambda_power", r.lambda_power);
    read(tree, "rate.tol", r.tol);
    read(tree, "rate.max_iter", r.max_iter);

    auto& g = cfg.sgd;
    if (const auto v = tree.get_optional<std::string>("sgd.surrogates")) g.surrogates = split_list(*v);
    read(tree, "sgd.n_iter", g.n_iter);
    read_enum(tree, "sgd.rule", g.rule, optim::parse_update_rule);
    read_enum(tree, "sgd.step_kind", g.steps.kind, optim::parse_step_kind);
    read(tree, "sgd.beta0", g.steps.beta0);
    read(tree, "sgd.k0", g.steps.k0);
    read_enum(tree, "sgd.penalty_kind", g.penalty.kind, optim::parse_penalty_kind);
    read(tree, "sgd.lambda0", g.penalty.lambda0);
    read(tree, "sgd.lambda_slope", g.penalty.slope);
    read(tree, "sgd.lambda_bar", g.penalty.lambda_bar);
    read(tree, "sgd.D", g.penalty.D);
    read(tree, "sgd.radius", g.radius);
    read_enum(tree, "sgd.init_linear", g.init_linear, surrogate::parse_init_mode);
    read_enum(tree, "sgd.init_nn", g.init_nn, surrogate::parse_init_mode);
    read(tree, "sgd.n_reference", g.n_reference);
    read(tree, "sgd.n_heldout", g.n_heldout);
    read(tree, "sgd.checkpoints", g.checkpoints);
    read(tree, "sgd.log_stride", g.log_stride);
    read(tree, "sgd.theta_format", g.theta_format);
    if (g.theta_format != "json" && g.theta_format != "binary") {
      throw InvalidArgument("config: sgd.theta_format must be json or binary");
    }

    read(tree, "mc.samples", cfg.mc.samples);
    read(tree, "mc.load_scale", cfg.mc.load_scale);
  } catch (const pt::ptree_bad_data& e) {
    throw InvalidArgument(std::string("config: malformed value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InvalidArgument(std::string("config: malformed list entry: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path, ExperimentId fallback) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), fallback);
}

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

}  // namespace

std::string to_ini(const ExperimentConfig& cfg) {
  std::ostringstream o;
  o << std::setprecision(17);
  o << "[experiment]\nid = " << to_string(cfg.id) << "\nseed = " << cfg.seed
    << "\noutput = " << cfg.output << "\n\n";
  const auto& p = cfg.problem;
  o << "[mesh]\nn_div = " << p.n_div << "\n\n";
  o << "[field]\ns = " << p.s << "\ntheta_decay = " << p.theta_decay << "\ntau = " << p.tau << "\n\n";
  o << "[objective]\nalpha = " << p.alpha << "\ntheta_reg = " << p.theta_reg
    << "\ncontrol_norm = " << objective::to_string(p.control_norm)
    << "\ntarget_scale = " << p.target_scale << "\n\n";
  const auto& su = cfg.surrogate;
  std::vector<std::string> hidden;
  for (int h : su.hidden) hidden.push_back(std::to_string(h));
  o << "[surrogate]\nkind = " << su.kind << "\ndegree = " << su.degree << "\nhidden = " << join(hidden)
    << "\ninit = " << surrogate::to_string(su.init) << "\n\n";
  const auto& r = cfg.rate;
  o << "[rate]\nsolver = " << to_string(r.solver) << "\nlambda = " << r.lambda << "\nk_min = " << r.k_min
    << "\nk_max = " << r.k_max << "\nk_ref = " << r.k_ref << "\nn_fixed = " << r.n_fixed
    << "\nlambda_min = " << r.lambda_min << "\nlambda_max = " << r.lambda_max
    << "\nlambda_points = " << r.lambda_points << "\nlambda_ref = " << r.lambda_ref
    << "\nlambda_power = " << r.lambda_power << "\ntol = " << r.tol << "\nmax_iter = " << r.max_iter
    << "\n\n";
  const auto& g = cfg.sgd;
  o << "[sgd]\nsurrogates = " << join(g.surrogates) << "\nn_iter = " << g.n_iter
    << "\nrule = " << optim::to_string(g.rule) << "\nstep_kind = " << optim::to_string(g.steps.kind)
    << "\nbeta0 = " << g.steps.beta0 << "\nk0 = " << g.steps.k0
    << "\npenalty_kind = " << optim::to_string(g.penalty.kind) << "\nlambda0 = " << g.penalty.lambda0
    << "\nlambda_slope = " << g.penalty.slope << "\nlambda_bar = " << g.penalty.lambda_bar
    << "\nD = " << g.penalty.D << "\nradius = " << g.radius << "\ninit_linear = " << surrogate::to_string(g.init_linear)
    << "\ninit_nn = " << surrogate::to_string(g.init_nn)
    << "\nn_reference = " << g.n_reference << "\nn_heldout = " << g.n_heldout
    << "\ncheckpoints = " << g.checkpoints << "\nlog_stride = " << g.log_stride
    << "\ntheta_format = " << g.theta_format << "\n\n";
  o << "[mc]\nsamples = " << cfg.mc.samples << "\nload_scale = " << cfg.mc.load_scale << "\n";
  return o.str();
}

}  // namespace oneshot::config
