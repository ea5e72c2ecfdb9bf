#include "oneshot/output.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

#include <nlohmann/json.hpp>

#include "oneshot/error.hpp"

namespace oneshot::output {

using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw InvalidArgument("cannot read '" + path.string() + "'");
  return in;
}

json config_json(const config::ExperimentConfig& cfg) {
  const auto& p = cfg.problem;
  const auto& r = cfg.rate;
  const auto& g = cfg.sgd;
  return {
      {"experiment", {{"id", config::to_string(cfg.id)}, {"seed", cfg.seed}, {"output", cfg.output}}},
      {"mesh", {{"n_div", p.n_div}}},
      {"field", {{"s", p.s}, {"theta_decay", p.theta_decay}, {"tau", p.tau}}},
      {"objective",
       {{"alpha", p.alpha},
        {"theta_reg", p.theta_reg},
        {"control_norm", objective::to_string(p.control_norm)},
        {"target_scale", p.target_scale}}},
      {"surrogate",
       {{"kind", cfg.surrogate.kind},
        {"degree", cfg.surrogate.degree},
        {"hidden", cfg.surrogate.hidden},
        {"init", surrogate::to_string(cfg.surrogate.init)}}},
      {"rate",
       {{"solver", config::to_string(r.solver)},
        {"lambda", r.lambda},
        {"k_min", r.k_min},
        {"k_max", r.k_max},
        {"k_ref", r.k_ref},
        {"n_fixed", r.n_fixed},
        {"lambda_min", r.lambda_min},
        {"lambda_max", r.lambda_max},
        {"lambda_points", r.lambda_points},
        {"lambda_ref", r.lambda_ref},
        {"lambda_power", r.lambda_power},
        {"tol", r.tol},
        {"max_iter", r.max_iter}}},
      {"sgd",
       {{"surrogates", g.surrogates},
        {"n_iter", g.n_iter},
        {"rule", optim::to_string(g.rule)},
        {"step_kind", optim::to_string(g.steps.kind)},
        {"beta0", g.steps.beta0},
        {"k0", g.steps.k0},
        {"penalty_kind", optim::to_string(g.penalty.kind)},
        {"lambda0", g.penalty.lambda0},
        {"lambda_slope", g.penalty.slope},
        {"lambda_bar", g.penalty.lambda_bar},
        {"D", g.penalty.D},
        {"radius", g.radius},
        {"init_linear", surrogate::to_string(g.init_linear)},
        {"init_nn", surrogate::to_string(g.init_nn)},
        {"n_reference", g.n_reference},
        {"n_heldout", g.n_heldout},
        {"checkpoints", g.checkpoints},
        {"log_stride", g.log_stride},
        {"theta_format", g.theta_format}}},
      {"mc", {{"samples", cfg.mc.samples}, {"load_scale", cfg.mc.load_scale}}},
  };
}

void write_json(const fs::path& path, const json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

void write_rate_csv(const fs::path& path, const experiments::RateCurve& curve) {
  auto out = open_out(path);
  out << "abscissa,squared_error_control,squared_error_theta\n";
  for (std::size_t i = 0; i < curve.fit.abscissae.size(); ++i) {
    out << curve.fit.abscissae[i] << ',' << curve.control_errors[i] << ',' << curve.theta_errors[i] << '\n';
  }
}

void write_rate_summary(const fs::path& path, const config::ExperimentConfig& cfg,
                        const experiments::RateCurve& curve) {
  write_json(path, {{"config", config_json(cfg)},
                    {"rate_fit",
                     {{"abscissae", curve.fit.abscissae},
                      {"squared_errors", curve.fit.squared_errors},
                      {"slope", curve.fit.slope},
                      {"intercept", curve.fit.intercept},
                      {"residual", curve.fit.residual}}},
                    {"wall_seconds", curve.wall_seconds}});
}

void write_penalty_log(const fs::path& path, const optim::PenaltyRun& run) {
  auto out = open_out(path);
  out << "k,beta,lambda,objective,distance\n";
  for (const auto& r : run.log) {
    out << r.k << ',' << r.beta << ',' << r.lambda << ',' << r.objective << ',' << r.distance << '\n';
  }
}

void write_sgd_checkpoints(const fs::path& path, const experiments::SgdTrace& trace) {
  auto out = open_out(path);
  out << "iteration,lambda,control_error,state_error,residual,target_misfit\n";
  for (const auto& c : trace.checkpoints) {
    out << c.iteration << ',' << c.lambda << ',' << c.control_error << ',' << c.state_error << ','
        << c.residual << ',' << c.target_misfit << '\n';
  }
}

void write_sgd_summary(const fs::path& path, const config::ExperimentConfig& cfg,
                       const experiments::SgdComparison& result) {
  json traces = json::array();
  for (const auto& t : result.traces) {
    const auto& first = t.checkpoints.front();
    const auto& last = t.checkpoints.back();
    traces.push_back({{"surrogate", t.label},
                      {"param_count", t.param_count},
                      {"iterations", t.run.iterations},
                      {"seed", t.run.seed},
                      {"initial_control_error", first.control_error},
                      {"final_control_error", last.control_error},
                      {"final_state_error", last.state_error},
                      {"final_residual", last.residual},
                      {"final_target_misfit", last.target_misfit}});
  }
  write_json(path, {{"config", config_json(cfg)},
                    {"reference_control_norm2", result.z_ref.squaredNorm()},
                    {"surrogates", traces},
                    {"wall_seconds", result.wall_seconds}});
}

void write_mc_table(const fs::path& path, const experiments::McStats& stats) {
  auto out = open_out(path);
  out << "x1,x2,mean,std,mean_minus_1std,mean_plus_1std,mean_minus_2std,mean_plus_2std\n";
  for (std::size_t node = 0; node < stats.mesh.nodes.size(); ++node) {
    const int dof = stats.mesh.interior_map[node];
    const double m = dof >= 0 ? stats.mean[dof] : 0.0;
    const double sd = dof >= 0 ? stats.stddev[dof] : 0.0;
    const auto& p = stats.mesh.nodes[node];
    out << p.x1 << ',' << p.x2 << ',' << m << ',' << sd << ',' << m - sd << ',' << m + sd << ','
        << m - 2.0 * sd << ',' << m + 2.0 * sd << '\n';
  }
}

void write_mc_summary(const fs::path& path, const config::ExperimentConfig& cfg,
                      const experiments::McStats& stats) {
  write_json(path, {{"config", config_json(cfg)},
                    {"samples", stats.samples},
                    {"max_mean", stats.mean.cwiseAbs().maxCoeff()},
                    {"max_std", stats.stddev.maxCoeff()},
                    {"wall_seconds", stats.wall_seconds}});
}

void save_theta_json(const fs::path& path, const surrogate::Surrogate& sur, const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != sur.param_count()) {
    throw InvalidArgument("save_theta_json: parameter length mismatch");
  }
  write_json(path, {{"kind", sur.kind()},
                    {"flattening", sur.flattening()},
                    {"count", theta.size()},
                    {"theta", vector_json(theta)}});
}

ThetaRecord load_theta_json(const fs::path& path) {
  auto in = open_in(path);
  json doc;
  try {
    in >> doc;
    ThetaRecord rec;
    rec.kind = doc.at("kind").get<std::string>();
    rec.flattening = doc.at("flattening").get<std::string>();
    const auto values = doc.at("theta").get<std::vector<double>>();
    if (doc.at("count").get<std::size_t>() != values.size()) {
      throw InvalidArgument("load_theta_json: count does not match the stored values");
    }
    rec.theta = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    return rec;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("load_theta_json: ") + e.what());
  }
}

namespace {

constexpr char kMagic[8] = {'O', 'N', 'E', 'S', 'H', 'O', 'T', 'T'};

static_assert(std::endian::native == std::endian::little, "binary theta files assume little endian");

}  // namespace

void save_theta_binary(const fs::path& path, const surrogate::Surrogate& sur, const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != sur.param_count()) {
    throw InvalidArgument("save_theta_binary: parameter length mismatch");
  }
  const std::string header =
      json{{"kind", sur.kind()}, {"flattening", sur.flattening()}, {"count", theta.size()}}.dump();
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(theta.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(theta.size())));
  if (!out) throw InvalidArgument("save_theta_binary: write failed");
}

ThetaRecord load_theta_binary(const fs::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  char magic[8];
  std::uint64_t len = 0;
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw InvalidArgument("load_theta_binary: bad magic");
  }
  if (!in.read(reinterpret_cast<char*>(&len), sizeof len) || len > (1u << 20)) {
    throw InvalidArgument("load_theta_binary: bad header length");
  }
  std::string header(len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(len))) {
    throw InvalidArgument("load_theta_binary: truncated header");
  }
  ThetaRecord rec;
  std::size_t count = 0;
  try {
    const json doc = json::parse(header);
    rec.kind = doc.at("kind").get<std::string>();
    rec.flattening = doc.at("flattening").get<std::string>();
    count = doc.at("count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("load_theta_binary: ") + e.what());
  }
  rec.theta.resize(static_cast<Eigen::Index>(count));
  if (!in.read(reinterpret_cast<char*>(rec.theta.data()),
               static_cast<std::streamsize>(sizeof(double) * count))) {
    throw InvalidArgument("load_theta_binary: truncated payload");
  }
  return rec;
}

}  // namespace oneshot::output
