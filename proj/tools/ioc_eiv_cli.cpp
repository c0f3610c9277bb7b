#include "ioc_eiv/bench.hpp"
#include "ioc_eiv/error.hpp"
#include "ioc_eiv/forward.hpp"
#include "ioc_eiv/io.hpp"
#include "ioc_eiv/kkt_baseline.hpp"
#include "ioc_eiv/map_estimator.hpp"
#include "ioc_eiv/tls_estimator.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace ioc_eiv;
using io::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t parse_seed(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size() || s.front() == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string(what) + ": not a nonnegative integer: " + s);
  }
}

// --seed beats IOC_EIV_SEED beats the config.
std::uint64_t master_seed(const io::Config& cfg, const std::optional<std::string>& flag) {
  if (flag) return parse_seed(*flag, "--seed");
  if (const char* env = std::getenv("IOC_EIV_SEED")) return parse_seed(env, "IOC_EIV_SEED");
  return cfg.noise.seed;
}

void emit(const std::optional<std::string>& out, const std::string& text) {
  if (out) {
    io::write_text_file(*out, text);
  } else {
    std::cout << text;
  }
}

int cmd_forward(const std::string& config, const std::optional<std::string>& out) {
  const io::Config cfg = io::load_config(config);
  const ForwardProblem& fp = cfg.problem;
  if (!fp.theta_true()) throw Error("forward: the problem needs theta_true");
  const Vector& theta = *fp.theta_true();
  const forward::Solution sol = forward::solve(fp, theta);
  const KktResidual r = kkt_residual(fp, theta, sol.lambda, sol.U);
  auto inf = [](const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; };
  json j = {{"format", "ioc-eiv/forward"},
            {"version", 1},
            {"problem_id", io::problem_id(fp)},
            {"theta", io::to_json(theta)},
            {"U", io::to_json(sol.U)},
            {"lambda", io::to_json(sol.lambda)},
            {"active_set", sol.active_set},
            {"objective", sol.objective},
            {"kkt_residual",
             {{"stationarity", inf(r.stationarity)},
              {"complementarity", inf(r.complementarity)},
              {"primal", inf(r.primal_violation)},
              {"dual", inf(r.dual_violation)}}}};
  io::validate_forward_json(j);
  emit(out, j.dump(2) + "\n");
  std::ostream& log = out ? std::cout : std::cerr;
  log << "kkt residual (max abs)\n";
  for (const char* key : {"stationarity", "complementarity", "primal", "dual"}) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "  %-16s %.3e\n", key, j["kkt_residual"][key].get<double>());
    log << buf;
  }
  return 0;
}

int cmd_demos(const std::string& config, std::optional<double> level, const std::optional<std::string>& seed_flag,
              const std::optional<std::string>& out) {
  const io::Config cfg = io::load_config(config);
  const ForwardProblem& fp = cfg.problem;
  if (!fp.theta_true()) throw Error("demos: the problem needs theta_true");
  const double pct = level ? *level : cfg.noise.levels.front();
  if (!(pct >= 0.0)) throw UsageError("--level must be nonnegative");
  const std::uint64_t seed = master_seed(cfg, seed_flag);
  const Vector U_star = forward::solve(fp, *fp.theta_true()).U;
  const NoiseSpec spec = io::noise_at_level(cfg.noise, U_star, fp.m(), pct, seed);
  DemoSet ds = generate(U_star, spec, cfg.demo_count);
  ds.x0 = fp.x0();
  ds.problem_id = io::problem_id(fp);
  ds.U_star = U_star;
  json noise = {{"kind", to_string(spec.kind)}, {"level_percent", pct}, {"seed", seed}};
  const json j = io::demo_set_to_json(ds, noise);
  io::validate_demo_set_json(j);
  emit(out, j.dump(2) + "\n");
  return 0;
}

int cmd_estimate(const std::string& config, const std::string& method, const std::string& demos_path,
                 const std::optional<std::string>& seed_flag, const std::optional<std::string>& out) {
  const auto& known = io::known_methods();
  if (std::find(known.begin(), known.end(), method) == known.end())
    throw UsageError("unknown method \"" + method + "\" (expected kkt, map, tls or mean)");
  const io::Config cfg = io::load_config(config);
  const ForwardProblem& fp = cfg.problem;
  const DemoSet ds = io::demo_set_from_json(io::read_json_file(demos_path));
  const std::string pid = io::problem_id(fp);
  if (ds.problem_id != pid) throw Error("demos were generated for problem " + ds.problem_id + ", config is " + pid);
  if (ds.length() != fp.input_length()) throw DimensionError("demo length does not match the problem");

  std::optional<Vector> U_star = ds.U_star;
  if (!U_star && fp.theta_true()) U_star = forward::solve(fp, *fp.theta_true()).U;

  io::EstimateReport rep;
  rep.method = method;
  rep.problem_id = pid;
  const Vector U_mean = sample_mean(ds);
  if (method == "kkt") {
    const kkt::Estimate e = kkt::kkt_ls(ds.demos, fp, cfg.norm);
    rep.theta = e.theta;
    json lambdas = json::array();
    for (const auto& l : e.lambdas) lambdas.push_back(io::to_json(l));
    rep.traces = {{"residual", e.residual}, {"lambda_per_demo", lambdas}};
  } else if (method == "map") {
    Rng rng = make_substream(master_seed(cfg, seed_flag), 1);
    const map::MapResult r = map::estimate(ds, fp, cfg.map, rng);
    rep.theta = r.theta;
    rep.lambda = r.lambda;
    rep.U_hat = r.U_hat;
    rep.Sigma_U = r.Sigma_U_hat;
    rep.traces = {{"cost", r.cost_trace},
                  {"outer_iterations", r.outer_iterations},
                  {"converged", r.converged},
                  {"gibbs",
                   {{"retained", r.gibbs_diag.retained},
                    {"acceptance", {{"beta", r.gibbs_diag.acceptance.beta},
                                    {"U", r.gibbs_diag.acceptance.U},
                                    {"Sigma_U", r.gibbs_diag.acceptance.Sigma_U}}}}}};
    for (const auto& w : r.gibbs_diag.warnings) rep.notes.push_back("gibbs: " + w);
  } else if (method == "tls") {
    const tls::TlsResult r = tls::estimate(ds, fp, cfg.tls);
    rep.theta = r.theta;
    rep.lambda = r.lambda;
    rep.U_hat = r.U_hat;
    rep.Sigma_U = r.Sigma_U_hat;
    json outer = json::array();
    for (const auto& o : r.outer_trace)
      outer.push_back({{"cost", o.cost}, {"sigma_delta", o.sigma_delta}, {"path", tls::to_string(o.path)}});
    rep.traces = {{"outer", outer}, {"inner", r.inner_traces}, {"converged", r.converged}};
    if (!r.converged) rep.notes.push_back("tls: covariance iteration stopped at max_outer_iters");
  } else {
    rep.U_hat = U_mean;
  }
  if (rep.theta && fp.theta_true()) {
    rep.theta_rescaled = rescale_to_l1(*rep.theta, *fp.theta_true());
    rep.rmse_theta = rmse(*rep.theta_rescaled, *fp.theta_true());
  }
  if (U_star) {
    if (rep.U_hat) rep.rmse_U = rmse(*rep.U_hat, *U_star);
    rep.rmse_U_mean = rmse(U_mean, *U_star);
  }
  const json j = io::to_json(rep);
  io::validate_report_json(j);
  emit(out, j.dump(2) + "\n");
  return 0;
}

int cmd_bench(const std::string& config, int jobs, const std::optional<std::string>& seed_flag,
              const std::optional<std::string>& out) {
  if (jobs < 1) throw UsageError("--jobs must be >= 1");
  const io::Config cfg = io::load_config(config);
  const std::uint64_t seed = master_seed(cfg, seed_flag);
  const std::string dir = out ? *out : cfg.output;
  const auto cells = bench::run_and_write(cfg, seed, jobs, dir);
  std::cout << bench::summary_csv(cells);
  if (!bench::all_cells_ok(cells)) {
    std::cerr << "bench: at least one (method, level) cell has no successful repetition\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse optimal control from noisy demonstrations"};
  app.name("ioc-eiv");
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> out;
  std::optional<std::string> seed;

  auto* fwd = app.add_subcommand("forward", "Solve the forward problem at theta_true and check its KKT residual");
  fwd->add_option("config", config, "Config JSON")->required();
  fwd->add_option("--out", out, "Output JSON (default: stdout)");

  std::optional<double> level;
  auto* dem = app.add_subcommand("demos", "Generate noisy demonstrations");
  dem->add_option("config", config, "Config JSON")->required();
  dem->add_option("--level", level, "Noise level in percent (default: first configured level)");
  dem->add_option("--seed", seed, "Noise seed (default: IOC_EIV_SEED, then the config)");
  dem->add_option("--out", out, "Output JSON (default: stdout)");

  std::string method, demos_path;
  auto* est = app.add_subcommand("estimate", "Estimate theta from a demo set");
  est->add_option("config", config, "Config JSON")->required();
  est->add_option("--method", method, "kkt, map, tls or mean")->required();
  est->add_option("--demos", demos_path, "Demo set JSON")->required();
  est->add_option("--seed", seed, "Sampler seed for map (default: IOC_EIV_SEED, then the config)");
  est->add_option("--out", out, "Output JSON (default: stdout)");

  int jobs = 1;
  auto* ben = app.add_subcommand("bench", "Run every method over noise levels and repetitions");
  ben->add_option("config", config, "Config JSON")->required();
  ben->add_option("--jobs", jobs, "Concurrent repetitions");
  ben->add_option("--seed", seed, "Master seed (default: IOC_EIV_SEED, then the config)");
  ben->add_option("--out", out, "Output directory (default: the config's output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*fwd) return cmd_forward(config, out);
    if (*dem) return cmd_demos(config, level, seed, out);
    if (*est) return cmd_estimate(config, method, demos_path, seed, out);
    if (*ben) return cmd_bench(config, jobs, seed, out);
  } catch (const UsageError& e) {
    std::cerr << "ioc-eiv: usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ioc-eiv: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
