#include "ioc_eiv/bench.hpp"

#include "ioc_eiv/error.hpp"
#include "ioc_eiv/forward.hpp"
#include "ioc_eiv/kkt_baseline.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <locale>
#include <sstream>

namespace ioc_eiv::bench {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(12);
  os << v;
  return os.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

// Keeps CSV fields free of separators and quotes.
std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = c == ',' ? ';' : ' ';
  return s;
}

Vector true_inputs(const io::Config& cfg) {
  if (!cfg.problem.theta_true()) throw Error("bench: the problem needs theta_true");
  return forward::solve(cfg.problem, *cfg.problem.theta_true()).U;
}

struct Stats {
  double mean = 0.0, std = 0.0, median = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  s.median = median(v);
  return s;
}

std::size_t method_index(const io::Config& cfg, const std::string& m) {
  return static_cast<std::size_t>(std::find(cfg.methods.begin(), cfg.methods.end(), m) - cfg.methods.begin());
}

// Flattens per-job rows into (method, level, rep) order.
std::vector<Row> order_rows(const io::Config& cfg, std::vector<std::vector<Row>> per_job) {
  std::vector<Row> rows;
  for (auto& job : per_job)
    for (auto& r : job) rows.push_back(std::move(r));
  std::vector<double> levels = cfg.noise.levels;
  auto level_index = [&](double l) { return std::find(levels.begin(), levels.end(), l) - levels.begin(); };
  std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    const auto ka = std::make_tuple(method_index(cfg, a.method), level_index(a.level), a.rep);
    const auto kb = std::make_tuple(method_index(cfg, b.method), level_index(b.level), b.rep);
    return ka < kb;
  });
  return rows;
}

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

DemoSet job_demos(const io::Config& cfg, const Vector& U_star, double level, int rep, std::uint64_t master_seed) {
  const std::uint64_t seed = master_seed + static_cast<std::uint64_t>(rep);
  const NoiseSpec spec = io::noise_at_level(cfg.noise, U_star, cfg.problem.m(), level, seed);
  DemoSet ds = generate(U_star, spec, cfg.demo_count);
  ds.x0 = cfg.problem.x0();
  ds.problem_id = io::problem_id(cfg.problem);
  ds.U_star = U_star;
  return ds;
}

std::vector<Row> run_job(const io::Config& cfg, const Vector& U_star, std::size_t level_index, int rep,
                         std::uint64_t master_seed) {
  const double level = cfg.noise.levels.at(level_index);
  const std::uint64_t seed = master_seed + static_cast<std::uint64_t>(rep);
  const Vector& theta_star = *cfg.problem.theta_true();
  std::vector<Row> rows;
  std::optional<DemoSet> ds;
  std::string demo_error;
  try {
    ds = job_demos(cfg, U_star, level, rep, master_seed);
  } catch (const Error& e) {
    demo_error = e.what();
  }
  for (const auto& method : cfg.methods) {
    Row row;
    row.method = method;
    row.level = level;
    row.rep = rep;
    row.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (!ds) throw Error("demo generation: " + demo_error);
      if (method == "kkt") {
        const kkt::Estimate e = kkt::kkt_ls(ds->demos, cfg.problem, cfg.norm);
        row.rmse_theta = rmse(rescale_to_l1(e.theta, theta_star), theta_star);
      } else if (method == "map") {
        Rng rng = make_substream(seed, 1 + level_index);
        const map::MapResult r = map::estimate(*ds, cfg.problem, cfg.map, rng);
        row.rmse_theta = rmse(rescale_to_l1(r.theta, theta_star), theta_star);
        row.rmse_U = rmse(r.U_hat, U_star);
      } else if (method == "tls") {
        const tls::TlsResult r = tls::estimate(*ds, cfg.problem, cfg.tls);
        row.rmse_theta = rmse(rescale_to_l1(r.theta, theta_star), theta_star);
        row.rmse_U = rmse(r.U_hat, U_star);
      } else if (method == "mean") {
        row.rmse_U = rmse(sample_mean(*ds), U_star);
      } else {
        throw Error("unknown method " + method);
      }
    } catch (const Error& e) {
      row.status = "failed(" + sanitize(e.what()) + ")";
      row.rmse_theta.reset();
      row.rmse_U.reset();
    }
    row.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Row> run_bench_serial(const io::Config& cfg, std::uint64_t master_seed) {
  const Vector U_star = true_inputs(cfg);
  std::vector<std::vector<Row>> per_job;
  for (std::size_t l = 0; l < cfg.noise.levels.size(); ++l)
    for (int rep = 0; rep < cfg.reps; ++rep) per_job.push_back(run_job(cfg, U_star, l, rep, master_seed));
  return order_rows(cfg, std::move(per_job));
}

std::vector<Row> run_bench_parallel(const io::Config& cfg, std::uint64_t master_seed, int jobs) {
  const Vector U_star = true_inputs(cfg);
  const int levels = static_cast<int>(cfg.noise.levels.size());
  const int total = levels * cfg.reps;
  std::vector<std::vector<Row>> per_job(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(jobs, 1))
  for (int j = 0; j < total; ++j)
    per_job[static_cast<std::size_t>(j)] =
        run_job(cfg, U_star, static_cast<std::size_t>(j / cfg.reps), j % cfg.reps, master_seed);
  return order_rows(cfg, std::move(per_job));
}

std::vector<Cell> summarize(const io::Config& cfg, const std::vector<Row>& rows) {
  std::vector<Cell> cells;
  for (const auto& method : cfg.methods) {
    for (double level : cfg.noise.levels) {
      Cell c;
      c.method = method;
      c.level = level;
      std::vector<double> th, u;
      double wall = 0.0;
      for (const auto& r : rows) {
        if (r.method != method || r.level != level) continue;
        ++c.n_total;
        wall += r.wall_time_seconds;
        if (!r.ok()) continue;
        ++c.n_ok;
        if (r.rmse_theta) th.push_back(*r.rmse_theta);
        if (r.rmse_U) u.push_back(*r.rmse_U);
      }
      if (c.n_total > 0) c.wall_mean = wall / c.n_total;
      if (!th.empty()) {
        const Stats s = stats(th);
        c.theta_mean = s.mean;
        c.theta_std = s.std;
        c.theta_median = s.median;
      }
      if (!u.empty()) {
        const Stats s = stats(u);
        c.U_mean = s.mean;
        c.U_std = s.std;
        c.U_median = s.median;
      }
      cells.push_back(std::move(c));
    }
  }
  return cells;
}

bool all_cells_ok(const std::vector<Cell>& cells) {
  return std::all_of(cells.begin(), cells.end(), [](const Cell& c) { return c.n_ok >= 1; });
}

std::string rows_csv(const std::vector<Row>& rows) {
  std::string out = "method,noise_percent,rep,seed,rmse_theta,rmse_U,status\n";
  for (const auto& r : rows)
    out += r.method + "," + fmt(r.level) + "," + std::to_string(r.rep) + "," + std::to_string(r.seed) + "," +
           fmt(r.rmse_theta) + "," + fmt(r.rmse_U) + "," + r.status + "\n";
  return out;
}

std::string timings_csv(const std::vector<Row>& rows) {
  std::string out = "method,noise_percent,rep,wall_time_seconds\n";
  for (const auto& r : rows)
    out += r.method + "," + fmt(r.level) + "," + std::to_string(r.rep) + "," + fmt(r.wall_time_seconds) + "\n";
  return out;
}

std::string summary_csv(const std::vector<Cell>& cells) {
  std::string out = "method,level,rmse_theta_mean,rmse_theta_std,rmse_U_mean,rmse_U_std,n_ok\n";
  for (const auto& c : cells)
    out += c.method + "," + fmt(c.level) + "," + fmt(c.theta_mean) + "," + fmt(c.theta_std) + "," + fmt(c.U_mean) +
           "," + fmt(c.U_std) + "," + std::to_string(c.n_ok) + "\n";
  return out;
}

io::json summary_json(const io::Config& cfg, const std::vector<Cell>& cells, std::uint64_t master_seed) {
  auto opt = [](const std::optional<double>& v) { return v ? io::json(*v) : io::json(nullptr); };
  io::json arr = io::json::array();
  for (const auto& c : cells) {
    arr.push_back({{"method", c.method},
                   {"level", c.level},
                   {"n_ok", c.n_ok},
                   {"n_total", c.n_total},
                   {"rmse_theta", {{"mean", opt(c.theta_mean)}, {"std", opt(c.theta_std)}, {"median", opt(c.theta_median)}}},
                   {"rmse_U", {{"mean", opt(c.U_mean)}, {"std", opt(c.U_std)}, {"median", opt(c.U_median)}}},
                   {"wall_time_mean_seconds", c.wall_mean}});
  }
  return {{"format", "ioc-eiv/bench-summary"},
          {"version", 1},
          {"problem_id", io::problem_id(cfg.problem)},
          {"master_seed", master_seed},
          {"demos", cfg.demo_count},
          {"reps", cfg.reps},
          {"normalization", io::to_json(cfg.norm)},
          {"cells", std::move(arr)}};
}

std::vector<Cell> run_and_write(const io::Config& cfg, std::uint64_t master_seed, int jobs,
                                const std::string& out_dir) {
  const std::vector<Row> rows =
      jobs <= 1 ? run_bench_serial(cfg, master_seed) : run_bench_parallel(cfg, master_seed, jobs);
  const std::vector<Cell> cells = summarize(cfg, rows);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  io::write_text_file((dir / "rows.csv").string(), rows_csv(rows));
  io::write_text_file((dir / "summary.csv").string(), summary_csv(cells));
  io::write_text_file((dir / "summary.json").string(), summary_json(cfg, cells, master_seed).dump(2) + "\n");
  io::write_text_file((dir / "timings.csv").string(), timings_csv(rows));
  return cells;
}

}  // namespace ioc_eiv::bench
