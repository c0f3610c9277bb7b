#pragma once

#include "ioc_eiv/io.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ioc_eiv::bench {

struct Row {
  std::string method;
  double level = 0.0;
  int rep = 0;
  std::uint64_t seed = 0;
  std::optional<double> rmse_theta;  // theta rescaled to |theta*|_1
  std::optional<double> rmse_U;
  double wall_time_seconds = 0.0;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

struct Cell {
  std::string method;
  double level = 0.0;
  int n_ok = 0;
  int n_total = 0;
  std::optional<double> theta_mean, theta_std, theta_median;
  std::optional<double> U_mean, U_std, U_median;
  double wall_mean = 0.0;
};

/// Demonstrations for one (level, rep) job: noise seed = master_seed + rep.
DemoSet job_demos(const io::Config& cfg, const Vector& U_star, double level, int rep, std::uint64_t master_seed);

/// All methods on one job, in config order.
std::vector<Row> run_job(const io::Config& cfg, const Vector& U_star, std::size_t level_index, int rep,
                         std::uint64_t master_seed);

/// Reference implementation: jobs one after another.
std::vector<Row> run_bench_serial(const io::Config& cfg, std::uint64_t master_seed);

/// Jobs spread over `jobs` OpenMP threads; same rows as run_bench_serial.
std::vector<Row> run_bench_parallel(const io::Config& cfg, std::uint64_t master_seed, int jobs);

/// Per (method, level) statistics over the ok rows.
std::vector<Cell> summarize(const io::Config& cfg, const std::vector<Row>& rows);

/// True when every cell has at least one ok row.
bool all_cells_ok(const std::vector<Cell>& cells);

// Output files. rows.csv carries no timings so reruns compare byte for byte.
std::string rows_csv(const std::vector<Row>& rows);
std::string timings_csv(const std::vector<Row>& rows);
std::string summary_csv(const std::vector<Cell>& cells);
io::json summary_json(const io::Config& cfg, const std::vector<Cell>& cells, std::uint64_t master_seed);

/// Runs the bench and writes rows.csv, summary.csv, summary.json and
/// timings.csv into `out_dir`. Returns the cells.
std::vector<Cell> run_and_write(const io::Config& cfg, std::uint64_t master_seed, int jobs,
                                const std::string& out_dir);

double median(std::vector<double> v);

}  // namespace ioc_eiv::bench
