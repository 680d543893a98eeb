#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "replab/hardcase.hpp"
#include "replab/io.hpp"

namespace replab {

struct ExperimentConfig {
  std::vector<int> n_T_grid{32, 64, 128, 256};
  double d_multiplier = 1.0;    // d = round(d_multiplier * n_T)
  int k = 2;
  double noise_sigma = 2.0;
  int T = 1000;
  double n_S_multiplier = 10.0; // n_S = round(n_S_multiplier * d)
  int restarts = 10;
  int replications = 1000;
  int worst_case_M = 64;
  int worst_case_inner_reps = 10;
  int t_pgd = 10000;
  int t_pgd_search = 2000;
  int source_iters = 500;
  double balance_weight = 0.5;
  double lambda = -1;  // < 0 selects sigma * sqrt(tr Sigma / n_S)
  double gamma = -1;
  std::vector<std::string> methods{"adaptrep", "frozenrep", "ols_baseline"};
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 0;  // 0 = hardware concurrency
};

json experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const json& j);

// Hash of the canonical config serialization; identical for every record
// of one run.
std::string config_hash(const ExperimentConfig& cfg);

// Multiplies T, replications and the worst-case candidate count M by f,
// flooring each at 10.
ExperimentConfig apply_scale(ExperimentConfig cfg, double f);

struct ExperimentRecord {
  std::string method;
  int d = 0;
  int n_T = 0;
  int replication = 0;
  double excess_risk = 0;
  double sine_dist = 0;
  double wall_time_ms = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string error;
};

void write_records_csv(const std::vector<ExperimentRecord>& records,
                       const std::filesystem::path& path);
std::vector<ExperimentRecord> read_records_csv(
    const std::filesystem::path& path);

// Equality of two record sets modulo the timing column.
bool records_equal_modulo_timing(const std::vector<ExperimentRecord>& a,
                                 const std::vector<ExperimentRecord>& b);

struct CellSummary {
  std::string method;
  int d = 0;
  int n_T = 0;
  double sine = 0;
  double median_risk = 0;
  double mean_risk = 0;
  double worst_case_search_risk = 0;
  int selected_restart = -1;
  std::string error;
};

struct SeparationResult {
  std::string hash;
  std::vector<ExperimentRecord> records;
  std::vector<CellSummary> cells;
};

// The hard-case separation study: per grid point builds the corollary-preset
// environment (eps = k/d), trains both source objectives with restarts,
// selects each method's restart by worst-case target performance, then
// evaluates the selected representation over `replications` i.i.d. target
// dataset draws. ols_baseline runs plain least squares on the same grid.
SeparationResult run_separation(const ExperimentConfig& cfg,
                                std::ostream* log = nullptr);

// Writes records.csv, sine.csv, risk.csv, sine.svg, risk.svg.
void write_separation_outputs(const SeparationResult& result,
                              const std::filesystem::path& out_dir);

// Target-time fine-tuning spec used for a hard-case environment:
// beta = sqrt(n_T), c1 = delta0, c2 = r sqrt(kappa).
AdaptSpec hardcase_adapt_spec(const TaskEnvironment& env, int n_T, int t_pgd);

// ---------------------------------------------------------------------------
// Rate-scaling study (shared-representation environment, delta0 = 0)
// ---------------------------------------------------------------------------

struct RateScalingConfig {
  int d = 16;
  int k = 2;
  double noise_sigma = 1.0;
  int n_S = 160;
  std::vector<int> T_grid{32, 64, 128, 256};
  int n_T = 8000;
  int replications = 20;
  int restarts = 3;
  int source_iters = 400;
  int t_pgd = 10000;
  std::uint64_t seed = 7;
  int threads = 0;
};

struct RateScalingResult {
  std::vector<double> n_S_T;         // swept product
  std::vector<double> median_risk;   // per grid point
  double slope = 0;                  // log-log least-squares slope
};

RateScalingResult run_rate_scaling(const RateScalingConfig& cfg,
                                   std::ostream* log = nullptr);

double median(std::vector<double> values);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x,
                    const std::vector<double>& y);

}  // namespace replab
