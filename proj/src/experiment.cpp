#include "replab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>

#include "replab/metrics.hpp"
#include "replab/parallel.hpp"
#include "replab/svgplot.hpp"

namespace replab {

namespace {
constexpr std::uint64_t kStreamEnv = 0x01;
constexpr std::uint64_t kStreamSourceData = 0x02;
constexpr std::uint64_t kStreamTrain = 0x03;
constexpr std::uint64_t kStreamWorstCase = 0x04;
constexpr std::uint64_t kStreamEval = 0x05;
constexpr std::uint64_t kStreamRate = 0x10;

int method_id(const std::string& m) {
  if (m == "adaptrep") return 0;
  if (m == "frozenrep") return 1;
  if (m == "ols_baseline") return 2;
  throw std::invalid_argument("unknown method: " + m);
}
}  // namespace

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "experiment_config";
  j["n_T_grid"] = cfg.n_T_grid;
  j["d_multiplier"] = cfg.d_multiplier;
  j["k"] = cfg.k;
  j["noise_sigma"] = cfg.noise_sigma;
  j["T"] = cfg.T;
  j["n_S_multiplier"] = cfg.n_S_multiplier;
  j["restarts"] = cfg.restarts;
  j["replications"] = cfg.replications;
  j["worst_case_M"] = cfg.worst_case_M;
  j["worst_case_inner_reps"] = cfg.worst_case_inner_reps;
  j["t_pgd"] = cfg.t_pgd;
  j["t_pgd_search"] = cfg.t_pgd_search;
  j["source_iters"] = cfg.source_iters;
  j["balance_weight"] = cfg.balance_weight;
  j["lambda"] = cfg.lambda;
  j["gamma"] = cfg.gamma;
  j["methods"] = cfg.methods;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["threads"] = cfg.threads;
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  check_schema(j, "experiment_config");
  ExperimentConfig cfg;
  cfg.n_T_grid = j["n_T_grid"].get<std::vector<int>>();
  cfg.d_multiplier = j["d_multiplier"].get<double>();
  cfg.k = j["k"].get<int>();
  cfg.noise_sigma = j["noise_sigma"].get<double>();
  cfg.T = j["T"].get<int>();
  cfg.n_S_multiplier = j["n_S_multiplier"].get<double>();
  cfg.restarts = j["restarts"].get<int>();
  cfg.replications = j["replications"].get<int>();
  cfg.worst_case_M = j["worst_case_M"].get<int>();
  cfg.worst_case_inner_reps = j["worst_case_inner_reps"].get<int>();
  cfg.t_pgd = j["t_pgd"].get<int>();
  cfg.t_pgd_search = j["t_pgd_search"].get<int>();
  cfg.source_iters = j["source_iters"].get<int>();
  cfg.balance_weight = j["balance_weight"].get<double>();
  cfg.lambda = j["lambda"].get<double>();
  cfg.gamma = j["gamma"].get<double>();
  cfg.methods = j["methods"].get<std::vector<std::string>>();
  cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.out_dir = j["out_dir"].get<std::string>();
  cfg.threads = j["threads"].get<int>();
  if (cfg.n_T_grid.empty() || cfg.methods.empty())
    throw std::runtime_error("experiment config: empty grid or methods");
  for (int v : cfg.n_T_grid)
    if (v <= 0) throw std::runtime_error("experiment config: n_T <= 0");
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = experiment_config_to_json(cfg);
  j.erase("out_dir");  // location does not change the experiment
  j.erase("threads");
  return fnv1a_hex(j.dump());
}

ExperimentConfig apply_scale(ExperimentConfig cfg, double f) {
  if (f <= 0) throw std::invalid_argument("apply_scale: factor <= 0");
  auto scale = [&](int v) {
    return std::max(10, static_cast<int>(std::lround(v * f)));
  };
  cfg.T = scale(cfg.T);
  cfg.replications = scale(cfg.replications);
  cfg.worst_case_M = scale(cfg.worst_case_M);
  return cfg;
}

void write_records_csv(const std::vector<ExperimentRecord>& records,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "method,d,n_T,replication,excess_risk,sine_dist,wall_time_ms,seed,"
         "config_hash,error\n";
  for (const ExperimentRecord& r : records) {
    out << r.method << "," << r.d << "," << r.n_T << "," << r.replication
        << "," << format_double(r.excess_risk) << ","
        << format_double(r.sine_dist) << "," << format_double(r.wall_time_ms)
        << "," << r.seed << "," << r.config_hash << "," << r.error << "\n";
  }
}

std::vector<ExperimentRecord> read_records_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("records csv: empty file");
  std::vector<ExperimentRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    cells.resize(10);
    ExperimentRecord r;
    r.method = cells[0];
    r.d = std::stoi(cells[1]);
    r.n_T = std::stoi(cells[2]);
    r.replication = std::stoi(cells[3]);
    r.excess_risk = std::stod(cells[4]);
    r.sine_dist = std::stod(cells[5]);
    r.wall_time_ms = std::stod(cells[6]);
    r.seed = std::stoull(cells[7]);
    r.config_hash = cells[8];
    r.error = cells[9];
    out.push_back(std::move(r));
  }
  return out;
}

bool records_equal_modulo_timing(const std::vector<ExperimentRecord>& a,
                                 const std::vector<ExperimentRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const ExperimentRecord& x = a[i];
    const ExperimentRecord& y = b[i];
    if (x.method != y.method || x.d != y.d || x.n_T != y.n_T ||
        x.replication != y.replication || x.seed != y.seed ||
        x.config_hash != y.config_hash || x.error != y.error)
      return false;
    // NaN-safe exact comparison through the CSV formatting.
    if (format_double(x.excess_risk) != format_double(y.excess_risk) ||
        format_double(x.sine_dist) != format_double(y.sine_dist))
      return false;
  }
  return true;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double loglog_slope(const std::vector<double>& x,
                    const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

AdaptSpec hardcase_adapt_spec(const TaskEnvironment& env, int n_T, int t_pgd) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(env.Sigma);
  double kappa = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
  AdaptSpec spec;
  spec.mode = AdaptMode::full_adapt;
  spec.beta_scale = std::sqrt(static_cast<double>(n_T));
  spec.c1 = env.delta0;
  spec.c2 = env.target_w_radius * std::sqrt(kappa);
  spec.t_pgd = t_pgd;
  return spec;
}

namespace {

MethodRunner make_adapt_runner(const TaskEnvironment& env, int t_pgd) {
  return [&env, t_pgd](const Matrix& rep, const TargetTask& task,
                       const Dataset& ds) {
    AdaptSpec spec = hardcase_adapt_spec(env, ds.n, t_pgd);
    FineTuneResult res = finetune_linear(rep, ds, spec);
    return excess_risk_quadratic(res.theta_hat, task.theta_star, env.Sigma);
  };
}

MethodRunner make_ols_runner(const TaskEnvironment& env) {
  return [&env](const Matrix&, const TargetTask& task, const Dataset& ds) {
    Vector theta = min_norm_least_squares(ds.X, ds.y);
    return excess_risk_quadratic(theta, task.theta_star, env.Sigma);
  };
}

struct CellOutput {
  CellSummary summary;
  std::vector<ExperimentRecord> records;
};

CellOutput run_cell_method(const ExperimentConfig& cfg, const std::string& hash,
                           const TaskEnvironment& env,
                           std::span<const TaskStats> stats,
                           const std::string& method, int gi, int n_T,
                           const SourceSolution* trained, std::ostream* log) {
  const int mid = method_id(method);
  CellOutput out;
  out.summary.method = method;
  out.summary.d = env.d;
  out.summary.n_T = n_T;

  const bool is_ols = (method == "ols_baseline");
  MethodRunner search_runner =
      is_ols ? make_ols_runner(env) : make_adapt_runner(env, cfg.t_pgd_search);

  WorstCaseOptions wopt;
  wopt.candidates = cfg.worst_case_M;
  wopt.n_T = n_T;
  wopt.inner_reps = cfg.worst_case_inner_reps;
  wopt.seed = derive_seed(cfg.seed, kStreamWorstCase, gi);

  // Restart selection by worst-case target performance.
  Matrix selected_rep;
  TargetTask worst_task;
  double worst_risk = 0;
  if (is_ols) {
    selected_rep = Matrix::Zero(env.d, 0);
    std::tie(worst_task, worst_risk) =
        worst_case_target(selected_rep, env, search_runner, wopt);
    out.summary.selected_restart = 0;
  } else {
    int best = -1;
    double best_risk = std::numeric_limits<double>::infinity();
    for (int r = 0; r < static_cast<int>(trained->restarts.size()); ++r) {
      auto [task_r, risk_r] = worst_case_target(trained->restarts[r].B0, env,
                                                search_runner, wopt);
      if (log)
        *log << "    " << method << " restart " << r
             << " worst-case risk " << risk_r << "\n";
      if (risk_r < best_risk) {
        best_risk = risk_r;
        best = r;
        worst_task = task_r;
      }
    }
    selected_rep = trained->restarts[best].B0;
    worst_risk = best_risk;
    out.summary.selected_restart = best;
    out.summary.sine = sine_principal_angle(selected_rep, env.Bstar);
  }
  if (is_ols) out.summary.sine = std::numeric_limits<double>::quiet_NaN();
  out.summary.worst_case_search_risk = worst_risk;

  // Final evaluation on the selected worst-case task.
  MethodRunner eval_runner =
      is_ols ? make_ols_runner(env) : make_adapt_runner(env, cfg.t_pgd);
  std::vector<ExperimentRecord> recs(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](int rep) {
    std::uint64_t s =
        derive_seed(cfg.seed, kStreamEval + 16 * (mid + 1), gi, rep);
    auto t0 = std::chrono::steady_clock::now();
    Dataset ds = sample_dataset(env, worst_task.theta_star, n_T, -1, s);
    double risk = eval_runner(selected_rep, worst_task, ds);
    auto t1 = std::chrono::steady_clock::now();
    ExperimentRecord r;
    r.method = method;
    r.d = env.d;
    r.n_T = n_T;
    r.replication = rep;
    r.excess_risk = risk;
    r.sine_dist = out.summary.sine;
    r.wall_time_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    r.seed = s;
    r.config_hash = hash;
    recs[rep] = std::move(r);
  });
  out.records = std::move(recs);

  std::vector<double> risks;
  risks.reserve(out.records.size());
  for (const ExperimentRecord& r : out.records) risks.push_back(r.excess_risk);
  out.summary.median_risk = median(risks);
  out.summary.mean_risk = 0;
  for (double v : risks) out.summary.mean_risk += v;
  out.summary.mean_risk /= std::max<std::size_t>(1, risks.size());
  return out;
}

}  // namespace

SeparationResult run_separation(const ExperimentConfig& cfg,
                                std::ostream* log) {
  SeparationResult result;
  result.hash = config_hash(cfg);

  for (int gi = 0; gi < static_cast<int>(cfg.n_T_grid.size()); ++gi) {
    const int n_T = cfg.n_T_grid[gi];
    const int d = std::max(cfg.k + 1,
                           static_cast<int>(std::lround(cfg.d_multiplier * n_T)));
    const int n_S = std::max(1, static_cast<int>(std::lround(cfg.n_S_multiplier * d)));
    if (log)
      *log << "[grid " << gi + 1 << "/" << cfg.n_T_grid.size() << "] n_T=" << n_T
           << " d=" << d << " n_S=" << n_S << " T=" << cfg.T << "\n";

    try {
      HardCaseSpec spec = HardCaseSpec::corollary_preset(d, cfg.k);
      TaskEnvironment env = make_hard_env(spec, cfg.T, cfg.noise_sigma,
                                          derive_seed(cfg.seed, kStreamEnv, gi));

      // Stream source datasets into sufficient statistics.
      std::vector<TaskStats> stats(cfg.T);
      parallel_for(cfg.T, cfg.threads, [&](int t) {
        Dataset ds =
            sample_dataset(env, env.task_theta(t), n_S, t,
                           derive_seed(cfg.seed, kStreamSourceData, gi, t));
        stats[t] = compute_task_stats(ds);
      });

      double lambda = cfg.lambda, gamma = cfg.gamma;
      if (lambda < 0 || gamma < 0) {
        auto [dl, dg] = default_source_regularization(env, n_S);
        if (lambda < 0) lambda = dl;
        if (gamma < 0) gamma = dg;
      }

      bool want_adapt = false, want_frozen = false;
      for (const std::string& m : cfg.methods) {
        if (m == "adaptrep") want_adapt = true;
        if (m == "frozenrep") want_frozen = true;
      }

      SourceSolution adapt_sol, frozen_sol;
      std::vector<int> train_jobs;
      if (want_adapt) train_jobs.push_back(0);
      if (want_frozen) train_jobs.push_back(1);
      parallel_for(static_cast<int>(train_jobs.size()), cfg.threads, [&](int j) {
        SourceOptions sopt;
        sopt.restarts = cfg.restarts;
        sopt.max_iters = cfg.source_iters;
        sopt.balance_weight = cfg.balance_weight;
        sopt.seed = derive_seed(cfg.seed, kStreamTrain, gi, train_jobs[j]);
        if (train_jobs[j] == 0)
          adapt_sol = train_source(stats, d, cfg.k, SourceObjective::adaptrep,
                                   lambda, gamma, sopt);
        else
          frozen_sol = train_source(stats, d, cfg.k, SourceObjective::frozenrep,
                                    0.0, 0.0, sopt);
      });
      if (log && want_adapt)
        *log << "  adaptrep train_loss=" << adapt_sol.train_loss << "\n";
      if (log && want_frozen)
        *log << "  frozenrep train_loss=" << frozen_sol.train_loss << "\n";

      for (const std::string& method : cfg.methods) {
        const SourceSolution* sol = method == "adaptrep" ? &adapt_sol
                                    : method == "frozenrep" ? &frozen_sol
                                                            : nullptr;
        CellOutput cell = run_cell_method(cfg, result.hash, env, stats, method,
                                          gi, n_T, sol, log);
        if (log)
          *log << "  " << method << ": sine=" << cell.summary.sine
               << " median_risk=" << cell.summary.median_risk << "\n";
        result.cells.push_back(cell.summary);
        result.records.insert(result.records.end(), cell.records.begin(),
                              cell.records.end());
      }
    } catch (const std::exception& e) {
      for (const std::string& method : cfg.methods) {
        CellSummary cs;
        cs.method = method;
        cs.n_T = n_T;
        cs.d = d;
        cs.error = e.what();
        cs.sine = std::numeric_limits<double>::quiet_NaN();
        cs.median_risk = std::numeric_limits<double>::quiet_NaN();
        cs.mean_risk = std::numeric_limits<double>::quiet_NaN();
        result.cells.push_back(cs);
        ExperimentRecord r;
        r.method = method;
        r.d = d;
        r.n_T = n_T;
        r.replication = -1;
        r.excess_risk = std::numeric_limits<double>::quiet_NaN();
        r.sine_dist = std::numeric_limits<double>::quiet_NaN();
        r.config_hash = result.hash;
        r.error = e.what();
        result.records.push_back(std::move(r));
      }
      if (log) *log << "  cell failed: " << e.what() << "\n";
    }
  }

  std::sort(result.records.begin(), result.records.end(),
            [](const ExperimentRecord& a, const ExperimentRecord& b) {
              if (a.method != b.method) return a.method < b.method;
              if (a.n_T != b.n_T) return a.n_T < b.n_T;
              return a.replication < b.replication;
            });
  std::sort(result.cells.begin(), result.cells.end(),
            [](const CellSummary& a, const CellSummary& b) {
              if (a.method != b.method) return a.method < b.method;
              return a.n_T < b.n_T;
            });
  return result;
}

void write_separation_outputs(const SeparationResult& result,
                              const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_records_csv(result.records, out_dir / "records.csv");

  std::ofstream sine_csv(out_dir / "sine.csv");
  sine_csv << "method,n_T,d,sine\n";
  std::ofstream risk_csv(out_dir / "risk.csv");
  risk_csv << "method,n_T,d,median_excess_risk,mean_excess_risk,"
              "worst_case_search_risk\n";
  for (const CellSummary& c : result.cells) {
    sine_csv << c.method << "," << c.n_T << "," << c.d << ","
             << format_double(c.sine) << "\n";
    risk_csv << c.method << "," << c.n_T << "," << c.d << ","
             << format_double(c.median_risk) << ","
             << format_double(c.mean_risk) << ","
             << format_double(c.worst_case_search_risk) << "\n";
  }
  sine_csv.close();
  risk_csv.close();

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::vector<std::string> methods;
  for (const CellSummary& c : result.cells)
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
      methods.push_back(c.method);

  std::vector<PlotSeries> sine_series, risk_series;
  int ci = 0;
  for (const std::string& m : methods) {
    PlotSeries ss{m, {}, {}, colors[ci % 4]};
    PlotSeries rs{m, {}, {}, colors[ci % 4]};
    for (const CellSummary& c : result.cells) {
      if (c.method != m) continue;
      if (std::isfinite(c.sine)) {
        ss.x.push_back(c.n_T);
        ss.y.push_back(c.sine);
      }
      if (std::isfinite(c.median_risk)) {
        rs.x.push_back(c.n_T);
        rs.y.push_back(c.median_risk);
      }
    }
    if (!ss.x.empty()) sine_series.push_back(std::move(ss));
    if (!rs.x.empty()) risk_series.push_back(std::move(rs));
    ++ci;
  }
  PlotOptions sopt;
  sopt.title = "Representation alignment";
  sopt.x_label = "n_T (= d)";
  sopt.y_label = "sine of principal angle";
  write_svg_lineplot(out_dir / "sine.svg", sine_series, sopt);
  PlotOptions ropt;
  ropt.title = "Worst-case excess risk";
  ropt.x_label = "n_T (= d)";
  ropt.y_label = "median excess risk";
  ropt.log_y = true;
  write_svg_lineplot(out_dir / "risk.svg", risk_series, ropt);
}

RateScalingResult run_rate_scaling(const RateScalingConfig& cfg,
                                   std::ostream* log) {
  const int P = static_cast<int>(cfg.T_grid.size());
  std::vector<std::vector<double>> risks(P,
                                         std::vector<double>(cfg.replications));
  struct Job {
    int pi, rep;
  };
  std::vector<Job> jobs;
  for (int pi = 0; pi < P; ++pi)
    for (int rep = 0; rep < cfg.replications; ++rep) jobs.push_back({pi, rep});

  parallel_for(static_cast<int>(jobs.size()), cfg.threads, [&](int ji) {
    const Job job = jobs[ji];
    const int T = cfg.T_grid[job.pi];
    std::uint64_t s = derive_seed(cfg.seed, kStreamRate, job.pi, job.rep);
    TaskEnvironment env =
        make_linear_env(cfg.d, cfg.k, T, /*delta0=*/0.0, cfg.noise_sigma,
                        SigmaSpec::Identity(), derive_seed(s, 1));
    std::vector<TaskStats> stats(T);
    for (int t = 0; t < T; ++t)
      stats[t] = compute_task_stats(sample_dataset(
          env, env.task_theta(t), cfg.n_S, t, derive_seed(s, 2, t)));
    auto [lambda, gamma] = default_source_regularization(env, cfg.n_S);
    SourceOptions sopt;
    sopt.restarts = cfg.restarts;
    sopt.max_iters = cfg.source_iters;
    sopt.seed = derive_seed(s, 3);
    SourceSolution sol = train_source(stats, cfg.d, cfg.k,
                                      SourceObjective::adaptrep, lambda, gamma,
                                      sopt);
    TargetTask task = sample_target_task(env, derive_seed(s, 4));
    Dataset ds =
        sample_dataset(env, task.theta_star, cfg.n_T, -1, derive_seed(s, 5));
    AdaptSpec aspec;
    aspec.mode = AdaptMode::full_adapt;
    aspec.beta_scale = std::sqrt(static_cast<double>(cfg.n_T));
    aspec.c1 = env.delta0;  // = 0: only the head adapts
    aspec.c2 = env.target_w_radius;
    aspec.t_pgd = cfg.t_pgd;
    FineTuneResult res = finetune_linear(sol.B0, ds, aspec);
    risks[job.pi][job.rep] =
        excess_risk_quadratic(res.theta_hat, task.theta_star, env.Sigma);
  });

  RateScalingResult out;
  for (int pi = 0; pi < P; ++pi) {
    out.n_S_T.push_back(static_cast<double>(cfg.n_S) * cfg.T_grid[pi]);
    out.median_risk.push_back(median(risks[pi]));
    if (log)
      *log << "n_S*T=" << out.n_S_T.back()
           << " median_risk=" << out.median_risk.back() << "\n";
  }
  out.slope = loglog_slope(out.n_S_T, out.median_risk);
  if (log) *log << "log-log slope=" << out.slope << "\n";
  return out;
}

}  // namespace replab
